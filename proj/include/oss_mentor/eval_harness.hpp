#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "oss_mentor/contribution_metric.hpp"
#include "oss_mentor/data_ingest.hpp"
#include "oss_mentor/environment.hpp"
#include "oss_mentor/policy.hpp"
#include "oss_mentor/trainer.hpp"

namespace oss_mentor {

// ============================================================================
// Experiment configuration
// ============================================================================

/// Where a project's trajectories come from: a dataset file written by
/// `ossmentor ingest` / `synth`, or an inline synthetic generator.
struct ProjectSpec {
    std::string name;
    std::optional<std::filesystem::path> dataset;
    std::optional<SyntheticConfig> synthetic;
    std::uint64_t synthetic_seed = 7;
    std::optional<std::filesystem::path> weights;  // precomputed weights file
};

struct EvalConfig {
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    std::size_t developers = 10;
    std::vector<double> epsilons = {0.1, 0.2, 0.3};
    std::set<int> disturb_months = {7, 8, 9};
    std::optional<std::string> case_contributor;
    int case_horizon = 18;
    std::map<std::string, std::filesystem::path> checkpoints;  // method -> checkpoint, skips training
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<ProjectSpec> projects;
    std::optional<std::filesystem::path> parents;  // default parent map when absent
    std::size_t bins = 10;
    std::size_t pool_size = 120;
    RankKey rank;
    EnvConfig env;
    TrainConfig train;
    EvalConfig eval;

    void validate() const;
};

/// Parses an experiment config. Relative paths resolve against `base_dir`.
///
///   {"name", "projects": [{"name", "dataset" | "synthetic": {...}, "synthetic_seed", "weights"}],
///    "parents", "bins", "pool_size", "rank_dimension",
///    "env": {"sigma", "k0", "growth", "max_rounds", "horizon"},
///    "train": {"lr" | "lr_actor"/"lr_critic", "batch_size", "epsilon", "gamma", "episodes",
///              "horizon", "seed", "epochs", "hidden", "min_old_prob"},
///    "eval": {"seeds", "developers", "epsilons", "disturb_months", "case_contributor",
///             "case_horizon", "checkpoints": {"mentor": path, "ppo_variant": path}}}
///
/// A single project may also be given with top-level "dataset" or "synthetic".
ExperimentConfig experiment_config_from_string(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

SyntheticConfig synthetic_config_from_string(const std::string& text);

// ============================================================================
// Prepared projects
// ============================================================================

struct PreparedProject {
    std::string name;
    ProjectDataset dataset;
    ContributorPool pool;  // top contributors, unannotated
    WeightVector weights;
    std::shared_ptr<const PoolIndex> index;
};

PreparedProject prepare_project(const ProjectSpec& spec, const ExperimentConfig& config);

/// splitmix64 mix of (base, stream), used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Order-sensitive FNV-1a digest of contributor ids, month indices and counts.
std::uint64_t trajectory_checksum(std::span<const MonthlyTrajectory> trajectories);

// ============================================================================
// Rollouts
// ============================================================================

struct RolloutOptions {
    std::optional<ActionVector> first_month;  // reset from this action instead of the pool mean
    std::set<int> disturb_months;             // months whose observed state is reset to the initial one
};

struct Rollout {
    std::vector<double> contributions;  // per month, W . a_d
    std::vector<double> rewards;
    std::vector<double> cumulative;
    std::vector<EnvState> observed;     // state the policy acted on at each month
    std::vector<bool> disturbed;

    double mean_contribution() const;
    double final_cumulative() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

/// Rolls a stochastic policy to the environment horizon without updating it.
/// Throws InputError if a disturb month is outside [0, horizon).
Rollout rollout_policy(ContributionEnv& env, const ActorParams& actor, Rng& rng, const RolloutOptions& options = {});

/// Same shape as rollout_policy for the uniform baseline.
Rollout rollout_random(ContributionEnv& env, Rng& rng, const RolloutOptions& options = {});

/// W . a over the first `horizon` months of a real trajectory, zero-padded.
Rollout replay_real(const MonthlyTrajectory& trajectory, const WeightVector& weights, int horizon);

// ============================================================================
// Experiments
// ============================================================================

struct MethodRow {
    std::string project;
    std::string method;
    double mean = 0.0;    // mean single-step contribution over seeds
    double stddev = 0.0;  // population std over seeds
    double final_cumulative = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed;
    std::optional<std::string> error;
};

/// A CSV-shaped series, written as `<name>.csv`.
struct SeriesTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ExperimentReport {
    std::string experiment;
    std::string kind;
    std::vector<MethodRow> rows;
    std::vector<SeriesTable> series;
    std::map<std::string, std::string> notes;
};

/// Methods reported by the contribution table.
inline const std::vector<std::string> kTableMethods = {"mentor", "ppo_variant", "random", "real"};

/// Mean single-step contribution of mentor, ppo_variant, random and real per
/// project, each averaged over the evaluation seeds. A method whose
/// checkpoint is missing or unreadable yields an error row.
ExperimentReport run_contribution_table(const ExperimentConfig& config);

/// Mentor trained at each clip epsilon; rows per epsilon plus averaged learning curves.
ExperimentReport run_epsilon_sweep(const ExperimentConfig& config);

/// Undisturbed vs disturbed mentor rollouts (paired rng) against the real
/// replay, for the first project.
ExperimentReport run_intervention(const ExperimentConfig& config);

/// Month-by-month real vs mentor contribution for one contributor of the first project.
ExperimentReport run_case_study(const ExperimentConfig& config, const std::optional<std::string>& contributor = {});

/// Writes report.json and one CSV per series into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace oss_mentor
