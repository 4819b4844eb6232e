#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "oss_mentor/environment.hpp"
#include "oss_mentor/policy.hpp"

namespace oss_mentor {

struct TrainConfig {
    double lr_actor = 0.01;
    double lr_critic = 0.01;
    int batch_size = 10;
    double epsilon = 0.3;
    double gamma = 0.9;
    int episodes = 500;
    int horizon = 18;
    double min_old_prob = 1e-5;
    int epochs = 4;
    std::size_t hidden = 64;
    std::uint64_t seed = 0;

    void validate() const;
};

/// When parameters are updated within an episode.
enum class UpdateSchedule {
    EveryBatch,  // every batch_size steps, remainder at episode end
    EndOfEpisode // once per episode, the per-episode ablation baseline
};

struct Transition {
    RealVector state;
    RealVector raw_sample;
    ActionVector action;
    double old_log_prob = 0.0;  // at collection time, never recomputed
    double reward = 0.0;        // learning signal (scaled reward)
    double value = 0.0;         // critic estimate at collection time
};

struct AdvantageBatch {
    std::vector<double> returns;     // discounted return-to-go within the segment
    std::vector<double> advantages;  // returns - values, batch-normalized when size > 1
};

/// `bootstrap_value` is the critic's estimate of the state after the last
/// transition; 0 when the segment ends the episode. Throws InputError on an
/// empty buffer.
AdvantageBatch compute_advantages(std::span<const Transition> buffer, double gamma, bool normalize = true,
                                  double bootstrap_value = 0.0);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A) with ratio =
/// exp(new - max(old, log(min_old_prob))). Throws std::domain_error if the
/// ratio is not finite.
double clipped_surrogate(double new_log_prob, double old_log_prob, double advantage, double epsilon,
                         double min_old_prob = 1e-5);

/// d clipped_surrogate / d new_log_prob (0 on the clipped branch).
double clipped_surrogate_gradient(double new_log_prob, double old_log_prob, double advantage, double epsilon,
                                  double min_old_prob = 1e-5);

/// Thrown when an update leaves non-finite parameters.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// `epochs` full-batch passes: gradient ascent on the mean clipped surrogate
/// for the actor, descent on mean squared error to the returns for the critic.
void update_policy(PolicyParams& policy, std::span<const Transition> batch, const TrainConfig& config,
                   double bootstrap_value = 0.0);

struct EpisodeReport {
    std::vector<double> rewards;        // raw per-step rewards
    std::vector<double> contributions;  // per-step W . a_d
    std::vector<double> cumulative;     // running contribution after each step
    int updates = 0;

    double mean_reward() const;
    double mean_contribution() const;
};

/// Rolls the policy from env.reset() to the horizon, updating per `schedule`.
/// Rewards are divided by `reward_scale` before entering the learning signal.
EpisodeReport train_episode(ContributionEnv& env, PolicyParams& policy, const TrainConfig& config, Rng& rng,
                            double reward_scale, UpdateSchedule schedule = UpdateSchedule::EveryBatch);

/// Same rollout with a single update after the full episode.
EpisodeReport train_episode_ppo_variant(ContributionEnv& env, PolicyParams& policy, const TrainConfig& config,
                                        Rng& rng, double reward_scale);

/// W . action_caps (1 if that is 0): the largest single-step contribution the action map allows.
double default_reward_scale(const ContributionEnv& env);

struct CurvePoint {
    int episode = 0;
    double mean_step_contribution = 0.0;
    double mean_reward = 0.0;
};

struct TrainResult {
    PolicyParams policy;
    std::vector<CurvePoint> curve;
};

std::shared_ptr<const PoolIndex> build_pool_index(const ContributorPool& pool, const WeightVector& weights);

/// Runs `config.episodes` episodes on a fresh environment over `pool`
/// (annotated here with `weights`); the environment horizon is config.horizon.
/// Deterministic for a fixed seed.
TrainResult train(const ContributorPool& pool, const WeightVector& weights, EnvConfig env_config,
                  const TrainConfig& config, UpdateSchedule schedule = UpdateSchedule::EveryBatch,
                  std::optional<PolicyParams> initial = std::nullopt);

/// Uniform baseline: a_d[d] = round(u * scale[d]), u ~ U[0,1].
EpisodeReport random_policy_episode(ContributionEnv& env, Rng& rng);

void write_learning_curve(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

}  // namespace oss_mentor
