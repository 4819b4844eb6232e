#include "oss_mentor/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "oss_mentor/csv.hpp"

namespace oss_mentor {

using nlohmann::json;

// ============================================================================
// Configuration parsing
// ============================================================================

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw InputError(where + ": expected a JSON object");
    for (const auto& [key, _] : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw InputError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& target, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(where + ": '" + key + "' has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

SyntheticConfig parse_synthetic(const json& obj) {
    const std::string where = "synthetic config";
    check_keys(obj, {"project", "schema", "rates", "contributors", "horizon", "growth", "activity", "skill_shape",
                     "start_month"},
               where);
    SyntheticConfig cfg;
    read_opt(obj, "project", cfg.project, where);
    read_opt(obj, "schema", cfg.schema, where);
    read_opt(obj, "rates", cfg.rates, where);
    read_opt(obj, "contributors", cfg.contributors, where);
    read_opt(obj, "horizon", cfg.horizon, where);
    read_opt(obj, "growth", cfg.growth, where);
    read_opt(obj, "activity", cfg.activity, where);
    read_opt(obj, "skill_shape", cfg.skill_shape, where);
    read_opt(obj, "start_month", cfg.start_month, where);
    return cfg;
}

ProjectSpec parse_project(const json& obj, const std::filesystem::path& base, const std::string& where) {
    check_keys(obj, {"name", "dataset", "synthetic", "synthetic_seed", "weights"}, where);
    ProjectSpec spec;
    read_opt(obj, "name", spec.name, where);
    if (obj.contains("dataset")) spec.dataset = resolve(base, obj.at("dataset").get<std::string>());
    if (obj.contains("synthetic")) spec.synthetic = parse_synthetic(obj.at("synthetic"));
    read_opt(obj, "synthetic_seed", spec.synthetic_seed, where);
    if (obj.contains("weights")) spec.weights = resolve(base, obj.at("weights").get<std::string>());
    if (spec.dataset.has_value() == spec.synthetic.has_value()) {
        throw InputError(where + ": exactly one of 'dataset' or 'synthetic' is required");
    }
    if (spec.name.empty()) spec.name = spec.synthetic ? spec.synthetic->project : spec.dataset->stem().string();
    return spec;
}

}  // namespace

SyntheticConfig synthetic_config_from_string(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw InputError("synthetic config: invalid JSON");
    return parse_synthetic(doc);
}

ExperimentConfig experiment_config_from_string(const std::string& text, const std::filesystem::path& base) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw InputError("experiment config: invalid JSON");
    const std::string where = "experiment config";
    check_keys(doc, {"name", "projects", "dataset", "synthetic", "synthetic_seed", "weights", "parents", "bins",
                     "pool_size", "rank_dimension", "env", "train", "eval"},
               where);

    ExperimentConfig cfg;
    read_opt(doc, "name", cfg.name, where);
    try {
        if (doc.contains("projects")) {
            if (doc.contains("dataset") || doc.contains("synthetic")) {
                throw InputError(where + ": give either 'projects' or a single top-level project");
            }
            std::size_t i = 0;
            for (const auto& p : doc.at("projects")) {
                cfg.projects.push_back(parse_project(p, base, where + ": projects[" + std::to_string(i++) + "]"));
            }
        } else {
            json single = json::object();
            for (const char* key : {"dataset", "synthetic", "synthetic_seed", "weights"}) {
                if (doc.contains(key)) single[key] = doc.at(key);
            }
            cfg.projects.push_back(parse_project(single, base, where));
        }
        if (doc.contains("parents")) cfg.parents = resolve(base, doc.at("parents").get<std::string>());
        if (doc.contains("rank_dimension")) cfg.rank.dimension = doc.at("rank_dimension").get<std::string>();
    } catch (const json::exception& e) {
        throw InputError(where + ": " + e.what());
    }
    read_opt(doc, "bins", cfg.bins, where);
    read_opt(doc, "pool_size", cfg.pool_size, where);

    std::optional<int> env_horizon;
    std::optional<int> train_horizon;
    if (doc.contains("env")) {
        const auto& env = doc.at("env");
        const std::string w = where + ": env";
        check_keys(env, {"sigma", "k0", "growth", "max_rounds", "horizon"}, w);
        read_opt(env, "sigma", cfg.env.sigma, w);
        read_opt(env, "k0", cfg.env.match.k0, w);
        read_opt(env, "growth", cfg.env.match.growth, w);
        read_opt(env, "max_rounds", cfg.env.match.max_rounds, w);
        if (env.contains("horizon")) read_opt(env, "horizon", env_horizon.emplace(), w);
    }
    if (doc.contains("train")) {
        const auto& tr = doc.at("train");
        const std::string w = where + ": train";
        check_keys(tr, {"lr", "lr_actor", "lr_critic", "batch_size", "epsilon", "gamma", "episodes", "horizon", "seed",
                        "epochs", "hidden", "min_old_prob"},
                   w);
        if (tr.contains("lr")) {
            read_opt(tr, "lr", cfg.train.lr_actor, w);
            cfg.train.lr_critic = cfg.train.lr_actor;
        }
        read_opt(tr, "lr_actor", cfg.train.lr_actor, w);
        read_opt(tr, "lr_critic", cfg.train.lr_critic, w);
        read_opt(tr, "batch_size", cfg.train.batch_size, w);
        read_opt(tr, "epsilon", cfg.train.epsilon, w);
        read_opt(tr, "gamma", cfg.train.gamma, w);
        read_opt(tr, "episodes", cfg.train.episodes, w);
        read_opt(tr, "seed", cfg.train.seed, w);
        read_opt(tr, "epochs", cfg.train.epochs, w);
        read_opt(tr, "hidden", cfg.train.hidden, w);
        read_opt(tr, "min_old_prob", cfg.train.min_old_prob, w);
        if (tr.contains("horizon")) read_opt(tr, "horizon", train_horizon.emplace(), w);
    }
    if (env_horizon && train_horizon && *env_horizon != *train_horizon) {
        throw InputError(where + ": env.horizon and train.horizon disagree");
    }
    const int horizon = train_horizon.value_or(env_horizon.value_or(cfg.train.horizon));
    cfg.train.horizon = horizon;
    cfg.env.horizon = horizon;

    if (doc.contains("eval")) {
        const auto& ev = doc.at("eval");
        const std::string w = where + ": eval";
        check_keys(ev, {"seeds", "developers", "epsilons", "disturb_months", "case_contributor", "case_horizon",
                        "checkpoints"},
                   w);
        read_opt(ev, "seeds", cfg.eval.seeds, w);
        read_opt(ev, "developers", cfg.eval.developers, w);
        read_opt(ev, "epsilons", cfg.eval.epsilons, w);
        read_opt(ev, "disturb_months", cfg.eval.disturb_months, w);
        if (ev.contains("case_contributor")) read_opt(ev, "case_contributor", cfg.eval.case_contributor.emplace(), w);
        read_opt(ev, "case_horizon", cfg.eval.case_horizon, w);
        if (ev.contains("checkpoints")) {
            std::map<std::string, std::string> paths;
            read_opt(ev, "checkpoints", paths, w);
            for (const auto& [method, p] : paths) cfg.eval.checkpoints[method] = resolve(base, p);
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read experiment config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return experiment_config_from_string(buf.str(), path.parent_path());
}

void ExperimentConfig::validate() const {
    if (projects.empty()) throw InputError("experiment config: no projects");
    if (bins < 2) throw InputError("experiment config: bins must be at least 2");
    if (pool_size < 1) throw InputError("experiment config: pool_size must be at least 1");
    env.validate();
    train.validate();
    if (eval.seeds.empty()) throw InputError("experiment config: eval.seeds is empty");
    if (eval.developers < 1) throw InputError("experiment config: eval.developers must be at least 1");
    if (eval.case_horizon < 1) throw InputError("experiment config: eval.case_horizon must be at least 1");
    for (double e : eval.epsilons) {
        if (!(e > 0.0 && e < 1.0)) throw InputError("experiment config: sweep epsilons must lie in (0, 1)");
    }
    for (const auto& [method, _] : eval.checkpoints) {
        if (method != "mentor" && method != "ppo_variant") {
            throw InputError("experiment config: checkpoints only apply to mentor and ppo_variant, not '" + method + "'");
        }
    }
}

// ============================================================================
// Project preparation
// ============================================================================

PreparedProject prepare_project(const ProjectSpec& spec, const ExperimentConfig& config) {
    auto dataset = spec.synthetic ? generate_synthetic(*spec.synthetic, spec.synthetic_seed) : read_dataset(*spec.dataset);
    dataset.validate();
    auto pool = top_contributors(dataset, config.pool_size, config.rank);

    auto weights = [&] {
        if (spec.weights) {
            auto file = read_weights(*spec.weights);
            if (file.schema != dataset.schema) {
                throw InputError("weights file " + spec.weights->string() + " does not match the dataset schema");
            }
            return std::move(file.weights);
        }
        const auto parents =
            config.parents ? read_parent_map(*config.parents, dataset.schema) : default_parent_map(dataset.schema);
        return compute_weights(dataset, parents, config.bins).weights;
    }();
    auto index = build_pool_index(pool, weights);
    return {spec.name, std::move(dataset), std::move(pool), std::move(weights), std::move(index)};
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t trajectory_checksum(std::span<const MonthlyTrajectory> trajectories) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& t : trajectories) {
        mix(t.contributor_id.data(), t.contributor_id.size());
        for (const auto& m : t.months) {
            mix(&m.index, sizeof m.index);
            mix(m.counts.data(), m.counts.size() * sizeof(std::int64_t));
        }
    }
    return h;
}

// ============================================================================
// Rollouts
// ============================================================================

double Rollout::mean_contribution() const {
    if (contributions.empty()) return 0.0;
    return std::accumulate(contributions.begin(), contributions.end(), 0.0) / static_cast<double>(contributions.size());
}

namespace {

template <typename ChooseAction>
Rollout run_rollout(ContributionEnv& env, const RolloutOptions& options, ChooseAction&& choose) {
    const int horizon = env.config().horizon;
    for (int m : options.disturb_months) {
        if (m < 0 || m >= horizon) {
            throw InputError("disturb month " + std::to_string(m) + " is outside [0, " + std::to_string(horizon) + ")");
        }
    }
    Rollout out;
    EnvState state = options.first_month ? env.reset(*options.first_month) : env.reset();
    const EnvState initial = state;
    for (int t = 0; t < horizon; ++t) {
        const bool disturb = options.disturb_months.count(state.month_index) > 0;
        if (disturb) state = ContributionEnv::perturb_state(state, initial);
        out.observed.push_back(state);
        out.disturbed.push_back(disturb);
        auto outcome = env.step(state, choose(state));
        out.contributions.push_back(outcome.contribution);
        out.rewards.push_back(outcome.reward);
        out.cumulative.push_back(env.cumulative());
        state = std::move(outcome.next_state);
    }
    return out;
}

}  // namespace

Rollout rollout_policy(ContributionEnv& env, const ActorParams& actor, Rng& rng, const RolloutOptions& options) {
    if (actor.state_dim() != env.state_dimension() || actor.action_dim() != env.dimensions()) {
        throw InputError("policy shape does not match the environment");
    }
    const auto& scale = env.pool().action_caps();
    return run_rollout(env, options, [&](const EnvState& s) {
        return sample_action(actor_forward(actor, s.features()), rng, scale).action;
    });
}

Rollout rollout_random(ContributionEnv& env, Rng& rng, const RolloutOptions& options) {
    const auto& scale = env.pool().action_caps();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return run_rollout(env, options, [&](const EnvState&) {
        ActionVector a(scale.size());
        for (std::size_t d = 0; d < scale.size(); ++d) a[d] = std::llround(unit(rng) * scale[d]);
        return a;
    });
}

Rollout replay_real(const MonthlyTrajectory& trajectory, const WeightVector& weights, int horizon) {
    if (horizon < 1) throw InputError("replay horizon must be at least 1");
    Rollout out;
    double running = 0.0;
    for (int t = 0; t < horizon; ++t) {
        const auto i = static_cast<std::size_t>(t);
        const double c = i < trajectory.months.size() ? contribution(weights, trajectory.months[i].counts) : 0.0;
        running += c;
        out.contributions.push_back(c);
        out.rewards.push_back(0.0);
        out.cumulative.push_back(running);
        out.disturbed.push_back(false);
    }
    return out;
}

// ============================================================================
// Experiments
// ============================================================================

namespace {

struct SeedResult {
    double mean = 0.0;
    double final_cumulative = 0.0;
};

std::vector<std::size_t> pick_developers(const ProjectDataset& dataset, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dataset.trajectories.size(); ++i) {
        if (!dataset.trajectories[i].months.empty()) idx.push_back(i);
    }
    if (idx.empty()) throw InputError("dataset has no trajectories to evaluate on");
    Rng rng(derive_seed(seed, 1));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(n, idx.size()));
    return idx;
}

EnvConfig eval_env_config(const ExperimentConfig& config, int horizon) {
    EnvConfig e = config.env;
    e.horizon = horizon;
    return e;
}

ActorParams obtain_actor(const std::string& method, const PreparedProject& project, const ExperimentConfig& config,
                         std::uint64_t seed, std::optional<double> epsilon = {}) {
    if (auto it = config.eval.checkpoints.find(method); it != config.eval.checkpoints.end()) {
        if (!std::filesystem::exists(it->second)) throw InputError("checkpoint not found: " + it->second.string());
        return read_checkpoint(it->second).actor;
    }
    TrainConfig tc = config.train;
    tc.seed = seed;
    if (epsilon) tc.epsilon = *epsilon;
    const auto schedule = method == "ppo_variant" ? UpdateSchedule::EndOfEpisode : UpdateSchedule::EveryBatch;
    return train(project.pool, project.weights, config.env, tc, schedule).policy.actor;
}

template <typename PerDeveloper>
SeedResult evaluate_developers(const PreparedProject& project, const std::vector<std::size_t>& devs,
                               PerDeveloper&& run) {
    SeedResult r;
    for (std::size_t i = 0; i < devs.size(); ++i) {
        const Rollout roll = run(i, project.dataset.trajectories[devs[i]]);
        r.mean += roll.mean_contribution();
        r.final_cumulative += roll.final_cumulative();
    }
    r.mean /= static_cast<double>(devs.size());
    r.final_cumulative /= static_cast<double>(devs.size());
    return r;
}

void summarize(MethodRow& row, const std::vector<SeedResult>& results) {
    row.per_seed.clear();
    row.mean = row.final_cumulative = 0.0;
    for (const auto& r : results) {
        row.per_seed.push_back(r.mean);
        row.mean += r.mean;
        row.final_cumulative += r.final_cumulative;
    }
    const double n = static_cast<double>(results.size());
    row.mean /= n;
    row.final_cumulative /= n;
    double var = 0.0;
    for (double v : row.per_seed) var += (v - row.mean) * (v - row.mean);
    row.stddev = std::sqrt(var / n);
}

SeedResult evaluate_method(const std::string& method, const PreparedProject& project, const ExperimentConfig& config,
                           std::uint64_t seed, std::optional<double> epsilon = {}) {
    const auto devs = pick_developers(project.dataset, config.eval.developers, seed);
    const int horizon = config.train.horizon;
    if (method == "real") {
        return evaluate_developers(project, devs, [&](std::size_t, const MonthlyTrajectory& t) {
            return replay_real(t, project.weights, horizon);
        });
    }
    ContributionEnv env(project.index, project.weights, eval_env_config(config, horizon));
    if (method == "random") {
        return evaluate_developers(project, devs, [&](std::size_t i, const MonthlyTrajectory& t) {
            Rng rng(derive_seed(seed, 100 + i));
            return rollout_random(env, rng, {t.months.front().counts, {}});
        });
    }
    const ActorParams actor = obtain_actor(method, project, config, seed, epsilon);
    return evaluate_developers(project, devs, [&](std::size_t i, const MonthlyTrajectory& t) {
        Rng rng(derive_seed(seed, 100 + i));
        return rollout_policy(env, actor, rng, {t.months.front().counts, {}});
    });
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

ExperimentReport run_contribution_table(const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;
    report.experiment = config.name;
    report.kind = "contribution_table";
    for (const auto& spec : config.projects) {
        const auto project = prepare_project(spec, config);
        const auto checksum_before = trajectory_checksum(project.dataset.trajectories);
        for (const auto& method : kTableMethods) {
            MethodRow row;
            row.project = project.name;
            row.method = method;
            row.seeds = config.eval.seeds;
            try {
                std::vector<SeedResult> results;
                for (auto seed : config.eval.seeds) results.push_back(evaluate_method(method, project, config, seed));
                summarize(row, results);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            report.rows.push_back(std::move(row));
        }
        if (trajectory_checksum(project.dataset.trajectories) != checksum_before) {
            throw std::logic_error("evaluation modified the input trajectories of " + project.name);
        }
        report.notes["checksum." + project.name] = std::to_string(checksum_before);
    }
    return report;
}

ExperimentReport run_epsilon_sweep(const ExperimentConfig& config) {
    config.validate();
    if (config.eval.epsilons.empty()) throw InputError("epsilon sweep: eval.epsilons is empty");
    ExperimentReport report;
    report.experiment = config.name;
    report.kind = "epsilon_sweep";
    for (const auto& spec : config.projects) {
        const auto project = prepare_project(spec, config);
        SeriesTable curves;
        curves.name = "sweep_curve_" + project.name;
        curves.columns = {"episode"};
        curves.rows.assign(static_cast<std::size_t>(config.train.episodes), {});
        for (std::size_t e = 0; e < curves.rows.size(); ++e) curves.rows[e].push_back(static_cast<double>(e + 1));

        for (double eps : config.eval.epsilons) {
            MethodRow row;
            row.project = project.name;
            row.method = "mentor_eps_" + format_double(eps);
            row.seeds = config.eval.seeds;
            curves.columns.push_back("eps_" + format_double(eps));
            std::vector<double> curve(curves.rows.size(), 0.0);
            std::vector<SeedResult> results;
            for (auto seed : config.eval.seeds) {
                TrainConfig tc = config.train;
                tc.seed = seed;
                tc.epsilon = eps;
                const auto trained = train(project.pool, project.weights, config.env, tc);
                for (std::size_t e = 0; e < curve.size(); ++e) curve[e] += trained.curve[e].mean_step_contribution;

                const auto devs = pick_developers(project.dataset, config.eval.developers, seed);
                ContributionEnv env(project.index, project.weights, eval_env_config(config, config.train.horizon));
                results.push_back(evaluate_developers(project, devs, [&](std::size_t i, const MonthlyTrajectory& t) {
                    Rng rng(derive_seed(seed, 100 + i));
                    return rollout_policy(env, trained.policy.actor, rng, {t.months.front().counts, {}});
                }));
            }
            summarize(row, results);
            for (std::size_t e = 0; e < curve.size(); ++e) {
                curves.rows[e].push_back(curve[e] / static_cast<double>(config.eval.seeds.size()));
            }
            report.rows.push_back(std::move(row));
        }
        report.series.push_back(std::move(curves));
    }
    return report;
}

ExperimentReport run_intervention(const ExperimentConfig& config) {
    config.validate();
    const auto project = prepare_project(config.projects.front(), config);
    const int horizon = config.train.horizon;
    for (int m : config.eval.disturb_months) {
        if (m < 0 || m >= horizon) {
            throw InputError("disturb month " + std::to_string(m) + " is outside [0, " + std::to_string(horizon) + ")");
        }
    }

    ExperimentReport report;
    report.experiment = config.name;
    report.kind = "intervention";
    const auto h = static_cast<std::size_t>(horizon);
    const auto m = project.dataset.dimensions();

    SeriesTable monthly{"intervention",
                        {"month", "real", "undisturbed", "disturbed", "real_cumulative", "undisturbed_cumulative",
                         "disturbed_cumulative"},
                        std::vector<std::vector<double>>(h, std::vector<double>(7, 0.0))};
    SeriesTable trace{"intervention_states", {"seed", "developer", "month", "disturbed", "long_term"}, {}};
    for (std::size_t d = 0; d < m; ++d) trace.columns.push_back("short_term_" + project.dataset.schema[d]);

    std::vector<SeedResult> real_r, undisturbed_r, disturbed_r;
    double samples = 0.0;
    for (auto seed : config.eval.seeds) {
        const ActorParams actor = obtain_actor("mentor", project, config, seed);
        const auto devs = pick_developers(project.dataset, config.eval.developers, seed);
        ContributionEnv env(project.index, project.weights, eval_env_config(config, horizon));

        auto accumulate_series = [&](const Rollout& roll, std::size_t col) {
            for (std::size_t t = 0; t < h; ++t) {
                monthly.rows[t][col] += roll.contributions[t];
                monthly.rows[t][col + 3] += roll.cumulative[t];
            }
        };
        real_r.push_back(evaluate_developers(project, devs, [&](std::size_t, const MonthlyTrajectory& t) {
            auto roll = replay_real(t, project.weights, horizon);
            accumulate_series(roll, 1);
            return roll;
        }));
        undisturbed_r.push_back(evaluate_developers(project, devs, [&](std::size_t i, const MonthlyTrajectory& t) {
            Rng rng(derive_seed(seed, 200 + i));
            auto roll = rollout_policy(env, actor, rng, {t.months.front().counts, {}});
            accumulate_series(roll, 2);
            return roll;
        }));
        disturbed_r.push_back(evaluate_developers(project, devs, [&](std::size_t i, const MonthlyTrajectory& t) {
            Rng rng(derive_seed(seed, 200 + i));
            auto roll = rollout_policy(env, actor, rng, {t.months.front().counts, config.eval.disturb_months});
            accumulate_series(roll, 3);
            for (std::size_t k = 0; k < roll.observed.size(); ++k) {
                const auto& s = roll.observed[k];
                std::vector<double> r{static_cast<double>(seed), static_cast<double>(i), static_cast<double>(k),
                                      roll.disturbed[k] ? 1.0 : 0.0, s.long_term};
                r.insert(r.end(), s.short_term.begin(), s.short_term.end());
                trace.rows.push_back(std::move(r));
            }
            return roll;
        }));
        samples += static_cast<double>(devs.size());
    }
    for (std::size_t t = 0; t < h; ++t) {
        monthly.rows[t][0] = static_cast<double>(t);
        for (std::size_t c = 1; c < 7; ++c) monthly.rows[t][c] /= samples;
    }

    const std::pair<const char*, const std::vector<SeedResult>*> rows[] = {
        {"real", &real_r}, {"undisturbed", &undisturbed_r}, {"disturbed", &disturbed_r}};
    for (const auto& [name, results] : rows) {
        MethodRow row;
        row.project = project.name;
        row.method = name;
        row.seeds = config.eval.seeds;
        summarize(row, *results);
        report.rows.push_back(std::move(row));
    }
    std::string months;
    for (int d : config.eval.disturb_months) months += (months.empty() ? "" : ",") + std::to_string(d);
    report.notes["disturb_months"] = months;
    report.series.push_back(std::move(monthly));
    report.series.push_back(std::move(trace));
    return report;
}

ExperimentReport run_case_study(const ExperimentConfig& config, const std::optional<std::string>& contributor) {
    config.validate();
    const auto project = prepare_project(config.projects.front(), config);
    const auto id = contributor ? contributor : config.eval.case_contributor;

    const MonthlyTrajectory* chosen = nullptr;
    if (id) {
        for (const auto& t : project.dataset.trajectories) {
            if (t.contributor_id == *id) chosen = &t;
        }
        if (!chosen) throw InputError("contributor '" + *id + "' is not in project " + project.name);
    } else {
        chosen = &project.pool.trajectories.front();
    }
    if (chosen->months.empty()) throw InputError("contributor '" + chosen->contributor_id + "' has no months");

    const auto seed = config.eval.seeds.front();
    const ActorParams actor = obtain_actor("mentor", project, config, seed);
    const int horizon = config.eval.case_horizon;
    ContributionEnv env(project.index, project.weights, eval_env_config(config, horizon));
    Rng rng(derive_seed(seed, 300));
    const auto mentor = rollout_policy(env, actor, rng, {chosen->months.front().counts, {}});
    const auto real = replay_real(*chosen, project.weights, horizon);

    ExperimentReport report;
    report.experiment = config.name;
    report.kind = "case_study";
    SeriesTable series{"case_study", {"month", "real_contribution", "mentor_contribution"}, {}};
    for (std::size_t t = 0; t < static_cast<std::size_t>(horizon); ++t) {
        series.rows.push_back({static_cast<double>(t), real.contributions[t], mentor.contributions[t]});
    }
    MethodRow real_row{project.name, "real", real.mean_contribution(), 0.0, real.final_cumulative(), {seed},
                       {real.mean_contribution()}, {}};
    MethodRow mentor_row{project.name, "mentor", mentor.mean_contribution(), 0.0, mentor.final_cumulative(), {seed},
                         {mentor.mean_contribution()}, {}};
    report.rows = {real_row, mentor_row};
    report.notes["contributor"] = chosen->contributor_id;
    report.series.push_back(std::move(series));
    return report;
}

// ============================================================================
// Output
// ============================================================================

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    json rows = json::array();
    for (const auto& r : report.rows) {
        json row = {{"project", r.project}, {"method", r.method}, {"seeds", r.seeds}};
        if (r.error) {
            row["error"] = *r.error;
        } else {
            row["mean"] = r.mean;
            row["stddev"] = r.stddev;
            row["final_cumulative"] = r.final_cumulative;
            row["per_seed"] = r.per_seed;
        }
        rows.push_back(std::move(row));
    }
    json series = json::array();
    for (const auto& s : report.series) series.push_back(s.name + ".csv");
    const json doc = {{"experiment", report.experiment}, {"kind", report.kind}, {"rows", rows},
                      {"series", series},               {"notes", report.notes}};
    {
        std::ofstream out(dir / "report.json");
        if (!out) throw InputError("cannot write " + (dir / "report.json").string());
        out << doc.dump(2) << '\n';
    }

    CsvWriter table(dir / "rows.csv", {"project", "method", "mean", "stddev", "final_cumulative", "error"});
    for (const auto& r : report.rows) {
        if (r.error) {
            table.row(r.project, r.method, "", "", "", *r.error);
        } else {
            table.row(r.project, r.method, r.mean, r.stddev, r.final_cumulative, "");
        }
    }
    for (const auto& s : report.series) {
        CsvWriter csv(dir / (s.name + ".csv"), s.columns);
        for (const auto& row : s.rows) {
            std::vector<std::string> cells;
            for (double v : row) cells.push_back(CsvWriter::format(v));
            csv.row(cells);
        }
    }
}

}  // namespace oss_mentor
