// Acceptance checks for the pipeline. Prints one PASS/FAIL line per criterion
// and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../common/gradient_check.hpp"
#include "../common/weights_oracle.hpp"
#include "oss_mentor/contribution_metric.hpp"
#include "oss_mentor/data_ingest.hpp"
#include "oss_mentor/environment.hpp"
#include "oss_mentor/eval_harness.hpp"
#include "oss_mentor/policy.hpp"
#include "oss_mentor/trainer.hpp"

using namespace oss_mentor;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag)
        : path_(std::filesystem::temp_directory_path() / ("oss_mentor_accept_" + tag + "_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const MethodRow& row_for(const ExperimentReport& report, const std::string& method) {
    for (const auto& r : report.rows) {
        if (r.method == method) {
            if (r.error) throw std::runtime_error(method + " row failed: " + *r.error);
            return r;
        }
    }
    throw std::runtime_error("report has no " + method + " row");
}

std::vector<double> column(const SeriesTable& s, const std::string& name) {
    const auto it = std::find(s.columns.begin(), s.columns.end(), name);
    if (it == s.columns.end()) throw std::runtime_error("series " + s.name + " has no column " + name);
    const auto c = static_cast<std::size_t>(it - s.columns.begin());
    std::vector<double> out;
    for (const auto& r : s.rows) out.push_back(r[c]);
    return out;
}

ExperimentConfig default_synthetic_config() {
    ExperimentConfig cfg;
    cfg.name = "acceptance";
    ProjectSpec spec;
    spec.name = "synthetic";
    spec.synthetic = SyntheticConfig{};
    cfg.projects.push_back(spec);
    return cfg;
}

// ---------------------------------------------------------------------------

Outcome entropy_suite() {
    Outcome o;
    const std::vector<double> uniform4(4, 0.25);
    o.require(shannon_entropy(uniform4) == 2.0, "H(uniform-4) = " + fmt("%.17g", shannon_entropy(uniform4)));

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(2, 6);

    JointBinnedDistribution diag;
    diag.x_bins = diag.y_bins = 5;
    diag.probabilities.assign(25, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < 5; ++i) total += diag.probabilities[i * 5 + i] = u(rng) + 0.1;
    for (auto& p : diag.probabilities) p /= total;
    o.require(conditional_entropy(diag) == 0.0, "H(Y|X=Y) = " + fmt("%.3g", conditional_entropy(diag)));

    double worst = -1.0;
    for (int trial = 0; trial < 1000; ++trial) {
        JointBinnedDistribution j;
        j.x_bins = size(rng);
        j.y_bins = size(rng);
        j.probabilities.resize(j.x_bins * j.y_bins);
        double s = 0.0;
        for (auto& p : j.probabilities) s += p = u(rng) < 0.2 ? 0.0 : u(rng);
        if (s == 0.0) j.probabilities[0] = s = 1.0;
        for (auto& p : j.probabilities) p /= s;
        const double gap = conditional_entropy(j) - shannon_entropy(j.marginal_y());
        worst = std::max(worst, gap);
    }
    o.require(worst <= 1e-12, "H(Y|X) - H(Y) reached " + fmt("%.3g", worst));
    if (o.pass) o.detail = "1000 tables, max H(Y|X)-H(Y) = " + fmt("%.3g", worst);
    return o;
}

Outcome weight_suite() {
    Outcome o;
    auto check_normalized = [&](const WeightVector& w, const std::string& name) {
        const double s = std::accumulate(w.values().begin(), w.values().end(), 0.0);
        o.require(std::abs(s - 1.0) <= 1e-9, name + ": sum W = " + fmt("%.17g", s));
        for (double v : w.values()) o.require(v >= 0.0, name + ": negative weight");
    };

    std::size_t datasets = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = generate_synthetic(SyntheticConfig{}, seed);
        check_normalized(compute_weights(ds, default_parent_map(ds.schema), 10).weights,
                         "default synthetic seed " + std::to_string(seed));
        ++datasets;
    }

    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> dims(1, 4), counts(0, 6), months(2, 30), coin(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        ProjectDataset ds;
        const int m = dims(rng);
        for (int d = 0; d < m; ++d) ds.schema.push_back("d" + std::to_string(d));
        for (int c = 0; c < 3; ++c) {
            MonthlyTrajectory t;
            t.contributor_id = "c" + std::to_string(c);
            const int n = months(rng);
            for (int k = 0; k < n; ++k) {
                ActionVector a(static_cast<std::size_t>(m));
                for (auto& v : a) v = counts(rng);
                t.months.push_back({k, a});
            }
            ds.trajectories.push_back(std::move(t));
        }
        ParentMap parents(static_cast<std::size_t>(m));
        for (std::size_t d = 1; d < parents.size(); ++d) {
            if (coin(rng)) parents[d] = d - 1;
        }
        const auto w = compute_weights(ds, parents, 10).weights;
        check_normalized(w, "random dataset " + std::to_string(trial));
        const auto oracle = weights_oracle::oracle_weights(ds, parents, 10);
        for (std::size_t d = 0; d < oracle.size(); ++d) {
            o.require(std::abs(w[d] - oracle[d]) <= 1e-9, "random dataset " + std::to_string(trial) + " differs from oracle");
        }
        ++datasets;
    }

    ProjectDataset forced;
    forced.schema = {"constant", "uniform"};
    MonthlyTrajectory t;
    t.contributor_id = "x";
    for (std::int64_t v = 1; v <= 10; ++v) t.months.push_back({v, {7, v}});
    forced.trajectories.push_back(t);
    const auto fw = compute_weights(forced, ParentMap(2), 2).weights;
    o.require(fw.values() == std::vector<double>{1.0, 0.0},
              "forced case gave (" + fmt("%g", fw[0]) + ", " + fmt("%g", fw[1]) + ")");

    double worst = 0.0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SyntheticConfig cfg;
        cfg.schema = {"open_issue", "issue_comment", "close_issue"};
        cfg.rates = {2.0, 6.0, 1.0};
        const auto ds = generate_synthetic(cfg, seed);
        const auto parents = parent_map_from_names({{"issue_comment", "open_issue"}}, ds.schema);
        const auto w = compute_weights(ds, parents, 10).weights;
        check_normalized(w, "3-dim synthetic");
        const auto oracle = weights_oracle::oracle_weights(ds, parents, 10);
        for (std::size_t d = 0; d < 3; ++d) worst = std::max(worst, std::abs(w[d] - oracle[d]));
        ++datasets;
    }
    o.require(worst <= 1e-9, "3-dim weights differ from oracle by " + fmt("%.3g", worst));
    if (o.pass) o.detail = std::to_string(datasets) + " datasets, 3-dim oracle gap " + fmt("%.3g", worst);
    return o;
}

Outcome reward_suite() {
    Outcome o;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::uniform_int_distribution<std::int64_t> count(0, 20);
    const RewardParams params;
    const RealVector scale(6, 20.0);

    auto random_weights = [&] {
        std::vector<double> raw(6);
        for (auto& v : raw) v = u(rng);
        const double s = std::accumulate(raw.begin(), raw.end(), 0.0);
        for (auto& v : raw) v /= s;
        return WeightVector(raw);
    };
    auto random_action = [&] {
        ActionVector a(6);
        for (auto& v : a) v = count(rng);
        return a;
    };

    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto w = random_weights();
        const auto a = random_action();
        worst = std::max(worst, std::abs(reward(a, a, w, params, scale).reward - contribution(w, a)));
        const ActionVector zero(6, 0);
        o.require(reward(zero, a, w, params, scale).reward == 0.0, "r(0, a) != 0");
    }
    o.require(worst <= 1e-12, "r(a,a) differs from W.a by " + fmt("%.3g", worst));

    for (int seq = 0; seq < 100; ++seq) {
        const auto w = random_weights();
        auto dev = random_action();
        dev[0] += 1;  // non-zero magnitude
        std::vector<std::pair<double, double>> points;
        for (int k = 0; k < 50; ++k) {
            const auto e = random_action();
            points.emplace_back(weighted_distance_sq(dev, e, w, scale), reward(dev, e, w, params, scale).reward);
        }
        std::sort(points.begin(), points.end());
        for (std::size_t k = 1; k < points.size(); ++k) {
            const auto& [d0, r0] = points[k - 1];
            const auto& [d1, r1] = points[k];
            o.require(r1 <= r0, "reward increased with distance");
            if (d1 > d0) o.require(r1 < r0, "reward not strictly decreasing");
        }
    }
    if (o.pass) o.detail = "max |r(a,a) - W.a| = " + fmt("%.3g", worst) + ", 100 sorted sequences";
    return o;
}

Outcome gradient_suite() {
    Outcome o;
    Rng rng(41);
    std::normal_distribution<double> n(0.0, 0.8);
    double worst = 0.0;
    std::size_t checked = 0;
    for (int instance = 0; instance < 20; ++instance) {
        PolicyParams p;
        p.actor = ActorParams::init(7, 6, rng, 64);
        p.critic = CriticParams::init(7, rng, 64);
        const auto state = gradient_check::random_state(p, rng);
        std::vector<double> raw(6);
        for (auto& v : raw) v = n(rng);
        const auto a = gradient_check::check_actor(p.actor, state, raw, n(rng), 1e-5);
        const auto c = gradient_check::check_critic(p.critic, state, n(rng), 1e-5);
        checked += a.checked + c.checked;
        for (const auto* r : {&a, &c}) {
            worst = std::max(worst, r->max_relative_error);
            o.require(r->max_relative_error <= 1e-4, "instance " + std::to_string(instance) + " " + r->worst +
                                                         " relative error " + fmt("%.3g", r->max_relative_error));
        }
    }
    if (o.pass) o.detail = std::to_string(checked) + " parameters, max relative error " + fmt("%.3g", worst);
    return o;
}

Outcome surrogate_suite() {
    Outcome o;
    const double a = clipped_surrogate(std::log(1.0), 0.0, 2.0, 0.3);
    const double b = clipped_surrogate(std::log(2.0), 0.0, 1.0, 0.3);
    const double c = clipped_surrogate(std::log(0.5), 0.0, -1.0, 0.3);
    o.require(a == 2.0, "example 1 gave " + fmt("%.17g", a));
    o.require(b == 1.0 + 0.3, "example 2 gave " + fmt("%.17g", b));
    o.require(c == (1.0 - 0.3) * -1.0, "example 3 gave " + fmt("%.17g", c));

    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> ratio(0.01, 3.0), eps(0.01, 0.99);
    std::normal_distribution<double> adv(0.0, 2.0);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const double r = ratio(rng), A = adv(rng), e = eps(rng);
        if (clipped_surrogate(std::log(r), 0.0, A, e) > r * A + 1e-12) ++violations;
    }
    o.require(violations == 0, std::to_string(violations) + " draws exceeded ratio * A");
    if (o.pass) o.detail = "examples 2, 1.3, -0.7; 10000 draws bounded";
    return o;
}

Outcome efficacy() {
    Outcome o;
    auto cfg = default_synthetic_config();
    cfg.eval.seeds = {0, 1, 2};
    const auto report = run_contribution_table(cfg);
    const auto& mentor = row_for(report, "mentor");
    const auto& random = row_for(report, "random");
    const double ratio = mentor.mean / random.mean;
    o.require(ratio >= 1.5, "mentor " + fmt("%.4g", mentor.mean) + " vs random " + fmt("%.4g", random.mean));
    o.detail = "mentor " + fmt("%.4g", mentor.mean) + " / random " + fmt("%.4g", random.mean) + " = " +
               fmt("%.3g", ratio) + "x (M=" + std::to_string(cfg.train.episodes) + ", 3 seeds)";
    return o;
}

Outcome ablation() {
    Outcome o;
    auto cfg = default_synthetic_config();
    cfg.eval.seeds = {0, 1, 2, 3, 4};
    const auto report = run_contribution_table(cfg);
    const auto& batch = row_for(report, "mentor");
    const auto& episode = row_for(report, "ppo_variant");
    o.require(batch.final_cumulative >= episode.final_cumulative,
              "batch " + fmt("%.4g", batch.final_cumulative) + " < per-episode " + fmt("%.4g", episode.final_cumulative));
    int wins = 0;
    for (std::size_t i = 0; i < batch.per_seed.size(); ++i) wins += batch.per_seed[i] >= episode.per_seed[i];
    o.detail = "final cumulative batch " + fmt("%.4g", batch.final_cumulative) + " vs per-episode " +
               fmt("%.4g", episode.final_cumulative) + " (" + std::to_string(wins) + "/5 seeds)";
    return o;
}

Outcome robustness() {
    Outcome o;
    auto cfg = default_synthetic_config();
    cfg.eval.seeds = {0, 1, 2};
    const auto report = run_intervention(cfg);
    const auto& real = row_for(report, "real");
    const auto& disturbed = row_for(report, "disturbed");
    // Every rollout spans the same horizon, so per-seed means order the same
    // way as per-seed final cumulatives.
    for (std::size_t i = 0; i < disturbed.per_seed.size(); ++i) {
        o.require(disturbed.per_seed[i] >= real.per_seed[i], "seed " + std::to_string(cfg.eval.seeds[i]) +
                                                                 ": disturbed below real");
    }
    o.require(disturbed.final_cumulative >= real.final_cumulative, "mean disturbed cumulative below real");

    const auto& series = report.series.front();
    const auto und = column(series, "undisturbed"), dis = column(series, "disturbed");
    const int first = *cfg.eval.disturb_months.begin();
    for (int t = 0; t < first; ++t) {
        o.require(und[static_cast<std::size_t>(t)] == dis[static_cast<std::size_t>(t)],
                  "runs differ before the first disturbed month");
    }

    auto empty_cfg = cfg;
    empty_cfg.eval.disturb_months.clear();
    const auto empty = run_intervention(empty_cfg);
    o.require(row_for(empty, "undisturbed").per_seed == row_for(empty, "disturbed").per_seed,
              "empty disturb set changed the per-seed results");
    const auto& es = empty.series.front();
    o.require(column(es, "undisturbed") == column(es, "disturbed") &&
                  column(es, "undisturbed_cumulative") == column(es, "disturbed_cumulative"),
              "empty disturb set changed the monthly series");
    o.detail = "disturbed " + fmt("%.4g", disturbed.final_cumulative) + " vs real " + fmt("%.4g", real.final_cumulative) +
               " at horizon; empty set identical";
    return o;
}

Outcome conservation() {
    Outcome o;
    const auto ds = generate_synthetic(SyntheticConfig{}, 7);
    const auto weights = compute_weights(ds, default_parent_map(ds.schema), 10).weights;
    const auto pool = top_contributors(ds, 120);
    const auto index = build_pool_index(pool, weights);
    ContributionEnv env(index, weights, EnvConfig{});
    const auto& caps = index->action_caps();

    double worst = 0.0;
    std::size_t steps = 0;
    Rng rng(61);
    for (int episode = 0; episode < 30; ++episode) {
        PolicyParams p;
        p.actor = ActorParams::init(env.state_dimension(), env.dimensions(), rng, 16);
        MonthlyTrajectory log;
        log.contributor_id = "rollout";
        std::vector<double> env_cumulative;
        auto state = episode % 2 ? env.reset(ds.trajectories[static_cast<std::size_t>(episode)].months.front().counts)
                                 : env.reset();
        for (int t = 0; t < env.config().horizon; ++t) {
            if (episode % 3 == 0 && t >= 7 && t <= 9) state = ContributionEnv::perturb_state(state, env.initial_state());
            const auto action = sample_action(actor_forward(p.actor, state.features()), rng, caps).action;
            log.months.push_back({t, action});
            const auto out = env.step(state, action);
            env_cumulative.push_back(env.cumulative());
            state = out.next_state;
        }
        const auto annotated = annotate_trajectory(log, weights);
        for (std::size_t t = 0; t < env_cumulative.size(); ++t) {
            worst = std::max(worst, std::abs(env_cumulative[t] - annotated.cumulative_contribution[t]));
            ++steps;
        }
    }

    for (const auto& traj : pool.trajectories) {
        const auto annotated = annotate_trajectory(traj, weights);
        const auto replay = replay_real(traj, weights, static_cast<int>(traj.months.size()));
        for (std::size_t t = 0; t < replay.cumulative.size(); ++t) {
            worst = std::max(worst, std::abs(replay.cumulative[t] - annotated.cumulative_contribution[t]));
            ++steps;
        }
    }
    o.require(worst <= 1e-9, "cumulative drift " + fmt("%.3g", worst));
    if (o.pass) o.detail = std::to_string(steps) + " logged steps, max drift " + fmt("%.3g", worst);
    return o;
}

Outcome determinism() {
    Outcome o;
    auto cfg = default_synthetic_config();
    cfg.train.episodes = 40;
    cfg.eval.seeds = {0, 1};
    cfg.eval.epsilons = {0.2, 0.3};

    const std::vector<std::pair<std::string, std::function<ExperimentReport()>>> kinds = {
        {"table", [&] { return run_contribution_table(cfg); }},
        {"sweep", [&] { return run_epsilon_sweep(cfg); }},
        {"intervention", [&] { return run_intervention(cfg); }},
        {"case", [&] { return run_case_study(cfg); }},
    };
    ScratchDir a("a"), b("b");
    std::size_t files = 0;
    for (const auto& [name, run] : kinds) {
        write_report(run(), a.path() / name);
        write_report(run(), b.path() / name);
        for (const auto& entry : std::filesystem::directory_iterator(a.path() / name)) {
            const auto other = b.path() / name / entry.path().filename();
            o.require(std::filesystem::exists(other), name + ": second run lacks " + entry.path().filename().string());
            o.require(slurp(entry.path()) == slurp(other), name + ": " + entry.path().filename().string() + " differs");
            ++files;
        }
    }
    if (o.pass) o.detail = std::to_string(files) + " output files byte-identical across reruns";
    return o;
}

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "entropy suite", 1.0, entropy_suite},
        {2, "weight suite", 5.0, weight_suite},
        {3, "reward suite", 1.0, reward_suite},
        {4, "gradient check", 10.0, gradient_suite},
        {5, "clipped surrogate", 0.0, surrogate_suite},
        {6, "training efficacy", 300.0, efficacy},
        {7, "batch vs per-episode updates", 600.0, ablation},
        {8, "disturbance robustness", 0.0, robustness},
        {9, "contribution conservation", 0.0, conservation},
        {10, "rerun determinism", 0.0, determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (outcome.pass && c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
            outcome.pass = false;
            outcome.detail += "; took " + fmt("%.2f", seconds) + " s, budget " + fmt("%g", c.budget_seconds) + " s";
        }
        failures += !outcome.pass;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << outcome.detail << " ("
                  << fmt("%.2f", seconds) << " s)" << std::endl;
    }
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
              << std::endl;
    return failures ? 1 : 0;
}
