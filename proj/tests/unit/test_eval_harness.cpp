#include <gtest/gtest.h>

#include <cmath>

#include "oss_mentor/eval_harness.hpp"
#include "support.hpp"

using namespace oss_mentor;

namespace {

const char* kSmallConfig = R"({
  "name": "small",
  "synthetic": {"contributors": 30, "horizon": 18},
  "pool_size": 20,
  "train": {"episodes": 5, "hidden": 8, "seed": 3},
  "eval": {"seeds": [0, 1], "developers": 3, "epsilons": [0.2, 0.3]}
})";

ExperimentConfig small_config() { return experiment_config_from_string(kSmallConfig); }

std::vector<std::string> csv_files(const std::filesystem::path& dir) {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

TEST(ExperimentConfigParse, SingleSyntheticProject) {
    const auto cfg = small_config();
    ASSERT_EQ(cfg.projects.size(), 1u);
    ASSERT_TRUE(cfg.projects[0].synthetic);
    EXPECT_EQ(cfg.projects[0].synthetic->contributors, 30);
    EXPECT_EQ(cfg.pool_size, 20u);
    EXPECT_EQ(cfg.train.episodes, 5);
    EXPECT_EQ(cfg.eval.seeds, (std::vector<std::uint64_t>{0, 1}));
    EXPECT_EQ(cfg.eval.disturb_months, (std::set<int>{7, 8, 9}));
}

TEST(ExperimentConfigParse, SharedLearningRateAndRelativePaths) {
    const auto cfg = experiment_config_from_string(
        R"({"projects": [{"name": "p", "dataset": "data/p.json"}], "train": {"lr": 0.05},
            "eval": {"checkpoints": {"mentor": "ck/m.json"}}})",
        "/base");
    EXPECT_EQ(cfg.train.lr_actor, 0.05);
    EXPECT_EQ(cfg.train.lr_critic, 0.05);
    EXPECT_EQ(*cfg.projects[0].dataset, std::filesystem::path("/base/data/p.json"));
    EXPECT_EQ(cfg.eval.checkpoints.at("mentor"), std::filesystem::path("/base/ck/m.json"));
}

TEST(ExperimentConfigParse, Errors) {
    EXPECT_THROW(experiment_config_from_string("{"), InputError);
    EXPECT_THROW(experiment_config_from_string(R"({"synthetic": {}, "bogus": 1})"), InputError);
    EXPECT_THROW(experiment_config_from_string(R"({"synthetic": {}, "train": {"gamma": "high"}})"), InputError);
    EXPECT_THROW(experiment_config_from_string(R"({"name": "no projects"})"), InputError);
    EXPECT_THROW(experiment_config_from_string(R"({"synthetic": {}, "env": {"horizon": 10}, "train": {"horizon": 12}})"),
                 InputError);
    EXPECT_THROW(experiment_config_from_string(R"({"synthetic": {}, "eval": {"checkpoints": {"random": "x"}}})"),
                 InputError);
    EXPECT_THROW(experiment_config_from_string(R"({"synthetic": {}, "eval": {"seeds": []}})"), InputError);
}

TEST(ExperimentConfigParse, HorizonPropagates) {
    const auto cfg = experiment_config_from_string(R"({"synthetic": {}, "env": {"horizon": 12}})");
    EXPECT_EQ(cfg.env.horizon, 12);
    EXPECT_EQ(cfg.train.horizon, 12);
}

// ---------------------------------------------------------------------------
// Helpers

TEST(DeriveSeed, StreamsDiffer) {
    EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
    EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(TrajectoryChecksum, OrderSensitive) {
    const auto a = test_support::trajectory("a", {{1, 0}});
    const auto b = test_support::trajectory("b", {{0, 1}});
    const std::vector<MonthlyTrajectory> ab{a, b}, ba{b, a};
    EXPECT_EQ(trajectory_checksum(ab), trajectory_checksum(std::vector<MonthlyTrajectory>{a, b}));
    EXPECT_NE(trajectory_checksum(ab), trajectory_checksum(ba));
}

TEST(ReplayReal, ConstantTrajectory) {
    std::vector<ActionVector> months(18, ActionVector(6, 10));
    const auto traj = test_support::trajectory("r", months);
    const auto r = replay_real(traj, WeightVector::uniform(6), 18);
    EXPECT_NEAR(r.final_cumulative(), 180.0, 1e-9);
    EXPECT_NEAR(r.mean_contribution(), 10.0, 1e-12);
}

TEST(ReplayReal, ZeroPadsShortTrajectories) {
    const auto traj = test_support::trajectory("r", {{6, 6}, {3, 3}});
    const auto r = replay_real(traj, WeightVector::uniform(2), 4);
    EXPECT_EQ(r.contributions, (std::vector<double>{6.0, 3.0, 0.0, 0.0}));
    EXPECT_EQ(r.cumulative, (std::vector<double>{6.0, 9.0, 9.0, 9.0}));
    EXPECT_THROW(replay_real(traj, WeightVector::uniform(2), 0), InputError);
}

TEST(Rollouts, RandomOnZeroRateProjectIsZero) {
    auto cfg = small_config();
    cfg.projects[0].synthetic->rates = std::vector<double>(6, 0.0);
    const auto project = prepare_project(cfg.projects[0], cfg);
    ContributionEnv env(project.index, project.weights, cfg.env);
    Rng rng(1);
    const auto r = rollout_random(env, rng);
    EXPECT_EQ(r.contributions.size(), 18u);
    EXPECT_NEAR(r.final_cumulative(), 0.0, 1e-12);
}

TEST(Rollouts, EmptyDisturbSetMatchesUndisturbed) {
    const auto cfg = small_config();
    const auto project = prepare_project(cfg.projects[0], cfg);
    Rng init(5);
    const auto actor = ActorParams::init(7, 6, init, 8);
    ContributionEnv env(project.index, project.weights, cfg.env);

    Rng a(9), b(9);
    const auto plain = rollout_policy(env, actor, a);
    const auto empty = rollout_policy(env, actor, b, {std::nullopt, {}});
    EXPECT_EQ(plain.contributions, empty.contributions);
    EXPECT_EQ(plain.cumulative, empty.cumulative);
}

TEST(Rollouts, DisturbedStateIsReset) {
    const auto cfg = small_config();
    const auto project = prepare_project(cfg.projects[0], cfg);
    Rng init(5);
    const auto actor = ActorParams::init(7, 6, init, 8);
    ContributionEnv env(project.index, project.weights, cfg.env);
    Rng rng(9);
    const auto r = rollout_policy(env, actor, rng, {std::nullopt, {4}});
    ASSERT_EQ(r.observed.size(), 18u);
    for (std::size_t t = 0; t < r.disturbed.size(); ++t) EXPECT_EQ(r.disturbed[t], t == 4);
    EXPECT_EQ(r.observed[4].long_term, 0.0);
    EXPECT_EQ(r.observed[4].short_term, r.observed[0].short_term);
    EXPECT_GT(r.cumulative[4], 0.0);
    // The environment's own cumulative is not reset by the disturbance.
    EXPECT_NEAR(r.final_cumulative(), env.cumulative(), 1e-9);
}

TEST(Rollouts, DisturbMonthOutsideHorizonThrows) {
    const auto cfg = small_config();
    const auto project = prepare_project(cfg.projects[0], cfg);
    Rng init(5);
    const auto actor = ActorParams::init(7, 6, init, 8);
    ContributionEnv env(project.index, project.weights, cfg.env);
    Rng rng(9);
    EXPECT_THROW(rollout_policy(env, actor, rng, {std::nullopt, {18}}), InputError);
    EXPECT_THROW(rollout_random(env, rng, {std::nullopt, {-1}}), InputError);
}

// ---------------------------------------------------------------------------
// Experiments

TEST(ContributionTable, RowsPerMethod) {
    const auto report = run_contribution_table(small_config());
    ASSERT_EQ(report.rows.size(), kTableMethods.size());
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        EXPECT_EQ(row.method, kTableMethods[i]);
        EXPECT_FALSE(row.error);
        EXPECT_EQ(row.per_seed.size(), 2u);
        EXPECT_TRUE(std::isfinite(row.mean));
        EXPECT_GE(row.mean, 0.0);
    }
    EXPECT_TRUE(report.notes.count("checksum." + report.rows[0].project));
}

TEST(ContributionTable, MissingCheckpointGivesErrorRow) {
    auto cfg = small_config();
    cfg.eval.checkpoints["mentor"] = "/nonexistent/mentor.json";
    const auto report = run_contribution_table(cfg);
    ASSERT_EQ(report.rows.size(), 4u);
    ASSERT_TRUE(report.rows[0].error);
    EXPECT_NE(report.rows[0].error->find("checkpoint not found"), std::string::npos);
    EXPECT_FALSE(report.rows[1].error);
}

TEST(ContributionTable, CheckpointIsUsedInsteadOfTraining) {
    test_support::TempDir dir("eval_ckpt");
    auto cfg = small_config();
    const auto project = prepare_project(cfg.projects[0], cfg);
    Rng rng(1);
    PolicyParams p;
    p.actor = ActorParams::init(7, 6, rng, 8);
    p.critic = CriticParams::init(7, rng, 8);
    write_checkpoint(p, dir / "m.json");
    cfg.eval.checkpoints["mentor"] = dir / "m.json";
    cfg.train.episodes = 0;
    const auto with_ckpt = run_contribution_table(cfg);
    EXPECT_FALSE(with_ckpt.rows[0].error);
    EXPECT_TRUE(std::isfinite(with_ckpt.rows[0].mean));
}

TEST(EpsilonSweep, SingleEpsilon) {
    auto cfg = small_config();
    cfg.eval.epsilons = {0.3};
    const auto report = run_epsilon_sweep(cfg);
    ASSERT_EQ(report.rows.size(), 1u);
    EXPECT_EQ(report.rows[0].method, "mentor_eps_0.3");
    ASSERT_EQ(report.series.size(), 1u);
    EXPECT_EQ(report.series[0].columns, (std::vector<std::string>{"episode", "eps_0.3"}));
    EXPECT_EQ(report.series[0].rows.size(), 5u);
}

TEST(Intervention, SeriesShape) {
    const auto report = run_intervention(small_config());
    ASSERT_EQ(report.series.size(), 2u);
    EXPECT_EQ(report.series[0].name, "intervention");
    EXPECT_EQ(report.series[0].rows.size(), 18u);
    EXPECT_EQ(report.notes.at("disturb_months"), "7,8,9");
    // seeds x developers x months
    EXPECT_EQ(report.series[1].rows.size(), 2u * 3u * 18u);
}

TEST(Intervention, EmptyDisturbSetReproducesUndisturbed) {
    auto cfg = small_config();
    cfg.eval.disturb_months.clear();
    const auto report = run_intervention(cfg);
    const auto find = [&](const std::string& m) {
        for (const auto& r : report.rows)
            if (r.method == m) return r;
        throw std::runtime_error("missing row " + m);
    };
    EXPECT_EQ(find("undisturbed").per_seed, find("disturbed").per_seed);
    EXPECT_EQ(find("undisturbed").final_cumulative, find("disturbed").final_cumulative);
}

TEST(Intervention, DisturbMonthBeyondHorizonThrows) {
    auto cfg = small_config();
    cfg.eval.disturb_months = {18};
    EXPECT_THROW(run_intervention(cfg), InputError);
}

TEST(CaseStudy, RealColumnMatchesTrajectory) {
    const auto cfg = small_config();
    const auto report = run_case_study(cfg);
    ASSERT_EQ(report.series.size(), 1u);
    const auto& rows = report.series[0].rows;
    ASSERT_EQ(rows.size(), 18u);

    const auto project = prepare_project(cfg.projects[0], cfg);
    const auto& id = report.notes.at("contributor");
    const MonthlyTrajectory* traj = nullptr;
    for (const auto& t : project.dataset.trajectories)
        if (t.contributor_id == id) traj = &t;
    ASSERT_NE(traj, nullptr);
    const auto expected = per_step_contributions(*traj, project.weights);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        EXPECT_EQ(rows[t][0], static_cast<double>(t));
        EXPECT_EQ(rows[t][1], t < expected.size() ? expected[t] : 0.0);
    }
}

TEST(CaseStudy, LongHorizonAndUnknownContributor) {
    auto cfg = small_config();
    cfg.eval.case_horizon = 45;
    EXPECT_EQ(run_case_study(cfg).series[0].rows.size(), 45u);
    EXPECT_THROW(run_case_study(cfg, std::string("nobody")), InputError);
}

TEST(WriteReport, RerunIsByteIdentical) {
    test_support::TempDir a("eval_a"), b("eval_b");
    const auto cfg = small_config();
    write_report(run_contribution_table(cfg), a.path());
    write_report(run_contribution_table(cfg), b.path());
    const auto files = csv_files(a.path());
    ASSERT_EQ(files, csv_files(b.path()));
    EXPECT_NE(std::find(files.begin(), files.end(), "rows.csv"), files.end());
    EXPECT_NE(std::find(files.begin(), files.end(), "report.json"), files.end());
    for (const auto& f : files) EXPECT_EQ(test_support::read_file(a / f), test_support::read_file(b / f)) << f;
}

TEST(WriteReport, RowsCsvHeader) {
    test_support::TempDir dir("eval_rows");
    ExperimentReport report;
    report.rows.push_back({"p", "random", 1.5, 0.5, 27.0, {0}, {1.5}, {}});
    report.rows.push_back({"p", "mentor", 0, 0, 0, {0}, {}, std::string("checkpoint not found: x")});
    write_report(report, dir.path());
    EXPECT_EQ(test_support::read_file(dir / "rows.csv"),
              "project,method,mean,stddev,final_cumulative,error\n"
              "p,random,1.5,0.5,27,\n"
              "p,mentor,,,,checkpoint not found: x\n");
}
