#include <glob.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "oss_mentor/archive_fetch.hpp"
#include "oss_mentor/contribution_metric.hpp"
#include "oss_mentor/data_ingest.hpp"
#include "oss_mentor/eval_harness.hpp"
#include "oss_mentor/policy.hpp"
#include "oss_mentor/trainer.hpp"

namespace fs = std::filesystem;
using namespace oss_mentor;

namespace {

std::vector<fs::path> expand(const std::vector<std::string>& patterns) {
    std::vector<fs::path> out;
    for (const auto& pattern : patterns) {
        glob_t g{};
        const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
        if (rc == 0) {
            for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
        }
        ::globfree(&g);
        if (rc == GLOB_NOMATCH) throw InputError("no files match " + pattern);
        if (rc != 0 && rc != GLOB_NOMATCH) throw std::runtime_error("glob failed for " + pattern);
    }
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void print_rows(const ExperimentReport& report) {
    for (const auto& r : report.rows) {
        std::cout << r.project << '\t' << r.method << '\t';
        if (r.error) {
            std::cout << "error: " << *r.error << '\n';
        } else {
            std::cout << r.mean << " +- " << r.stddev << "\tcumulative " << r.final_cumulative << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contributor mentoring: ingest activity, weight it, train and evaluate a policy"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Aggregate event archives into monthly trajectories");
    std::vector<std::string> inputs;
    std::string project;
    std::string schema_path;
    std::string ingest_out;
    ingest->add_option("-i,--input", inputs, "Archive files or glob patterns (.json or .json.gz)")->required();
    ingest->add_option("-p,--project", project, "Repository full name, e.g. owner/name")->required();
    ingest->add_option("--schema", schema_path, "Event schema JSON (default six-dimension schema)");
    ingest->add_option("-o,--out", ingest_out, "Dataset JSON to write")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    std::string synth_config;
    std::uint64_t synth_seed = 7;
    std::string synth_out;
    synth->add_option("-c,--config", synth_config, "Synthetic generator config JSON");
    synth->add_option("-s,--seed", synth_seed, "Generator seed");
    synth->add_option("-o,--out", synth_out, "Dataset JSON to write")->required();

    // fetch
    auto* fetch = app.add_subcommand("fetch", "Download hourly event archives");
    std::string from_text;
    std::string to_text;
    std::string dest;
    std::string base_url = "https://data.gharchive.org/";
    fetch->add_option("--from", from_text, "First hour, YYYY-MM-DD[-H]")->required();
    fetch->add_option("--to", to_text, "Last hour, YYYY-MM-DD[-H] (a bare date means its last hour)")->required();
    fetch->add_option("-d,--dest", dest, "Destination directory")->required();
    fetch->add_option("--base-url", base_url, "Archive base URL");

    // weights
    auto* weights = app.add_subcommand("weights", "Compute action-dimension weights");
    std::string weights_dataset;
    std::string parents_path;
    std::size_t bins = 10;
    std::string weights_out;
    weights->add_option("-d,--dataset", weights_dataset, "Dataset JSON")->required();
    weights->add_option("--parents", parents_path, "Parent map JSON {child: parent}");
    weights->add_option("-b,--bins", bins, "Quantile bins per dimension");
    weights->add_option("-o,--out", weights_out, "Weights JSON to write")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a policy on the first project of an experiment config");
    std::string train_config;
    std::string train_out;
    std::string variant = "mentor";
    train_cmd->add_option("-c,--config", train_config, "Experiment config JSON")->required();
    train_cmd->add_option("-o,--out", train_out, "Output directory")->required();
    train_cmd->add_option("--variant", variant, "mentor (batched updates) or ppo_variant (per episode)")
        ->check(CLI::IsMember({"mentor", "ppo_variant"}));

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Run an evaluation experiment");
    std::string experiment;
    std::string eval_config;
    std::string eval_out;
    std::string contributor;
    evaluate->add_option("experiment", experiment, "table | sweep | intervene | case")
        ->required()
        ->check(CLI::IsMember({"table", "sweep", "intervene", "case"}));
    evaluate->add_option("-c,--config", eval_config, "Experiment config JSON")->required();
    evaluate->add_option("-o,--out", eval_out, "Output directory")->required();
    evaluate->add_option("--contributor", contributor, "Contributor id for the case study");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const auto schema = schema_path.empty() ? EventSchema::default_schema() : EventSchema::from_json_file(schema_path);
            std::vector<RawEvent> events;
            ParseReport total;
            for (const auto& file : expand(inputs)) {
                auto parsed = parse_event_file(file, schema);
                total.lines += parsed.report.lines;
                total.malformed += parsed.report.malformed;
                total.unmapped += parsed.report.unmapped;
                for (auto& e : parsed.events) {
                    if (e.repo_name == project) events.push_back(std::move(e));
                }
            }
            const auto dataset = aggregate_monthly(events, project, schema.dimensions());
            write_dataset(dataset, ingest_out);
            std::cerr << "lines " << total.lines << ", malformed " << total.malformed << ", unmapped "
                      << total.unmapped << ", project events " << events.size() << ", contributors "
                      << dataset.trajectories.size() << '\n';
        } else if (*synth) {
            const auto cfg = synth_config.empty() ? SyntheticConfig{} : synthetic_config_from_string(slurp(synth_config));
            const auto dataset = generate_synthetic(cfg, synth_seed);
            write_dataset(dataset, synth_out);
            std::cerr << "contributors " << dataset.trajectories.size() << '\n';
        } else if (*fetch) {
            const auto from = parse_archive_hour(from_text, false);
            const auto to = parse_archive_hour(to_text, true);
            if (!from || !to) throw InputError("dates must look like YYYY-MM-DD or YYYY-MM-DD-H");
            CurlTransport transport;
            const auto report = fetch_archive(*from, *to, dest, transport, base_url);
            for (const auto& e : report.errors) std::cerr << "failed " << e.url << ": " << e.message << '\n';
            std::cerr << "downloaded " << report.downloaded << ", skipped " << report.skipped << ", failed "
                      << report.errors.size() << '\n';
            return report.errors.empty() ? 0 : 3;
        } else if (*weights) {
            const auto dataset = read_dataset(weights_dataset);
            const auto parents = parents_path.empty() ? default_parent_map(dataset.schema)
                                                      : read_parent_map(parents_path, dataset.schema);
            const auto result = compute_weights(dataset, parents, bins);
            write_weights(result, dataset.schema, weights_out);
            for (std::size_t d = 0; d < dataset.schema.size(); ++d) {
                std::cout << dataset.schema[d] << '\t' << result.weights[d] << '\n';
            }
        } else if (*train_cmd) {
            const auto cfg = load_experiment_config(train_config);
            const auto prepared = prepare_project(cfg.projects.front(), cfg);
            const auto schedule = variant == "ppo_variant" ? UpdateSchedule::EndOfEpisode : UpdateSchedule::EveryBatch;
            const auto result = train(prepared.pool, prepared.weights, cfg.env, cfg.train, schedule);
            fs::create_directories(train_out);
            write_checkpoint(result.policy, fs::path(train_out) / "checkpoint.json");
            write_learning_curve(result.curve, fs::path(train_out) / "learning_curve.csv");
            if (!result.curve.empty()) {
                std::cout << "final episode mean contribution " << result.curve.back().mean_step_contribution << '\n';
            }
        } else if (*evaluate) {
            const auto cfg = load_experiment_config(eval_config);
            ExperimentReport report;
            if (experiment == "table") {
                report = run_contribution_table(cfg);
            } else if (experiment == "sweep") {
                report = run_epsilon_sweep(cfg);
            } else if (experiment == "intervene") {
                report = run_intervention(cfg);
            } else {
                report = run_case_study(cfg, contributor.empty() ? std::nullopt : std::optional(contributor));
            }
            write_report(report, eval_out);
            print_rows(report);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
