#include "oss_mentor/data_ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

namespace oss_mentor {

using nlohmann::json;

// ============================================================================
// Event schema
// ============================================================================

EventSchema::EventSchema(std::vector<std::string> dimensions, std::vector<DimensionRule> rules)
    : dimensions_(std::move(dimensions)), rules_(std::move(rules)) {
    if (dimensions_.empty()) throw InputError("event schema has no dimensions");
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (dimensions_[i] == dimensions_[j]) throw InputError("duplicate dimension '" + dimensions_[i] + "'");
        }
    }
    for (const auto& rule : rules_) {
        auto idx = index_of(rule.dimension);
        if (!idx) throw InputError("rule refers to unknown dimension '" + rule.dimension + "'");
        rule_dimension_.push_back(*idx);
    }
}

EventSchema EventSchema::default_schema() {
    std::vector<std::string> dims = {"open_issue", "issue_comment", "close_issue", "open_pr", "pr_comment", "merge_pr"};
    std::vector<DimensionRule> rules = {
        {"open_issue", "IssuesEvent", "opened", std::nullopt, std::nullopt},
        {"issue_comment", "IssueCommentEvent", "created", std::nullopt, false},
        {"close_issue", "IssuesEvent", "closed", std::nullopt, std::nullopt},
        {"open_pr", "PullRequestEvent", "opened", std::nullopt, std::nullopt},
        {"pr_comment", "PullRequestReviewCommentEvent", "created", std::nullopt, std::nullopt},
        {"pr_comment", "IssueCommentEvent", "created", std::nullopt, true},
        {"merge_pr", "PullRequestEvent", "closed", true, std::nullopt},
    };
    return EventSchema(std::move(dims), std::move(rules));
}

EventSchema EventSchema::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open schema file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("schema file " + path.string() + ": " + e.what());
    }
    std::vector<std::string> dims;
    std::vector<DimensionRule> rules;
    try {
        dims = doc.at("dimensions").get<std::vector<std::string>>();
        for (const auto& r : doc.at("rules")) {
            DimensionRule rule;
            rule.dimension = r.at("dimension").get<std::string>();
            rule.event_type = r.at("type").get<std::string>();
            if (r.contains("action")) rule.action = r["action"].get<std::string>();
            if (r.contains("merged")) rule.merged = r["merged"].get<bool>();
            if (r.contains("on_pull_request")) rule.on_pull_request = r["on_pull_request"].get<bool>();
            rules.push_back(std::move(rule));
        }
    } catch (const json::exception& e) {
        throw InputError("schema file " + path.string() + ": " + e.what());
    }
    return EventSchema(std::move(dims), std::move(rules));
}

std::optional<std::size_t> EventSchema::index_of(const std::string& name) const {
    auto it = std::find(dimensions_.begin(), dimensions_.end(), name);
    if (it == dimensions_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - dimensions_.begin());
}

std::optional<std::size_t> EventSchema::classify(const std::string& event_type, const std::string& action,
                                                 std::optional<bool> merged, bool on_pull_request) const {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const auto& rule = rules_[i];
        if (rule.event_type != event_type) continue;
        if (rule.action && *rule.action != action) continue;
        if (rule.merged && merged.value_or(false) != *rule.merged) continue;
        if (rule.on_pull_request && *rule.on_pull_request != on_pull_request) continue;
        return rule_dimension_[i];
    }
    return std::nullopt;
}

// ============================================================================
// Timestamps
// ============================================================================

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    auto first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc{} && ptr == first + len;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    // YYYY-MM-DDTHH:MM:SS or YYYY/MM/DD HH:MM:SS
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (text.size() < 19) return std::nullopt;
    const char date_sep = text[4];
    if (date_sep != '-' && date_sep != '/') return std::nullopt;
    if (text[7] != date_sep) return std::nullopt;
    if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
    if (text[13] != ':' || text[16] != ':') return std::nullopt;
    if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d) ||
        !read_int(text, 11, 2, h) || !read_int(text, 14, 2, mi) || !read_int(text, 17, 2, s)) {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return std::nullopt;

    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    while (pos < text.size() && text[pos] == ' ') ++pos;

    int offset_minutes = 0;
    if (pos == text.size()) {
        // no zone designator: UTC
    } else if (text[pos] == 'Z' && pos + 1 == text.size()) {
        // UTC
    } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '-' ? -1 : 1;
        int oh = 0, om = 0;
        auto rest = text.substr(pos + 1);
        if (rest.size() == 5 && rest[2] == ':') {
            if (!read_int(rest, 0, 2, oh) || !read_int(rest, 3, 2, om)) return std::nullopt;
        } else if (rest.size() == 4) {
            if (!read_int(rest, 0, 2, oh) || !read_int(rest, 2, 2, om)) return std::nullopt;
        } else {
            return std::nullopt;
        }
        offset_minutes = sign * (oh * 60 + om);
    } else {
        return std::nullopt;
    }

    auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
    return time_point_cast<seconds>(local - minutes{offset_minutes});
}

std::int64_t month_index(Timestamp ts) {
    using namespace std::chrono;
    year_month_day ymd{floor<days>(ts)};
    return static_cast<std::int64_t>(static_cast<int>(ymd.year())) * 12 +
           static_cast<std::int64_t>(static_cast<unsigned>(ymd.month())) - 1;
}

// ============================================================================
// Parsing
// ============================================================================

namespace {

std::optional<std::string> string_at(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

// Returns nullopt when the record lacks a required field.
std::optional<RawEvent> decode_record(const json& rec, const EventSchema& schema, bool& mapped) {
    mapped = false;
    if (!rec.is_object()) return std::nullopt;
    auto type = string_at(rec, "type");
    if (!type) return std::nullopt;

    std::optional<std::string> actor;
    if (auto it = rec.find("actor"); it != rec.end()) {
        if (it->is_string()) {
            actor = it->get<std::string>();
        } else if (it->is_object()) {
            actor = string_at(*it, "login");
        }
    }
    if (!actor) return std::nullopt;

    std::optional<std::string> repo;
    if (auto it = rec.find("repo"); it != rec.end() && it->is_object()) {
        repo = string_at(*it, "name");
    } else if (auto legacy = rec.find("repository"); legacy != rec.end() && legacy->is_object()) {
        auto owner = string_at(*legacy, "owner");
        auto name = string_at(*legacy, "name");
        if (owner && name) repo = *owner + "/" + *name;
    }
    if (!repo) return std::nullopt;

    auto created = string_at(rec, "created_at");
    if (!created) return std::nullopt;
    auto ts = parse_timestamp(*created);
    if (!ts) return std::nullopt;

    std::string action;
    std::optional<bool> merged;
    bool on_pull_request = false;
    if (auto p = rec.find("payload"); p != rec.end() && p->is_object()) {
        action = string_at(*p, "action").value_or("");
        if (auto pr = p->find("pull_request"); pr != p->end() && pr->is_object()) {
            if (auto m = pr->find("merged"); m != pr->end() && m->is_boolean()) merged = m->get<bool>();
        }
        if (auto issue = p->find("issue"); issue != p->end() && issue->is_object()) {
            auto pr = issue->find("pull_request");
            on_pull_request = pr != issue->end() && !pr->is_null();
        }
    }

    RawEvent event;
    event.event_type = *type;
    event.actor_login = *actor;
    event.repo_name = *repo;
    event.timestamp = *ts;
    event.detail = (merged && *merged && action == "closed") ? "merged" : action;

    auto dim = schema.classify(*type, action, merged, on_pull_request);
    if (dim) {
        event.dimension = *dim;
        mapped = true;
    }
    return event;
}

bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

ParseResult parse_events(std::istream& ndjson, const EventSchema& schema) {
    ParseResult result;
    std::string line;
    while (std::getline(ndjson, line)) {
        if (is_blank(line)) continue;
        ++result.report.lines;
        json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (rec.is_discarded()) {
            ++result.report.malformed;
            continue;
        }
        bool mapped = false;
        auto event = decode_record(rec, schema, mapped);
        if (!event) {
            ++result.report.malformed;
        } else if (!mapped) {
            ++result.report.unmapped;
        } else {
            result.events.push_back(std::move(*event));
        }
    }
    return result;
}

ParseResult parse_event_file(const std::filesystem::path& path, const EventSchema& schema) {
    // gzread passes uncompressed input through unchanged.
    gzFile file = gzopen(path.c_str(), "rb");
    if (!file) throw InputError("cannot open event file " + path.string());
    std::string contents;
    std::vector<char> buffer(1 << 16);
    int n = 0;
    while ((n = gzread(file, buffer.data(), static_cast<unsigned>(buffer.size()))) > 0) {
        contents.append(buffer.data(), static_cast<std::size_t>(n));
    }
    int err = 0;
    const char* msg = gzerror(file, &err);
    std::string message = msg ? msg : "";
    gzclose(file);
    if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) {
        throw InputError("error reading " + path.string() + ": " + message);
    }
    std::istringstream in(std::move(contents));
    return parse_events(in, schema);
}

// ============================================================================
// Aggregation
// ============================================================================

ProjectDataset aggregate_monthly(std::span<const RawEvent> events, const std::string& project,
                                 const std::vector<std::string>& schema) {
    const auto m = schema.size();
    std::map<std::string, std::map<std::int64_t, ActionVector>> by_actor;
    for (const auto& event : events) {
        if (event.dimension >= m) throw InputError("event dimension outside schema");
        auto& counts = by_actor[event.actor_login][month_index(event.timestamp)];
        if (counts.empty()) counts.assign(m, 0);
        ++counts[event.dimension];
    }

    ProjectDataset dataset;
    dataset.project_name = project;
    dataset.schema = schema;
    for (auto& [actor, months] : by_actor) {
        MonthlyTrajectory trajectory;
        trajectory.contributor_id = actor;
        const auto first = months.begin()->first;
        const auto last = months.rbegin()->first;
        for (auto idx = first; idx <= last; ++idx) {
            auto it = months.find(idx);
            trajectory.months.push_back({idx, it == months.end() ? ActionVector(m, 0) : std::move(it->second)});
        }
        dataset.trajectories.push_back(std::move(trajectory));
    }
    return dataset;
}

ContributorPool top_contributors(const ProjectDataset& dataset, std::size_t n, const RankKey& key) {
    if (n == 0) throw InputError("top_contributors: n must be positive");
    if (dataset.trajectories.empty()) throw InputError("no contributors available in '" + dataset.project_name + "'");

    std::optional<std::size_t> dim;
    if (key.dimension) {
        auto it = std::find(dataset.schema.begin(), dataset.schema.end(), *key.dimension);
        if (it == dataset.schema.end()) throw InputError("unknown rank dimension '" + *key.dimension + "'");
        dim = static_cast<std::size_t>(it - dataset.schema.begin());
    }
    auto score = [&](const MonthlyTrajectory& t) -> std::int64_t {
        if (!dim) return t.total_events();
        std::int64_t total = 0;
        for (const auto& month : t.months) total += month.counts[*dim];
        return total;
    };

    std::vector<std::pair<std::int64_t, const MonthlyTrajectory*>> ranked;
    ranked.reserve(dataset.trajectories.size());
    for (const auto& t : dataset.trajectories) ranked.emplace_back(score(t), &t);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->contributor_id < b.second->contributor_id;
    });

    ContributorPool pool;
    pool.schema = dataset.schema;
    const auto keep = std::min(n, ranked.size());
    for (std::size_t i = 0; i < keep; ++i) pool.trajectories.push_back(*ranked[i].second);
    return pool;
}

// ============================================================================
// Synthetic data
// ============================================================================

double SyntheticConfig::analytic_mean(std::size_t d) const {
    double growth_mean = 0.0;
    for (int t = 0; t < horizon; ++t) growth_mean += std::pow(growth, t);
    growth_mean /= horizon;
    return activity * rates.at(d) * growth_mean;
}

ProjectDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
    if (config.contributors <= 0) throw InputError("synthetic config: contributor count must be positive");
    if (config.horizon <= 0) throw InputError("synthetic config: horizon must be positive");
    if (config.rates.size() != config.schema.size()) throw InputError("synthetic config: one rate per dimension required");
    if (config.activity < 0.0 || config.activity > 1.0) throw InputError("synthetic config: activity must lie in [0,1]");
    if (config.growth <= 0.0) throw InputError("synthetic config: growth must be positive");
    for (double r : config.rates) {
        if (r < 0.0 || !std::isfinite(r)) throw InputError("synthetic config: rates must be finite and non-negative");
    }

    std::mt19937_64 rng(seed);
    const auto m = config.schema.size();
    const int width = static_cast<int>(std::to_string(config.contributors - 1).size());

    ProjectDataset dataset;
    dataset.project_name = config.project;
    dataset.schema = config.schema;
    for (int i = 0; i < config.contributors; ++i) {
        double skill = 1.0;
        if (config.skill_shape > 0.0) {
            std::gamma_distribution<double> gamma(config.skill_shape, 1.0 / config.skill_shape);
            skill = gamma(rng);
        }
        std::string id = std::to_string(i);
        id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');

        MonthlyTrajectory trajectory;
        trajectory.contributor_id = "dev" + id;
        for (int t = 0; t < config.horizon; ++t) {
            ActionVector counts(m, 0);
            std::bernoulli_distribution active(config.activity);
            if (active(rng)) {
                const double scale = skill * std::pow(config.growth, t);
                for (std::size_t d = 0; d < m; ++d) {
                    const double mean = config.rates[d] * scale;
                    if (mean > 0.0) {
                        std::poisson_distribution<std::int64_t> poisson(mean);
                        counts[d] = poisson(rng);
                    }
                }
            }
            trajectory.months.push_back({config.start_month + t, std::move(counts)});
        }
        dataset.trajectories.push_back(std::move(trajectory));
    }
    return dataset;
}

// ============================================================================
// Dataset file
// ============================================================================

namespace {

json dataset_to_json(const ProjectDataset& dataset) {
    json trajectories = json::array();
    for (const auto& t : dataset.trajectories) {
        json months = json::array();
        for (const auto& month : t.months) months.push_back({{"index", month.index}, {"counts", month.counts}});
        trajectories.push_back({{"contributor_id", t.contributor_id}, {"months", std::move(months)}});
    }
    return {{"project", dataset.project_name}, {"schema", dataset.schema}, {"trajectories", std::move(trajectories)}};
}

ProjectDataset dataset_from_json(const json& doc) {
    ProjectDataset dataset;
    try {
        dataset.project_name = doc.at("project").get<std::string>();
        dataset.schema = doc.at("schema").get<std::vector<std::string>>();
        for (const auto& t : doc.at("trajectories")) {
            MonthlyTrajectory trajectory;
            trajectory.contributor_id = t.at("contributor_id").get<std::string>();
            for (const auto& month : t.at("months")) {
                trajectory.months.push_back({month.at("index").get<std::int64_t>(),
                                             month.at("counts").get<ActionVector>()});
            }
            dataset.trajectories.push_back(std::move(trajectory));
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("dataset file: ") + e.what());
    }
    dataset.validate();
    return dataset;
}

}  // namespace

std::string dataset_to_json_string(const ProjectDataset& dataset) { return dataset_to_json(dataset).dump(); }

ProjectDataset dataset_from_json_string(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw InputError("dataset file is not valid JSON");
    return dataset_from_json(doc);
}

void write_dataset(const ProjectDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << dataset_to_json(dataset).dump() << '\n';
}

ProjectDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return dataset_from_json_string(buffer.str());
}

}  // namespace oss_mentor
