#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oss_mentor/types.hpp"

namespace oss_mentor {

// ============================================================================
// Event schema
// ============================================================================

/// Maps one GitHub event shape onto an action dimension. Optional fields that
/// are unset match anything.
struct DimensionRule {
    std::string dimension;
    std::string event_type;               // e.g. "IssuesEvent"
    std::optional<std::string> action;    // payload.action
    std::optional<bool> merged;           // payload.pull_request.merged
    std::optional<bool> on_pull_request;  // payload.issue.pull_request present
};

class EventSchema {
public:
    EventSchema(std::vector<std::string> dimensions, std::vector<DimensionRule> rules);

    /// open_issue, issue_comment, close_issue, open_pr, pr_comment, merge_pr.
    static EventSchema default_schema();
    static EventSchema from_json_file(const std::filesystem::path& path);

    const std::vector<std::string>& dimensions() const { return dimensions_; }
    const std::vector<DimensionRule>& rules() const { return rules_; }
    std::size_t size() const { return dimensions_.size(); }
    std::optional<std::size_t> index_of(const std::string& name) const;

    /// First matching rule wins, so an event lands in at most one dimension.
    std::optional<std::size_t> classify(const std::string& event_type, const std::string& action,
                                        std::optional<bool> merged, bool on_pull_request) const;

private:
    std::vector<std::string> dimensions_;
    std::vector<DimensionRule> rules_;
    std::vector<std::size_t> rule_dimension_;
};

// ============================================================================
// Raw events
// ============================================================================

using Timestamp = std::chrono::sys_seconds;

struct RawEvent {
    std::size_t dimension = 0;  // index into the schema
    std::string event_type;     // GitHub event kind
    std::string actor_login;
    std::string repo_name;
    Timestamp timestamp{};
    std::string detail;         // payload.action, or "merged" for merged PRs
};

struct ParseReport {
    std::size_t lines = 0;      // non-blank lines seen
    std::size_t malformed = 0;  // bad JSON, missing fields, bad timestamps
    std::size_t unmapped = 0;   // valid records outside the schema

    std::size_t skipped() const { return malformed + unmapped; }
};

struct ParseResult {
    std::vector<RawEvent> events;
    ParseReport report;
};

/// Parses ISO-8601 (`2015-01-01T15:00:01Z`, with optional fraction and
/// `±HH:MM` offset) and the legacy archive form `2012/03/10 14:45:34 -0800`.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// UTC calendar month of a timestamp, as year * 12 + (month - 1).
std::int64_t month_index(Timestamp ts);

ParseResult parse_events(std::istream& ndjson, const EventSchema& schema);

/// Reads a plain or gzip-compressed NDJSON file.
ParseResult parse_event_file(const std::filesystem::path& path, const EventSchema& schema);

// ============================================================================
// Aggregation
// ============================================================================

/// Buckets events into UTC calendar months per actor. Gap months between an
/// actor's first and last active month are present as zero vectors.
/// Trajectories are ordered by contributor id.
ProjectDataset aggregate_monthly(std::span<const RawEvent> events, const std::string& project,
                                 const std::vector<std::string>& schema);

/// Ranking key for top_contributors: total mapped events, or the counts of
/// one named dimension (e.g. a commit dimension in a custom schema).
struct RankKey {
    std::optional<std::string> dimension;
};

/// The n highest-ranked trajectories, ties broken by lexicographic id.
/// Throws InputError on an empty dataset or n == 0.
ContributorPool top_contributors(const ProjectDataset& dataset, std::size_t n, const RankKey& key = {});

// ============================================================================
// Synthetic data
// ============================================================================

/// Generative model, per contributor i and month t in [0, horizon):
///
///   skill_i  ~ Gamma(shape = skill_shape, scale = 1 / skill_shape)   (mean 1;
///              skill_shape <= 0 fixes skill_i = 1)
///   active   ~ Bernoulli(activity)
///   count_d  ~ Poisson(rates[d] * skill_i * growth^t)  if active, else 0
///
/// so E[count_d at month t] = activity * rates[d] * growth^t.
struct SyntheticConfig {
    std::string project = "synthetic";
    std::vector<std::string> schema = EventSchema::default_schema().dimensions();
    std::vector<double> rates = {2.0, 6.0, 1.0, 1.5, 4.0, 0.8};
    int contributors = 100;
    int horizon = 18;
    double growth = 1.05;
    double activity = 0.8;
    double skill_shape = 2.0;
    std::int64_t start_month = 2018 * 12;

    /// Expected count of dimension d averaged over all contributor-months.
    double analytic_mean(std::size_t d) const;
};

ProjectDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// ============================================================================
// Dataset file
// ============================================================================

/// {project, schema[], trajectories[{contributor_id, months[{index, counts[]}]}]}
void write_dataset(const ProjectDataset& dataset, const std::filesystem::path& path);
ProjectDataset read_dataset(const std::filesystem::path& path);
std::string dataset_to_json_string(const ProjectDataset& dataset);
ProjectDataset dataset_from_json_string(const std::string& text);

}  // namespace oss_mentor
