#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace oss_mentor {

/// Per-month execution counts, one entry per action dimension.
using ActionVector = std::vector<std::int64_t>;

/// Real-valued vectors: expected actions, normalized features.
using RealVector = std::vector<double>;

/// Thrown when an input violates a documented precondition.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct MonthEntry {
    std::int64_t index = 0;  // months since 0000-01 (year * 12 + month - 1)
    ActionVector counts;
};

/// One contributor's contiguous monthly activity.
///
/// `cumulative_contribution` is empty until the trajectory has been annotated
/// with a weight vector; afterwards it holds one running total per month.
struct MonthlyTrajectory {
    std::string contributor_id;
    std::vector<MonthEntry> months;
    std::vector<double> cumulative_contribution;

    std::int64_t total_events() const;
    bool annotated() const { return cumulative_contribution.size() == months.size() && !months.empty(); }
};

struct ProjectDataset {
    std::string project_name;
    std::vector<std::string> schema;
    std::vector<MonthlyTrajectory> trajectories;

    std::size_t dimensions() const { return schema.size(); }
    /// Throws InputError if any month vector disagrees with the schema or
    /// month indices are not strictly increasing.
    void validate() const;
};

/// The archived trajectories of a project's top contributors.
struct ContributorPool {
    std::vector<std::string> schema;
    std::vector<MonthlyTrajectory> trajectories;

    std::size_t dimensions() const { return schema.size(); }
    bool empty() const { return trajectories.empty(); }
};

}  // namespace oss_mentor
