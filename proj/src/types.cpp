#include "oss_mentor/types.hpp"

#include <numeric>

namespace oss_mentor {

std::int64_t MonthlyTrajectory::total_events() const {
    std::int64_t total = 0;
    for (const auto& month : months) {
        total = std::accumulate(month.counts.begin(), month.counts.end(), total);
    }
    return total;
}

void ProjectDataset::validate() const {
    const auto m = schema.size();
    for (const auto& trajectory : trajectories) {
        for (std::size_t i = 0; i < trajectory.months.size(); ++i) {
            const auto& month = trajectory.months[i];
            if (month.counts.size() != m) {
                throw InputError("trajectory '" + trajectory.contributor_id +
                                 "' has a month vector of length " + std::to_string(month.counts.size()) +
                                 ", schema has " + std::to_string(m));
            }
            for (auto c : month.counts) {
                if (c < 0) throw InputError("negative count in trajectory '" + trajectory.contributor_id + "'");
            }
            if (i > 0 && month.index <= trajectory.months[i - 1].index) {
                throw InputError("month indices not strictly increasing in '" + trajectory.contributor_id + "'");
            }
        }
    }
}

}  // namespace oss_mentor
