#pragma once

#include <memory>
#include <span>
#include <vector>

#include "oss_mentor/contribution_metric.hpp"
#include "oss_mentor/types.hpp"

namespace oss_mentor {

/// Relaxation schedule for matching a developer against the contributor pool.
struct MatchConfig {
    double k0 = 0.05;     // initial half-width as a fraction of the pool's contribution range
    double growth = 2.0;  // window multiplier per empty round
    int max_rounds = 16;  // widenings before falling back to the whole pool

    void validate() const;
};

class RewardParams {
public:
    explicit RewardParams(double sigma = 0.5);
    double sigma() const { return sigma_; }
    /// 1 / (2 sigma^2)
    double lambda() const { return lambda_; }

private:
    double sigma_;
    double lambda_;
};

struct EnvConfig {
    double sigma = 0.5;
    MatchConfig match;
    int horizon = 18;

    void validate() const;
};

struct EnvState {
    RealVector short_term;  // normalized expected contributor action, entries in [0,1]
    double long_term = 0.0; // cumulative contribution over the pool's contribution scale
    int month_index = 0;

    /// [short_term..., long_term], the policy input.
    RealVector features() const;
};

struct StepOutcome {
    EnvState next_state;
    double reward = 0.0;
    ActionVector matched_action;
    double similarity = 1.0;
    bool done = false;
    double contribution = 0.0;  // W . a_d on raw counts
};

// ============================================================================
// Contributor pool index
// ============================================================================

/// One contributor-month keyed by the contributor's cumulative contribution
/// before that month, i.e. the level at which the action was taken.
struct PoolEntry {
    double level = 0.0;
    ActionVector action;
};

/// Immutable, shareable view of an annotated pool prepared for matching.
class PoolIndex {
public:
    /// Requires every trajectory to be annotated (see annotate_pool).
    explicit PoolIndex(const ContributorPool& annotated);

    std::size_t dimensions() const { return dimensions_; }
    const std::vector<PoolEntry>& entries() const { return entries_; }  // ascending by level
    double min_level() const { return entries_.front().level; }
    double max_level() const { return entries_.back().level; }
    double range() const { return max_level() - min_level(); }

    /// Per-dimension maximum monthly count (at least 1), used for normalization.
    const RealVector& action_scale() const { return action_scale_; }
    /// Per-dimension maximum monthly count, possibly 0; actions never exceed it.
    const RealVector& action_caps() const { return action_caps_; }
    /// Largest final cumulative contribution in the pool (1 if all are 0).
    double contribution_scale() const { return contribution_scale_; }
    /// Element-wise mean of every contributor's first month.
    const RealVector& first_month_mean() const { return first_month_mean_; }

private:
    std::size_t dimensions_ = 0;
    std::vector<PoolEntry> entries_;
    RealVector action_scale_;
    RealVector action_caps_;
    double contribution_scale_ = 1.0;
    RealVector first_month_mean_;
};

struct MatchResult {
    std::vector<ActionVector> actions;
    int widenings = 0;       // times the window grew before a match
    double half_width = 0.0; // final K
    bool full_pool = false;  // fallback after max_rounds
};

/// Contributor-months whose level lies in [cumulative - K, cumulative + K],
/// K = k0 * range, multiplied by `growth` after each empty round. Never empty.
MatchResult match_contributor_actions(double cumulative, const PoolIndex& pool, const MatchConfig& cfg);

/// Element-wise mean. Throws InputError on an empty set.
RealVector expected_action(std::span<const ActionVector> matches);

/// Per-dimension count / scale, clipped to [0,1].
RealVector normalize_action(std::span<const double> action, std::span<const double> scale);
RealVector normalize_action(std::span<const std::int64_t> action, std::span<const double> scale);

ActionVector round_action(std::span<const double> action);

struct RewardResult {
    double reward = 0.0;
    double similarity = 1.0;
};

/// r = (W . a_d) * exp(-lambda * ||(n(a_d) - n(a_e)) * W||^2): raw counts in
/// the magnitude term, scale-normalized counts inside the distance.
RewardResult reward(std::span<const std::int64_t> developer, std::span<const std::int64_t> contributor,
                    const WeightVector& weights, const RewardParams& params, std::span<const double> scale);

/// ||(n(a_d) - n(a_e)) * W||^2
double weighted_distance_sq(std::span<const std::int64_t> developer, std::span<const std::int64_t> contributor,
                            const WeightVector& weights, std::span<const double> scale);

// ============================================================================
// Environment
// ============================================================================

/// A developer's simulated career against a contributor pool.
///
/// The environment keeps its own record of the developer's cumulative
/// contribution. Matching always keys on that record, so a state handed back
/// by perturb_state changes what the policy observes but not where the
/// developer is matched in the pool.
class ContributionEnv {
public:
    ContributionEnv(std::shared_ptr<const PoolIndex> pool, WeightVector weights, EnvConfig config);

    /// Month 0, zero contribution, short-term = normalized pool-wide mean first month.
    EnvState reset();
    /// As reset(), starting from one developer's own first-month action.
    EnvState reset(std::span<const std::int64_t> first_month);

    /// Throws std::logic_error when `state` is already at the horizon.
    StepOutcome step(const EnvState& state, std::span<const std::int64_t> developer_action);

    /// Short- and long-term features of `initial`, month index of `state`.
    static EnvState perturb_state(const EnvState& state, const EnvState& initial);

    double cumulative() const { return cumulative_; }
    const std::vector<double>& step_contributions() const { return step_contributions_; }
    const EnvState& initial_state() const { return initial_; }

    const PoolIndex& pool() const { return *pool_; }
    const WeightVector& weights() const { return weights_; }
    const EnvConfig& config() const { return config_; }
    const RewardParams& reward_params() const { return reward_params_; }
    std::size_t dimensions() const { return pool_->dimensions(); }
    std::size_t state_dimension() const { return pool_->dimensions() + 1; }

private:
    EnvState start(RealVector short_term);

    std::shared_ptr<const PoolIndex> pool_;
    WeightVector weights_;
    EnvConfig config_;
    RewardParams reward_params_;
    EnvState initial_;
    double cumulative_ = 0.0;
    std::vector<double> step_contributions_;
};

}  // namespace oss_mentor
