#include "oss_mentor/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace oss_mentor {

void MatchConfig::validate() const {
    if (!(k0 > 0.0 && k0 <= 1.0)) throw InputError("match config: k0 must lie in (0, 1]");
    if (!(growth > 1.0)) throw InputError("match config: growth must exceed 1");
    if (max_rounds < 0) throw InputError("match config: max_rounds must be non-negative");
}

RewardParams::RewardParams(double sigma) : sigma_(sigma), lambda_(1.0 / (2.0 * sigma * sigma)) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("reward sigma must be positive");
}

void EnvConfig::validate() const {
    RewardParams{sigma};
    match.validate();
    if (horizon < 1) throw InputError("env config: horizon must be at least 1");
}

RealVector EnvState::features() const {
    RealVector f = short_term;
    f.push_back(long_term);
    return f;
}

// ============================================================================
// Pool index
// ============================================================================

PoolIndex::PoolIndex(const ContributorPool& annotated) : dimensions_(annotated.dimensions()) {
    if (annotated.empty()) throw InputError("contributor pool is empty");
    if (dimensions_ == 0) throw InputError("contributor pool has an empty schema");

    action_caps_.assign(dimensions_, 0.0);
    first_month_mean_.assign(dimensions_, 0.0);
    double max_total = 0.0;
    std::size_t starters = 0;
    for (const auto& t : annotated.trajectories) {
        if (t.months.empty()) continue;
        if (!t.annotated()) throw InputError("pool trajectory '" + t.contributor_id + "' is not annotated");
        double level = 0.0;
        for (std::size_t i = 0; i < t.months.size(); ++i) {
            const auto& counts = t.months[i].counts;
            if (counts.size() != dimensions_) throw InputError("pool trajectory length does not match schema");
            entries_.push_back({level, counts});
            for (std::size_t d = 0; d < dimensions_; ++d) {
                action_caps_[d] = std::max(action_caps_[d], static_cast<double>(counts[d]));
            }
            level = t.cumulative_contribution[i];
        }
        max_total = std::max(max_total, level);
        for (std::size_t d = 0; d < dimensions_; ++d) first_month_mean_[d] += static_cast<double>(t.months.front().counts[d]);
        ++starters;
    }
    if (entries_.empty()) throw InputError("contributor pool has no months");
    for (auto& v : first_month_mean_) v /= static_cast<double>(starters);
    action_scale_ = action_caps_;
    for (auto& v : action_scale_) v = std::max(v, 1.0);
    contribution_scale_ = max_total > 0.0 ? max_total : 1.0;
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const PoolEntry& a, const PoolEntry& b) { return a.level < b.level; });
}

// ============================================================================
// Matching and reward
// ============================================================================

MatchResult match_contributor_actions(double cumulative, const PoolIndex& pool, const MatchConfig& cfg) {
    cfg.validate();
    const auto& entries = pool.entries();
    auto by_level = [](const PoolEntry& e, double v) { return e.level < v; };
    auto level_above = [](double v, const PoolEntry& e) { return v < e.level; };

    MatchResult result;
    double half_width = cfg.k0 * pool.range();
    for (int round = 0; round <= cfg.max_rounds; ++round) {
        auto lo = std::lower_bound(entries.begin(), entries.end(), cumulative - half_width, by_level);
        auto hi = std::upper_bound(lo, entries.end(), cumulative + half_width, level_above);
        if (lo != hi) {
            result.widenings = round;
            result.half_width = half_width;
            for (auto it = lo; it != hi; ++it) result.actions.push_back(it->action);
            return result;
        }
        half_width *= cfg.growth;
    }
    result.widenings = cfg.max_rounds;
    result.half_width = half_width;
    result.full_pool = true;
    for (const auto& e : entries) result.actions.push_back(e.action);
    return result;
}

RealVector expected_action(std::span<const ActionVector> matches) {
    if (matches.empty()) throw InputError("expected_action: no matched actions");
    RealVector mean(matches.front().size(), 0.0);
    for (const auto& a : matches) {
        if (a.size() != mean.size()) throw InputError("expected_action: inconsistent action lengths");
        for (std::size_t d = 0; d < a.size(); ++d) mean[d] += static_cast<double>(a[d]);
    }
    for (auto& v : mean) v /= static_cast<double>(matches.size());
    return mean;
}

RealVector normalize_action(std::span<const double> action, std::span<const double> scale) {
    if (action.size() != scale.size()) throw InputError("normalize_action: length mismatch");
    RealVector out(action.size());
    for (std::size_t d = 0; d < action.size(); ++d) out[d] = std::clamp(action[d] / scale[d], 0.0, 1.0);
    return out;
}

RealVector normalize_action(std::span<const std::int64_t> action, std::span<const double> scale) {
    RealVector real(action.begin(), action.end());
    return normalize_action(real, scale);
}

ActionVector round_action(std::span<const double> action) {
    ActionVector out(action.size());
    for (std::size_t d = 0; d < action.size(); ++d) out[d] = std::llround(action[d]);
    return out;
}

double weighted_distance_sq(std::span<const std::int64_t> developer, std::span<const std::int64_t> contributor,
                            const WeightVector& weights, std::span<const double> scale) {
    const auto m = weights.size();
    if (developer.size() != m || contributor.size() != m || scale.size() != m) {
        throw InputError("reward: action/weight length mismatch");
    }
    const auto nd = normalize_action(developer, scale);
    const auto ne = normalize_action(contributor, scale);
    double dist = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
        const double diff = (nd[d] - ne[d]) * weights[d];
        dist += diff * diff;
    }
    return dist;
}

RewardResult reward(std::span<const std::int64_t> developer, std::span<const std::int64_t> contributor,
                    const WeightVector& weights, const RewardParams& params, std::span<const double> scale) {
    const double dist = weighted_distance_sq(developer, contributor, weights, scale);
    const double similarity = std::exp(-params.lambda() * dist);
    return {contribution(weights, developer) * similarity, similarity};
}

// ============================================================================
// Environment
// ============================================================================

ContributionEnv::ContributionEnv(std::shared_ptr<const PoolIndex> pool, WeightVector weights, EnvConfig config)
    : pool_(std::move(pool)), weights_(std::move(weights)), config_(config), reward_params_(config.sigma) {
    if (!pool_) throw InputError("environment needs a contributor pool");
    config_.validate();
    if (weights_.size() != pool_->dimensions()) throw InputError("weight vector length does not match pool schema");
    initial_ = reset();
}

EnvState ContributionEnv::start(RealVector short_term) {
    cumulative_ = 0.0;
    step_contributions_.clear();
    EnvState state;
    state.short_term = normalize_action(short_term, pool_->action_scale());
    state.long_term = 0.0;
    state.month_index = 0;
    initial_ = state;
    return state;
}

EnvState ContributionEnv::reset() { return start(pool_->first_month_mean()); }

EnvState ContributionEnv::reset(std::span<const std::int64_t> first_month) {
    if (first_month.size() != dimensions()) throw InputError("reset: first-month action has the wrong length");
    return start(RealVector(first_month.begin(), first_month.end()));
}

StepOutcome ContributionEnv::step(const EnvState& state, std::span<const std::int64_t> developer_action) {
    if (state.month_index >= config_.horizon) throw std::logic_error("step called on a finished episode");
    if (developer_action.size() != dimensions()) throw InputError("step: action has the wrong length");
    for (auto c : developer_action) {
        if (c < 0) throw InputError("step: action counts must be non-negative");
    }
    const auto& scale = pool_->action_scale();

    const auto matches = match_contributor_actions(cumulative_, *pool_, config_.match);
    StepOutcome out;
    out.matched_action = round_action(expected_action(matches.actions));
    const auto r = reward(developer_action, out.matched_action, weights_, reward_params_, scale);
    out.reward = r.reward;
    out.similarity = r.similarity;
    out.contribution = contribution(weights_, developer_action);

    cumulative_ += out.contribution;
    step_contributions_.push_back(out.contribution);

    const auto next = match_contributor_actions(cumulative_, *pool_, config_.match);
    out.next_state.short_term = normalize_action(expected_action(next.actions), scale);
    out.next_state.long_term = state.long_term + out.contribution / pool_->contribution_scale();
    out.next_state.month_index = state.month_index + 1;
    out.done = out.next_state.month_index >= config_.horizon;
    return out;
}

EnvState ContributionEnv::perturb_state(const EnvState& state, const EnvState& initial) {
    EnvState out = initial;
    out.month_index = state.month_index;
    return out;
}

}  // namespace oss_mentor
