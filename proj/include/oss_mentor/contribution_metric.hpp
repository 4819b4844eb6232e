#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oss_mentor/types.hpp"

namespace oss_mentor {

// ============================================================================
// Distributions and entropy (bits)
// ============================================================================

/// Discrete distribution over count bins. Bin i covers (edges[i-1], edges[i]];
/// the last bin is open above, so there is one more bin than edges.
struct BinnedDistribution {
    std::vector<double> bin_edges;
    std::vector<double> probabilities;

    std::size_t bins() const { return probabilities.size(); }
    /// Throws InputError unless probabilities are >= 0 and sum to 1 within
    /// 1e-12 and edges are strictly ascending.
    void validate() const;
};

/// Row-major joint probabilities, rows indexed by the conditioning variable X.
struct JointBinnedDistribution {
    std::size_t x_bins = 0;
    std::size_t y_bins = 0;
    std::vector<double> probabilities;

    double at(std::size_t x, std::size_t y) const { return probabilities[x * y_bins + y]; }
    std::vector<double> marginal_x() const;
    std::vector<double> marginal_y() const;
    void validate() const;
};

/// -sum p log2 p with 0 log 0 = 0.
double shannon_entropy(std::span<const double> probabilities);
double shannon_entropy(const BinnedDistribution& dist);

/// H(Y|X) = -sum p(x,y) log2(p(x,y) / p(x)).
double conditional_entropy(const JointBinnedDistribution& joint);

// ============================================================================
// Quantile binning of monthly counts
// ============================================================================

class QuantileBinning {
public:
    /// Cut points are the order statistics at ranks ceil(q n / B) for
    /// q = 1..B-1; duplicate cuts and cuts at the maximum are dropped, which
    /// merges bins that would otherwise be empty. Requires B >= 2 and at least
    /// two values.
    QuantileBinning(std::span<const double> values, std::size_t bins);

    const std::vector<double>& edges() const { return edges_; }
    std::size_t bins() const { return edges_.size() + 1; }
    std::size_t bin_of(double value) const;

private:
    std::vector<double> edges_;
};

/// All contributor-month counts of one dimension, trajectory-major order.
std::vector<double> dimension_values(const ProjectDataset& dataset, std::size_t dimension);

BinnedDistribution bin_counts(const ProjectDataset& dataset, std::size_t dimension, std::size_t bins);

/// Joint distribution of (binned x_dim, binned y_dim) over contributor-months.
JointBinnedDistribution joint_bin_counts(const ProjectDataset& dataset, std::size_t x_dimension,
                                         std::size_t y_dimension, std::size_t bins);

// ============================================================================
// Weights
// ============================================================================

/// Non-negative per-dimension weights summing to 1 within 1e-9.
class WeightVector {
public:
    explicit WeightVector(std::vector<double> weights);
    static WeightVector uniform(std::size_t m);

    const std::vector<double>& values() const { return weights_; }
    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }

private:
    std::vector<double> weights_;
};

/// parent[j] is the dimension that conditions dimension j, if any.
using ParentMap = std::vector<std::optional<std::size_t>>;

/// issue_comment, close_issue <- open_issue; pr_comment, merge_pr <- open_pr.
/// Entries whose names are absent from the schema are left out.
ParentMap default_parent_map(const std::vector<std::string>& schema);
/// Reads {"child": "parent", ...}.
ParentMap read_parent_map(const std::filesystem::path& path, const std::vector<std::string>& schema);
ParentMap parent_map_from_names(const std::vector<std::pair<std::string, std::string>>& edges,
                                const std::vector<std::string>& schema);
/// Throws InputError on self-loops, cycles, or out-of-range parents.
void validate_parent_map(const ParentMap& parents, std::size_t m);

struct EntropyWeights {
    WeightVector weights;
    std::vector<double> entropies;   // H_j, conditional where a parent exists
    std::vector<double> normalized;  // H_j / log2(#bins_j), 0 for single-bin dims
    std::vector<std::size_t> bins;   // #bins_j after merging
};

/// Conditional-entropy weight method: divergence d_j = 1 - H_j / log2(#bins_j),
/// w_j = d_j / sum_k d_k, uniform when every d_k is 0.
EntropyWeights compute_weights(const ProjectDataset& dataset, const ParentMap& parents, std::size_t bins);

void write_weights(const EntropyWeights& weights, const std::vector<std::string>& schema,
                   const std::filesystem::path& path);

struct WeightsFile {
    std::vector<std::string> schema;
    WeightVector weights;
    std::vector<double> entropies;
};
WeightsFile read_weights(const std::filesystem::path& path);

// ============================================================================
// Contribution
// ============================================================================

/// W . A. Throws InputError on a length mismatch.
double contribution(const WeightVector& weights, std::span<const std::int64_t> action);
double contribution(const WeightVector& weights, std::span<const double> action);

std::vector<double> per_step_contributions(const MonthlyTrajectory& trajectory, const WeightVector& weights);

/// Copy of `trajectory` whose cumulative_contribution holds prefix sums of
/// the monthly contributions.
MonthlyTrajectory annotate_trajectory(const MonthlyTrajectory& trajectory, const WeightVector& weights);

ContributorPool annotate_pool(const ContributorPool& pool, const WeightVector& weights);

}  // namespace oss_mentor
