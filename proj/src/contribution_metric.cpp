#include "oss_mentor/contribution_metric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace oss_mentor {

using nlohmann::json;

namespace {

constexpr double kMassTolerance = 1e-12;

void check_probabilities(std::span<const double> p, const char* what) {
    if (p.empty()) throw InputError(std::string(what) + ": no bins");
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw InputError(std::string(what) + ": negative or NaN probability");
        total += v;
    }
    if (std::abs(total - 1.0) > kMassTolerance) throw InputError(std::string(what) + ": probabilities do not sum to 1");
}

}  // namespace

// ============================================================================
// Distributions and entropy
// ============================================================================

void BinnedDistribution::validate() const {
    check_probabilities(probabilities, "binned distribution");
    if (bin_edges.size() + 1 != probabilities.size()) throw InputError("binned distribution: edge/bin count mismatch");
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
        if (!(bin_edges[i] > bin_edges[i - 1])) throw InputError("binned distribution: edges not strictly ascending");
    }
}

void JointBinnedDistribution::validate() const {
    if (probabilities.size() != x_bins * y_bins) throw InputError("joint distribution: shape mismatch");
    check_probabilities(probabilities, "joint distribution");
}

std::vector<double> JointBinnedDistribution::marginal_x() const {
    std::vector<double> px(x_bins, 0.0);
    for (std::size_t x = 0; x < x_bins; ++x) {
        for (std::size_t y = 0; y < y_bins; ++y) px[x] += at(x, y);
    }
    return px;
}

std::vector<double> JointBinnedDistribution::marginal_y() const {
    std::vector<double> py(y_bins, 0.0);
    for (std::size_t x = 0; x < x_bins; ++x) {
        for (std::size_t y = 0; y < y_bins; ++y) py[y] += at(x, y);
    }
    return py;
}

double shannon_entropy(std::span<const double> probabilities) {
    double h = 0.0;
    for (double p : probabilities) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return std::max(h, 0.0);
}

double shannon_entropy(const BinnedDistribution& dist) {
    dist.validate();
    return shannon_entropy(dist.probabilities);
}

double conditional_entropy(const JointBinnedDistribution& joint) {
    joint.validate();
    const auto px = joint.marginal_x();
    double h = 0.0;
    for (std::size_t x = 0; x < joint.x_bins; ++x) {
        if (px[x] <= 0.0) continue;
        for (std::size_t y = 0; y < joint.y_bins; ++y) {
            const double pxy = joint.at(x, y);
            if (pxy > 0.0) h -= pxy * std::log2(pxy / px[x]);
        }
    }
    return std::max(h, 0.0);
}

// ============================================================================
// Quantile binning
// ============================================================================

QuantileBinning::QuantileBinning(std::span<const double> values, std::size_t bins) {
    if (bins < 2) throw InputError("quantile binning needs at least 2 bins");
    if (values.size() < 2) throw InputError("quantile binning needs at least 2 contributor-months");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const double max_value = sorted.back();
    for (std::size_t q = 1; q < bins; ++q) {
        // ceil(q n / B) - 1, in integers
        const std::size_t rank = (q * n + bins - 1) / bins;
        const double cut = sorted[rank - 1];
        if (cut >= max_value) break;
        if (edges_.empty() || cut > edges_.back()) edges_.push_back(cut);
    }
}

std::size_t QuantileBinning::bin_of(double value) const {
    return static_cast<std::size_t>(std::lower_bound(edges_.begin(), edges_.end(), value) - edges_.begin());
}

std::vector<double> dimension_values(const ProjectDataset& dataset, std::size_t dimension) {
    if (dimension >= dataset.dimensions()) throw InputError("dimension index outside schema");
    std::vector<double> values;
    for (const auto& t : dataset.trajectories) {
        for (const auto& month : t.months) values.push_back(static_cast<double>(month.counts.at(dimension)));
    }
    return values;
}

BinnedDistribution bin_counts(const ProjectDataset& dataset, std::size_t dimension, std::size_t bins) {
    const auto values = dimension_values(dataset, dimension);
    QuantileBinning binning(values, bins);
    std::vector<std::size_t> counts(binning.bins(), 0);
    for (double v : values) ++counts[binning.bin_of(v)];

    BinnedDistribution dist;
    dist.bin_edges = binning.edges();
    const double n = static_cast<double>(values.size());
    for (auto c : counts) dist.probabilities.push_back(static_cast<double>(c) / n);
    return dist;
}

JointBinnedDistribution joint_bin_counts(const ProjectDataset& dataset, std::size_t x_dimension,
                                         std::size_t y_dimension, std::size_t bins) {
    const auto xs = dimension_values(dataset, x_dimension);
    const auto ys = dimension_values(dataset, y_dimension);
    QuantileBinning x_binning(xs, bins);
    QuantileBinning y_binning(ys, bins);

    JointBinnedDistribution joint;
    joint.x_bins = x_binning.bins();
    joint.y_bins = y_binning.bins();
    std::vector<std::size_t> counts(joint.x_bins * joint.y_bins, 0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ++counts[x_binning.bin_of(xs[i]) * joint.y_bins + y_binning.bin_of(ys[i])];
    }
    const double n = static_cast<double>(xs.size());
    for (auto c : counts) joint.probabilities.push_back(static_cast<double>(c) / n);
    return joint;
}

// ============================================================================
// Weights
// ============================================================================

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw InputError("weight vector is empty");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weights must be finite and non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("weights must sum to 1");
}

WeightVector WeightVector::uniform(std::size_t m) {
    return WeightVector(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

ParentMap parent_map_from_names(const std::vector<std::pair<std::string, std::string>>& edges,
                                const std::vector<std::string>& schema) {
    auto index = [&](const std::string& name) -> std::optional<std::size_t> {
        auto it = std::find(schema.begin(), schema.end(), name);
        if (it == schema.end()) return std::nullopt;
        return static_cast<std::size_t>(it - schema.begin());
    };
    ParentMap parents(schema.size());
    for (const auto& [child, parent] : edges) {
        auto c = index(child);
        auto p = index(parent);
        if (!c) throw InputError("parent map: unknown dimension '" + child + "'");
        if (!p) throw InputError("parent map: unknown dimension '" + parent + "'");
        parents[*c] = *p;
    }
    validate_parent_map(parents, schema.size());
    return parents;
}

ParentMap default_parent_map(const std::vector<std::string>& schema) {
    const std::vector<std::pair<std::string, std::string>> defaults = {
        {"issue_comment", "open_issue"},
        {"close_issue", "open_issue"},
        {"pr_comment", "open_pr"},
        {"merge_pr", "open_pr"},
    };
    std::vector<std::pair<std::string, std::string>> present;
    auto has = [&](const std::string& n) { return std::find(schema.begin(), schema.end(), n) != schema.end(); };
    for (const auto& e : defaults) {
        if (has(e.first) && has(e.second)) present.push_back(e);
    }
    return parent_map_from_names(present, schema);
}

ParentMap read_parent_map(const std::filesystem::path& path, const std::vector<std::string>& schema) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open parent map " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw InputError("parent map must be a JSON object");
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [child, parent] : doc.items()) {
        if (parent.is_null()) continue;
        edges.emplace_back(child, parent.get<std::string>());
    }
    return parent_map_from_names(edges, schema);
}

void validate_parent_map(const ParentMap& parents, std::size_t m) {
    if (parents.size() != m) throw InputError("parent map size does not match schema");
    for (std::size_t j = 0; j < m; ++j) {
        // Walk up at most m links; a longer chain must revisit a node.
        std::optional<std::size_t> cur = parents[j];
        for (std::size_t steps = 0; cur; ++steps) {
            if (*cur >= m) throw InputError("parent map refers to a dimension outside the schema");
            if (*cur == j || steps >= m) throw InputError("parent map contains a cycle");
            cur = parents[*cur];
        }
    }
}

EntropyWeights compute_weights(const ProjectDataset& dataset, const ParentMap& parents, std::size_t bins) {
    const auto m = dataset.dimensions();
    if (m == 0) throw InputError("dataset has an empty schema");
    validate_parent_map(parents, m);

    std::vector<double> entropies(m), normalized(m), divergence(m);
    std::vector<std::size_t> bin_counts_per_dim(m);
    for (std::size_t j = 0; j < m; ++j) {
        double h = 0.0;
        std::size_t y_bins = 0;
        if (parents[j]) {
            auto joint = joint_bin_counts(dataset, *parents[j], j, bins);
            h = conditional_entropy(joint);
            y_bins = joint.y_bins;
        } else {
            auto dist = bin_counts(dataset, j, bins);
            h = shannon_entropy(dist);
            y_bins = dist.bins();
        }
        entropies[j] = h;
        bin_counts_per_dim[j] = y_bins;
        normalized[j] = y_bins > 1 ? std::clamp(h / std::log2(static_cast<double>(y_bins)), 0.0, 1.0) : 0.0;
        divergence[j] = 1.0 - normalized[j];
    }

    const double total = std::accumulate(divergence.begin(), divergence.end(), 0.0);
    std::vector<double> w(m);
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(m));
    } else {
        for (std::size_t j = 0; j < m; ++j) w[j] = divergence[j] / total;
    }
    return {WeightVector(std::move(w)), std::move(entropies), std::move(normalized), std::move(bin_counts_per_dim)};
}

void write_weights(const EntropyWeights& weights, const std::vector<std::string>& schema,
                   const std::filesystem::path& path) {
    json doc = {{"schema", schema},
                {"weights", weights.weights.values()},
                {"entropies", weights.entropies},
                {"method", "conditional-entropy-weight"}};
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

WeightsFile read_weights(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open weights file " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw InputError("weights file is not valid JSON");
    try {
        auto schema = doc.at("schema").get<std::vector<std::string>>();
        WeightVector w(doc.at("weights").get<std::vector<double>>());
        std::vector<double> entropies;
        if (doc.contains("entropies")) entropies = doc["entropies"].get<std::vector<double>>();
        if (w.size() != schema.size()) throw InputError("weights file: schema and weight lengths differ");
        return {std::move(schema), std::move(w), std::move(entropies)};
    } catch (const json::exception& e) {
        throw InputError(std::string("weights file: ") + e.what());
    }
}

// ============================================================================
// Contribution
// ============================================================================

double contribution(const WeightVector& weights, std::span<const std::int64_t> action) {
    if (action.size() != weights.size()) throw InputError("contribution: action/weight length mismatch");
    double c = 0.0;
    for (std::size_t i = 0; i < action.size(); ++i) c += weights[i] * static_cast<double>(action[i]);
    return c;
}

double contribution(const WeightVector& weights, std::span<const double> action) {
    if (action.size() != weights.size()) throw InputError("contribution: action/weight length mismatch");
    double c = 0.0;
    for (std::size_t i = 0; i < action.size(); ++i) c += weights[i] * action[i];
    return c;
}

std::vector<double> per_step_contributions(const MonthlyTrajectory& trajectory, const WeightVector& weights) {
    std::vector<double> out;
    out.reserve(trajectory.months.size());
    for (const auto& month : trajectory.months) out.push_back(contribution(weights, month.counts));
    return out;
}

MonthlyTrajectory annotate_trajectory(const MonthlyTrajectory& trajectory, const WeightVector& weights) {
    MonthlyTrajectory annotated = trajectory;
    annotated.cumulative_contribution.clear();
    double running = 0.0;
    for (double c : per_step_contributions(trajectory, weights)) {
        running += c;
        annotated.cumulative_contribution.push_back(running);
    }
    return annotated;
}

ContributorPool annotate_pool(const ContributorPool& pool, const WeightVector& weights) {
    ContributorPool out;
    out.schema = pool.schema;
    out.trajectories.reserve(pool.trajectories.size());
    for (const auto& t : pool.trajectories) out.trajectories.push_back(annotate_trajectory(t, weights));
    return out;
}

}  // namespace oss_mentor
