#include "oss_mentor/policy.hpp"

#include <cmath>
#include <fstream>
#include <algorithm>
#include <map>
#include <numbers>
#include <string>

#include <json.hpp>

namespace oss_mentor {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

double softplus(double z) { return std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    MatrixXd m(rows, cols);
    // Fill row-major so the draw order matches the checkpoint layout.
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    }
    return m;
}

VectorXd as_vector(std::span<const double> state, std::size_t expected) {
    if (state.size() != expected) {
        throw InputError("state vector has length " + std::to_string(state.size()) + ", network expects " +
                         std::to_string(expected));
    }
    VectorXd v(static_cast<Eigen::Index>(state.size()));
    for (std::size_t i = 0; i < state.size(); ++i) v(static_cast<Eigen::Index>(i)) = state[i];
    return v;
}

struct ActorCache {
    VectorXd hidden_pre;
    VectorXd hidden;
    VectorXd mean_pre;
    VectorXd var_pre;
    VectorXd mean;
    VectorXd variance;
};

ActorCache actor_pass(const ActorParams& p, std::span<const double> state) {
    const VectorXd s = as_vector(state, p.state_dim());
    ActorCache c;
    c.hidden_pre = p.hidden_w * s + p.hidden_b.col(0);
    c.hidden = c.hidden_pre.cwiseMax(0.0);
    c.mean_pre = p.mean_w * c.hidden + p.mean_b.col(0);
    c.var_pre = p.var_w * c.hidden + p.var_b.col(0);
    c.mean = c.mean_pre.array().tanh();
    c.variance = c.var_pre.unaryExpr([](double z) { return softplus(z); });
    return c;
}

}  // namespace

// ============================================================================
// Parameters
// ============================================================================

ActorParams ActorParams::zeros(std::size_t state_dim, std::size_t action_dim, std::size_t hidden) {
    const auto s = static_cast<Eigen::Index>(state_dim);
    const auto a = static_cast<Eigen::Index>(action_dim);
    const auto h = static_cast<Eigen::Index>(hidden);
    return {MatrixXd::Zero(h, s), MatrixXd::Zero(h, 1), MatrixXd::Zero(a, h),
            MatrixXd::Zero(a, 1), MatrixXd::Zero(a, h), MatrixXd::Zero(a, 1)};
}

ActorParams ActorParams::init(std::size_t state_dim, std::size_t action_dim, Rng& rng, std::size_t hidden) {
    const auto s = static_cast<Eigen::Index>(state_dim);
    const auto a = static_cast<Eigen::Index>(action_dim);
    const auto h = static_cast<Eigen::Index>(hidden);
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(state_dim));
    const double hid_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    ActorParams p;
    p.hidden_w = uniform_matrix(h, s, in_bound, rng);
    p.hidden_b = uniform_matrix(h, 1, in_bound, rng);
    p.mean_w = uniform_matrix(a, h, hid_bound, rng);
    p.mean_b = uniform_matrix(a, 1, hid_bound, rng);
    p.var_w = uniform_matrix(a, h, hid_bound, rng);
    p.var_b = uniform_matrix(a, 1, hid_bound, rng);
    return p;
}

CriticParams CriticParams::zeros(std::size_t state_dim, std::size_t hidden) {
    const auto s = static_cast<Eigen::Index>(state_dim);
    const auto h = static_cast<Eigen::Index>(hidden);
    return {MatrixXd::Zero(h, s), MatrixXd::Zero(h, 1), MatrixXd::Zero(1, h), MatrixXd::Zero(1, 1)};
}

CriticParams CriticParams::init(std::size_t state_dim, Rng& rng, std::size_t hidden) {
    const auto s = static_cast<Eigen::Index>(state_dim);
    const auto h = static_cast<Eigen::Index>(hidden);
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(state_dim));
    const double hid_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    CriticParams p;
    p.hidden_w = uniform_matrix(h, s, in_bound, rng);
    p.hidden_b = uniform_matrix(h, 1, in_bound, rng);
    p.value_w = uniform_matrix(1, h, hid_bound, rng);
    p.value_b = uniform_matrix(1, 1, hid_bound, rng);
    return p;
}

void for_each_tensor(ActorParams& p, const std::function<void(std::string_view, MatrixXd&)>& fn) {
    fn("actor.hidden.weight", p.hidden_w);
    fn("actor.hidden.bias", p.hidden_b);
    fn("actor.mean.weight", p.mean_w);
    fn("actor.mean.bias", p.mean_b);
    fn("actor.variance.weight", p.var_w);
    fn("actor.variance.bias", p.var_b);
}

void for_each_tensor(CriticParams& p, const std::function<void(std::string_view, MatrixXd&)>& fn) {
    fn("critic.hidden.weight", p.hidden_w);
    fn("critic.hidden.bias", p.hidden_b);
    fn("critic.value.weight", p.value_w);
    fn("critic.value.bias", p.value_b);
}

void for_each_tensor(PolicyParams& p, const std::function<void(std::string_view, MatrixXd&)>& fn) {
    for_each_tensor(p.actor, fn);
    for_each_tensor(p.critic, fn);
}

bool all_finite(const PolicyParams& params) {
    bool finite = true;
    for_each_tensor(const_cast<PolicyParams&>(params),
                    [&](std::string_view, MatrixXd& m) { finite = finite && m.allFinite(); });
    return finite;
}

// ============================================================================
// Forward / sampling
// ============================================================================

PolicyOutput actor_forward(const ActorParams& params, std::span<const double> state) {
    const auto c = actor_pass(params, state);
    PolicyOutput out;
    out.mean.assign(c.mean.data(), c.mean.data() + c.mean.size());
    out.variance.assign(c.variance.data(), c.variance.data() + c.variance.size());
    return out;
}

double critic_forward(const CriticParams& params, std::span<const double> state) {
    const VectorXd s = as_vector(state, params.state_dim());
    const VectorXd h = (params.hidden_w * s + params.hidden_b.col(0)).cwiseMax(0.0);
    return (params.value_w * h)(0) + params.value_b(0, 0);
}

double gaussian_log_prob(const PolicyOutput& output, std::span<const double> raw) {
    if (raw.size() != output.mean.size()) throw InputError("log_prob: sample length mismatch");
    double lp = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = output.variance[i];
        const double diff = raw[i] - output.mean[i];
        lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - diff * diff / (2.0 * v);
    }
    return lp;
}

ActionVector action_from_raw(std::span<const double> raw, std::span<const double> scale) {
    if (raw.size() != scale.size()) throw InputError("action map: length mismatch");
    ActionVector a(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!(scale[i] > 0.0)) throw InputError("action scale entries must be positive");
        a[i] = std::llround(std::clamp((raw[i] + 1.0) / 2.0, 0.0, 1.0) * scale[i]);
    }
    return a;
}

SampledAction sample_action(const PolicyOutput& output, Rng& rng, std::span<const double> scale) {
    SampledAction s;
    s.raw.resize(output.mean.size());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < output.mean.size(); ++i) {
        s.raw[i] = output.mean[i] + std::sqrt(output.variance[i]) * normal(rng);
    }
    s.action = action_from_raw(s.raw, scale);
    s.log_prob = gaussian_log_prob(output, s.raw);
    return s;
}

// ============================================================================
// Gradients
// ============================================================================

ActorParams actor_backward(const ActorParams& params, std::span<const double> state, std::span<const double> raw,
                           double upstream) {
    const auto c = actor_pass(params, state);
    const VectorXd s = as_vector(state, params.state_dim());
    const auto m = static_cast<Eigen::Index>(params.action_dim());
    if (raw.size() != static_cast<std::size_t>(m)) throw InputError("actor_backward: sample length mismatch");

    // d logp / d mean_i = (x - mu) / v;  d logp / d v_i = -1/(2v) + (x - mu)^2 / (2 v^2)
    VectorXd d_mean_pre(m), d_var_pre(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double v = c.variance(i);
        const double diff = raw[static_cast<std::size_t>(i)] - c.mean(i);
        const double d_mean = upstream * diff / v;
        const double d_var = upstream * (-0.5 / v + diff * diff / (2.0 * v * v));
        d_mean_pre(i) = d_mean * (1.0 - c.mean(i) * c.mean(i));
        d_var_pre(i) = d_var * sigmoid(c.var_pre(i));
    }

    ActorParams g;
    g.mean_w = d_mean_pre * c.hidden.transpose();
    g.mean_b = d_mean_pre;
    g.var_w = d_var_pre * c.hidden.transpose();
    g.var_b = d_var_pre;
    VectorXd d_hidden = params.mean_w.transpose() * d_mean_pre + params.var_w.transpose() * d_var_pre;
    for (Eigen::Index j = 0; j < d_hidden.size(); ++j) {
        if (c.hidden_pre(j) <= 0.0) d_hidden(j) = 0.0;
    }
    g.hidden_w = d_hidden * s.transpose();
    g.hidden_b = d_hidden;
    return g;
}

CriticParams critic_backward(const CriticParams& params, std::span<const double> state, double upstream) {
    const VectorXd s = as_vector(state, params.state_dim());
    const VectorXd pre = params.hidden_w * s + params.hidden_b.col(0);
    const VectorXd h = pre.cwiseMax(0.0);

    CriticParams g;
    g.value_w = upstream * h.transpose();
    g.value_b = MatrixXd::Constant(1, 1, upstream);
    VectorXd d_hidden = upstream * params.value_w.row(0).transpose();
    for (Eigen::Index j = 0; j < d_hidden.size(); ++j) {
        if (pre(j) <= 0.0) d_hidden(j) = 0.0;
    }
    g.hidden_w = d_hidden * s.transpose();
    g.hidden_b = d_hidden;
    return g;
}

// ============================================================================
// Checkpoints
// ============================================================================

void write_checkpoint(const PolicyParams& params, const std::filesystem::path& path) {
    json tensors = json::array();
    for_each_tensor(const_cast<PolicyParams&>(params), [&](std::string_view name, MatrixXd& m) {
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
        }
        tensors.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}});
    });
    json doc = {{"format", "oss-mentor-checkpoint"}, {"version", 1}, {"tensors", std::move(tensors)}};
    std::ofstream out(path);
    if (!out) throw InputError("cannot write checkpoint " + path.string());
    out << doc.dump() << '\n';
}

PolicyParams read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open checkpoint " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || doc.value("format", "") != "oss-mentor-checkpoint") {
        throw InputError("not an oss-mentor checkpoint: " + path.string());
    }
    std::map<std::string, json> by_name;
    for (const auto& t : doc.at("tensors")) by_name[t.at("name").get<std::string>()] = t;

    PolicyParams params;
    for_each_tensor(params, [&](std::string_view name, MatrixXd& m) {
        auto it = by_name.find(std::string(name));
        if (it == by_name.end()) throw InputError("checkpoint lacks tensor " + std::string(name));
        const auto shape = it->second.at("shape").get<std::vector<Eigen::Index>>();
        const auto data = it->second.at("data").get<std::vector<double>>();
        if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != data.size()) {
            throw InputError("checkpoint tensor " + std::string(name) + " has inconsistent shape");
        }
        m.resize(shape[0], shape[1]);
        for (Eigen::Index r = 0; r < shape[0]; ++r) {
            for (Eigen::Index c = 0; c < shape[1]; ++c) m(r, c) = data[static_cast<std::size_t>(r * shape[1] + c)];
        }
    });
    const auto& a = params.actor;
    const auto& c = params.critic;
    if (a.hidden_b.rows() != a.hidden_w.rows() || a.mean_w.cols() != a.hidden_w.rows() ||
        a.var_w.rows() != a.mean_w.rows() || c.value_w.cols() != c.hidden_w.rows() ||
        c.hidden_w.cols() != a.hidden_w.cols()) {
        throw InputError("checkpoint tensors have inconsistent shapes");
    }
    return params;
}

}  // namespace oss_mentor
