#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "oss_mentor/policy.hpp"

namespace gradient_check {

struct Result {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::string worst;  // tensor name and index of the worst entry
};

/// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// True when no hidden pre-activation lies within `margin` of the ReLU kink.
inline bool away_from_kinks(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b, const std::vector<double>& state,
                            double margin = 1e-3) {
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
    const Eigen::VectorXd pre = w * s + b.col(0);
    return (pre.array().abs() > margin).all();
}

/// Random state in [0,1]^n, redrawn until both networks are away from ReLU kinks.
inline std::vector<double> random_state(const oss_mentor::PolicyParams& p, oss_mentor::Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(p.actor.state_dim());
    do {
        for (auto& v : s) v = u(rng);
    } while (!away_from_kinks(p.actor.hidden_w, p.actor.hidden_b, s) ||
             !away_from_kinks(p.critic.hidden_w, p.critic.hidden_b, s));
    return s;
}

template <typename Params, typename Objective, typename Analytic>
Result compare(Params params, Objective&& objective, Analytic&& analytic_gradient, double h) {
    Params grad = analytic_gradient(params);
    std::vector<Eigen::MatrixXd*> grads;
    oss_mentor::for_each_tensor(grad, [&](std::string_view, Eigen::MatrixXd& m) { grads.push_back(&m); });

    Result r;
    std::size_t t = 0;
    oss_mentor::for_each_tensor(params, [&](std::string_view name, Eigen::MatrixXd& m) {
        const auto& g = *grads[t++];
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double keep = m.data()[i];
            m.data()[i] = keep + h;
            const double up = objective(params);
            m.data()[i] = keep - h;
            const double down = objective(params);
            m.data()[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double err = relative_error(g.data()[i], numeric);
            ++r.checked;
            if (err > r.max_relative_error) {
                r.max_relative_error = err;
                r.worst = std::string(name) + "[" + std::to_string(i) + "]";
            }
        }
    });
    return r;
}

/// Gradient of upstream * log_prob(raw | actor(state)).
inline Result check_actor(const oss_mentor::ActorParams& params, const std::vector<double>& state,
                          const std::vector<double>& raw, double upstream, double h = 1e-5) {
    return compare(
        params,
        [&](const oss_mentor::ActorParams& p) {
            return upstream * oss_mentor::gaussian_log_prob(oss_mentor::actor_forward(p, state), raw);
        },
        [&](const oss_mentor::ActorParams& p) { return oss_mentor::actor_backward(p, state, raw, upstream); }, h);
}

/// Gradient of upstream * V(state).
inline Result check_critic(const oss_mentor::CriticParams& params, const std::vector<double>& state, double upstream,
                           double h = 1e-5) {
    return compare(
        params, [&](const oss_mentor::CriticParams& p) { return upstream * oss_mentor::critic_forward(p, state); },
        [&](const oss_mentor::CriticParams& p) { return oss_mentor::critic_backward(p, state, upstream); }, h);
}

}  // namespace gradient_check
