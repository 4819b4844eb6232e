#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string_view>

#include "oss_mentor/types.hpp"

namespace oss_mentor {

using Rng = std::mt19937_64;

/// Hidden ReLU layer feeding a tanh mean head and a softplus variance head.
/// Biases are stored as n x 1 matrices so every tensor has the same type.
struct ActorParams {
    Eigen::MatrixXd hidden_w;  // hidden x state_dim
    Eigen::MatrixXd hidden_b;  // hidden x 1
    Eigen::MatrixXd mean_w;    // action_dim x hidden
    Eigen::MatrixXd mean_b;    // action_dim x 1
    Eigen::MatrixXd var_w;     // action_dim x hidden
    Eigen::MatrixXd var_b;     // action_dim x 1

    static ActorParams zeros(std::size_t state_dim, std::size_t action_dim, std::size_t hidden = 64);
    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    static ActorParams init(std::size_t state_dim, std::size_t action_dim, Rng& rng, std::size_t hidden = 64);

    std::size_t state_dim() const { return static_cast<std::size_t>(hidden_w.cols()); }
    std::size_t action_dim() const { return static_cast<std::size_t>(mean_w.rows()); }
    std::size_t hidden() const { return static_cast<std::size_t>(hidden_w.rows()); }
};

/// Hidden ReLU layer feeding a scalar state-value head.
struct CriticParams {
    Eigen::MatrixXd hidden_w;  // hidden x state_dim
    Eigen::MatrixXd hidden_b;  // hidden x 1
    Eigen::MatrixXd value_w;   // 1 x hidden
    Eigen::MatrixXd value_b;   // 1 x 1

    static CriticParams zeros(std::size_t state_dim, std::size_t hidden = 64);
    static CriticParams init(std::size_t state_dim, Rng& rng, std::size_t hidden = 64);

    std::size_t state_dim() const { return static_cast<std::size_t>(hidden_w.cols()); }
    std::size_t hidden() const { return static_cast<std::size_t>(hidden_w.rows()); }
};

struct PolicyParams {
    ActorParams actor;
    CriticParams critic;
};

/// Visits every tensor with its checkpoint name ("actor.hidden.weight", ...).
void for_each_tensor(ActorParams& params, const std::function<void(std::string_view, Eigen::MatrixXd&)>& fn);
void for_each_tensor(CriticParams& params, const std::function<void(std::string_view, Eigen::MatrixXd&)>& fn);
void for_each_tensor(PolicyParams& params, const std::function<void(std::string_view, Eigen::MatrixXd&)>& fn);

bool all_finite(const PolicyParams& params);

// ============================================================================
// Forward / sampling
// ============================================================================

struct PolicyOutput {
    RealVector mean;      // in (-1, 1)
    RealVector variance;  // > 0
};

PolicyOutput actor_forward(const ActorParams& params, std::span<const double> state);
double critic_forward(const CriticParams& params, std::span<const double> state);

/// Diagonal Gaussian log-density of a raw (pre-squash) sample.
double gaussian_log_prob(const PolicyOutput& output, std::span<const double> raw);

/// round(clip((x + 1) / 2, 0, 1) * scale) per dimension.
ActionVector action_from_raw(std::span<const double> raw, std::span<const double> scale);

struct SampledAction {
    ActionVector action;
    RealVector raw;
    double log_prob = 0.0;
};

SampledAction sample_action(const PolicyOutput& output, Rng& rng, std::span<const double> scale);

// ============================================================================
// Gradients
// ============================================================================

/// Gradient of upstream * log_prob(raw | actor(state)) w.r.t. every actor tensor.
ActorParams actor_backward(const ActorParams& params, std::span<const double> state, std::span<const double> raw,
                           double upstream);

/// Gradient of upstream * V(state) w.r.t. every critic tensor.
CriticParams critic_backward(const CriticParams& params, std::span<const double> state, double upstream);

// ============================================================================
// Checkpoints
// ============================================================================

/// {"format": "oss-mentor-checkpoint", "version": 1, "tensors": [{"name",
/// "shape": [rows, cols], "data": [row-major values]}]}
void write_checkpoint(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams read_checkpoint(const std::filesystem::path& path);

}  // namespace oss_mentor
