#include "oss_mentor/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "oss_mentor/csv.hpp"

namespace oss_mentor {

void TrainConfig::validate() const {
    if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) throw InputError("train config: learning rates must be positive");
    if (batch_size < 1) throw InputError("train config: batch_size must be at least 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("train config: epsilon must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("train config: gamma must lie in [0, 1]");
    if (episodes < 0) throw InputError("train config: episodes must be non-negative");
    if (horizon < 1) throw InputError("train config: horizon must be at least 1");
    if (!(min_old_prob > 0.0)) throw InputError("train config: min_old_prob must be positive");
    if (epochs < 1) throw InputError("train config: epochs must be at least 1");
    if (hidden < 1) throw InputError("train config: hidden width must be at least 1");
}

// ============================================================================
// Advantages and the clipped objective
// ============================================================================

AdvantageBatch compute_advantages(std::span<const Transition> buffer, double gamma, bool normalize,
                                  double bootstrap_value) {
    if (buffer.empty()) throw InputError("compute_advantages: empty buffer");
    const auto n = buffer.size();
    AdvantageBatch out;
    out.returns.resize(n);
    out.advantages.resize(n);
    double running = bootstrap_value;
    for (std::size_t i = n; i-- > 0;) {
        running = buffer[i].reward + gamma * running;
        out.returns[i] = running;
        out.advantages[i] = running - buffer[i].value;
    }
    if (normalize && n > 1) {
        const double mean = std::accumulate(out.advantages.begin(), out.advantages.end(), 0.0) / static_cast<double>(n);
        double var = 0.0;
        for (double a : out.advantages) var += (a - mean) * (a - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        for (double& a : out.advantages) a = sd > 1e-12 ? (a - mean) / sd : a - mean;
    }
    return out;
}

namespace {

double importance_ratio(double new_log_prob, double old_log_prob, double min_old_prob) {
    const double old_clamped = std::max(old_log_prob, std::log(min_old_prob));
    const double ratio = std::exp(new_log_prob - old_clamped);
    if (!std::isfinite(ratio)) throw std::domain_error("non-finite importance ratio");
    return ratio;
}

}  // namespace

double clipped_surrogate(double new_log_prob, double old_log_prob, double advantage, double epsilon,
                         double min_old_prob) {
    const double ratio = importance_ratio(new_log_prob, old_log_prob, min_old_prob);
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

double clipped_surrogate_gradient(double new_log_prob, double old_log_prob, double advantage, double epsilon,
                                  double min_old_prob) {
    const double ratio = importance_ratio(new_log_prob, old_log_prob, min_old_prob);
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    // The clipped branch is constant in the parameters.
    return ratio * advantage <= clipped * advantage ? ratio * advantage : 0.0;
}

// ============================================================================
// Updates
// ============================================================================

namespace {

template <typename Params>
void axpy(Params& target, double alpha, Params& delta) {
    // target += alpha * delta, tensor by tensor
    std::vector<Eigen::MatrixXd*> deltas;
    for_each_tensor(delta, [&](std::string_view, Eigen::MatrixXd& m) { deltas.push_back(&m); });
    std::size_t i = 0;
    for_each_tensor(target, [&](std::string_view, Eigen::MatrixXd& m) { m += alpha * *deltas[i++]; });
}

template <typename Params>
void accumulate(std::optional<Params>& total, Params&& g) {
    if (!total) {
        total = std::move(g);
    } else {
        axpy(*total, 1.0, g);
    }
}

}  // namespace

void update_policy(PolicyParams& policy, std::span<const Transition> batch, const TrainConfig& config,
                   double bootstrap_value) {
    if (batch.empty()) return;
    const auto adv = compute_advantages(batch, config.gamma, true, bootstrap_value);
    const double n = static_cast<double>(batch.size());

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::optional<ActorParams> actor_grad;
        std::optional<CriticParams> critic_grad;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& tr = batch[i];
            const auto out = actor_forward(policy.actor, tr.state);
            const double new_lp = gaussian_log_prob(out, tr.raw_sample);
            const double g = clipped_surrogate_gradient(new_lp, tr.old_log_prob, adv.advantages[i], config.epsilon,
                                                        config.min_old_prob);
            accumulate(actor_grad, actor_backward(policy.actor, tr.state, tr.raw_sample, g / n));

            const double v = critic_forward(policy.critic, tr.state);
            accumulate(critic_grad, critic_backward(policy.critic, tr.state, 2.0 * (v - adv.returns[i]) / n));
        }
        axpy(policy.actor, config.lr_actor, *actor_grad);
        axpy(policy.critic, -config.lr_critic, *critic_grad);
    }
    if (!all_finite(policy)) {
        throw TrainingDiverged("policy parameters became non-finite after an update on a batch of " +
                               std::to_string(batch.size()) + " transitions");
    }
}

// ============================================================================
// Episodes
// ============================================================================

double EpisodeReport::mean_reward() const {
    if (rewards.empty()) return 0.0;
    return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
}

double EpisodeReport::mean_contribution() const {
    if (contributions.empty()) return 0.0;
    return std::accumulate(contributions.begin(), contributions.end(), 0.0) / static_cast<double>(contributions.size());
}

double default_reward_scale(const ContributionEnv& env) {
    const double s = contribution(env.weights(), env.pool().action_caps());
    return s > 0.0 ? s : 1.0;
}

EpisodeReport train_episode(ContributionEnv& env, PolicyParams& policy, const TrainConfig& config, Rng& rng,
                            double reward_scale, UpdateSchedule schedule) {
    config.validate();
    if (!(reward_scale > 0.0)) throw InputError("reward scale must be positive");
    const int horizon = env.config().horizon;
    const auto& scale = env.pool().action_caps();

    EpisodeReport report;
    std::vector<Transition> buffer;
    EnvState state = env.reset();
    for (int t = 1; t <= horizon; ++t) {
        Transition tr;
        tr.state = state.features();
        const auto out = actor_forward(policy.actor, tr.state);
        auto sample = sample_action(out, rng, scale);
        tr.value = critic_forward(policy.critic, tr.state);
        tr.raw_sample = std::move(sample.raw);
        tr.action = sample.action;
        tr.old_log_prob = sample.log_prob;

        auto outcome = env.step(state, sample.action);
        tr.reward = outcome.reward / reward_scale;
        buffer.push_back(std::move(tr));

        report.rewards.push_back(outcome.reward);
        report.contributions.push_back(outcome.contribution);
        report.cumulative.push_back(env.cumulative());

        const bool batch_boundary = schedule == UpdateSchedule::EveryBatch && t % config.batch_size == 0;
        if ((batch_boundary || t == horizon) && !buffer.empty()) {
            const double bootstrap = outcome.done ? 0.0 : critic_forward(policy.critic, outcome.next_state.features());
            update_policy(policy, buffer, config, bootstrap);
            ++report.updates;
            buffer.clear();
        }
        state = std::move(outcome.next_state);
    }
    return report;
}

EpisodeReport train_episode_ppo_variant(ContributionEnv& env, PolicyParams& policy, const TrainConfig& config,
                                        Rng& rng, double reward_scale) {
    return train_episode(env, policy, config, rng, reward_scale, UpdateSchedule::EndOfEpisode);
}

std::shared_ptr<const PoolIndex> build_pool_index(const ContributorPool& pool, const WeightVector& weights) {
    return std::make_shared<const PoolIndex>(annotate_pool(pool, weights));
}

TrainResult train(const ContributorPool& pool, const WeightVector& weights, EnvConfig env_config,
                  const TrainConfig& config, UpdateSchedule schedule, std::optional<PolicyParams> initial) {
    config.validate();
    env_config.horizon = config.horizon;
    ContributionEnv env(build_pool_index(pool, weights), weights, env_config);
    Rng rng(config.seed);

    TrainResult result;
    if (initial) {
        result.policy = std::move(*initial);
    } else {
        result.policy.actor = ActorParams::init(env.state_dimension(), env.dimensions(), rng, config.hidden);
        result.policy.critic = CriticParams::init(env.state_dimension(), rng, config.hidden);
    }
    const double reward_scale = default_reward_scale(env);
    for (int episode = 1; episode <= config.episodes; ++episode) {
        const auto report = train_episode(env, result.policy, config, rng, reward_scale, schedule);
        result.curve.push_back({episode, report.mean_contribution(), report.mean_reward()});
    }
    return result;
}

EpisodeReport random_policy_episode(ContributionEnv& env, Rng& rng) {
    const auto& scale = env.pool().action_caps();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    EpisodeReport report;
    EnvState state = env.reset();
    for (int t = 0; t < env.config().horizon; ++t) {
        ActionVector action(scale.size());
        for (std::size_t d = 0; d < scale.size(); ++d) action[d] = std::llround(unit(rng) * scale[d]);
        auto outcome = env.step(state, action);
        report.rewards.push_back(outcome.reward);
        report.contributions.push_back(outcome.contribution);
        report.cumulative.push_back(env.cumulative());
        state = std::move(outcome.next_state);
    }
    return report;
}

void write_learning_curve(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
    CsvWriter csv(path, {"episode", "mean_step_contribution", "mean_reward"});
    for (const auto& p : curve) csv.row(p.episode, p.mean_step_contribution, p.mean_reward);
}

}  // namespace oss_mentor
