#pragma once

// Proximal policy optimization for the continuous task: a Gaussian policy
// with a state-independent log standard deviation, a separate critic, GAE
// advantages and the clipped surrogate objective.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "limbrl/episode.hpp"
#include "limbrl/error.hpp"
#include "limbrl/neural.hpp"

namespace limbrl {

struct PpoConfig {
  int episodes_per_update = 15;
  long total_steps = 3600;
  double clip_ratio = 0.2;
  double gamma = 0.9;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatch_size = 16;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double learning_rate = 1e-3;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double init_log_std = -1.0;
  // Policy outputs are in units of this many degrees.
  double action_scale_deg = 36.0;
  double hidden_gain = std::numbers::sqrt2;
  double output_gain = 0.01;

  void validate() const {
    if (!(clip_ratio > 0.0 && clip_ratio < 1.0)) throw ConfigError("ppo clip_ratio must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo gamma must lie in (0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo gae_lambda must lie in [0, 1]");
    if (episodes_per_update < 1 || total_steps < 1 || epochs < 1 || minibatch_size < 1)
      throw ConfigError("ppo counts must be positive");
    if (!(learning_rate > 0.0) || !(max_grad_norm > 0.0) || !(action_scale_deg > 0.0))
      throw ConfigError("ppo learning_rate, max_grad_norm and action_scale_deg must be positive");
  }
};

struct Transition {
  Observation observation{};
  Eigen::VectorXd action;  // continuous sample in policy units, before any clipping
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  double bootstrap_value = 0.0;  // V(next observation), used on truncated steps only
};

struct RolloutBuffer {
  std::vector<Transition> steps;
  std::vector<EpisodeLog> episodes;
};

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;
};

struct PpoDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  // Largest |ratio - 1| and clip fraction in the very first minibatch.
  double first_minibatch_max_ratio_error = 0.0;
  double first_minibatch_clip_fraction = 0.0;
};

inline double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                const Eigen::VectorXd& x) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - half_log_2pi;
  }
  return lp;
}

inline double gaussian_entropy(const Eigen::VectorXd& log_std) {
  return (log_std.array() + 0.5 + 0.5 * std::log(2.0 * std::numbers::pi)).sum();
}

// min(r A, clip(r, 1-eps, 1+eps) A): the per-sample objective being maximized.
inline double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

class PpoAgent {
 public:
  struct Sample {
    Eigen::VectorXd action;
    double log_prob = 0.0;
    double value = 0.0;
  };

  PpoAgent(const PpoConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        actor_(Network::mlp(kObservationSize, cfg.actor_hidden, kNumJoints)),
        critic_(Network::mlp(kObservationSize, cfg.critic_hidden, 1)),
        log_std_(Eigen::VectorXd::Constant(kNumJoints, cfg.init_log_std)),
        rng_(seed) {
    cfg_.validate();
    actor_.init_uniform(rng_, cfg.hidden_gain, cfg.output_gain);
    critic_.init_uniform(rng_, cfg.hidden_gain, cfg.output_gain);
    actor_opt_ = AdamState::for_size(actor_.num_params(), cfg.learning_rate);
    log_std_opt_ = AdamState::for_size(kNumJoints, cfg.learning_rate);
    critic_opt_ = AdamState::for_size(critic_.num_params(), cfg.learning_rate);
  }

  Sample act(const Observation& obs) {
    const Eigen::VectorXd x = to_vector(obs);
    const Eigen::VectorXd mean = evaluate(actor_, x);
    std::normal_distribution<double> normal(0.0, 1.0);
    Sample s;
    s.action.resize(kNumJoints);
    for (int i = 0; i < kNumJoints; ++i) s.action[i] = mean[i] + std::exp(log_std_[i]) * normal(rng_);
    s.log_prob = gaussian_log_prob(mean, log_std_, s.action);
    s.value = value(obs);
    return s;
  }

  double log_prob(const Observation& obs, const Eigen::VectorXd& action) const {
    return gaussian_log_prob(evaluate(actor_, to_vector(obs)), log_std_, action);
  }
  double value(const Observation& obs) const { return evaluate(critic_, to_vector(obs))[0]; }
  Eigen::VectorXd mean_action(const Observation& obs) const { return evaluate(actor_, to_vector(obs)); }

  // Degrees sent to the environment for a policy-unit action.
  JointAngles to_degrees(const Eigen::VectorXd& action) const {
    JointAngles out{};
    for (int i = 0; i < kNumJoints; ++i) out[i] = cfg_.action_scale_deg * action[i];
    return out;
  }

  const PpoConfig& config() const { return cfg_; }
  const Network& actor() const { return actor_; }
  const Network& critic() const { return critic_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }
  Network& actor() { return actor_; }
  Network& critic() { return critic_; }
  Eigen::VectorXd& log_std() { return log_std_; }
  std::mt19937_64& rng() { return rng_; }

  bool parameters_finite() const {
    return actor_.params().allFinite() && critic_.params().allFinite() && log_std_.allFinite();
  }

 private:
  friend PpoDiagnostics ppo_update(PpoAgent&, const RolloutBuffer&, const AdvantageEstimate&);

  PpoConfig cfg_;
  Network actor_;
  Network critic_;
  Eigen::VectorXd log_std_;
  AdamState actor_opt_;
  AdamState log_std_opt_;
  AdamState critic_opt_;
  std::mt19937_64 rng_;
};

// Runs `episodes` complete episodes (fewer if `step_budget` runs out; the
// episode in progress is always finished). Env must provide reset() and
// step_continuous().
template <class Env>
RolloutBuffer ppo_collect(Env& env, PpoAgent& agent, int episodes,
                          long step_budget = std::numeric_limits<long>::max(), int first_episode_index = 0) {
  RolloutBuffer buf;
  long steps = 0;
  for (int e = 0; e < episodes && steps < step_budget; ++e) {
    Observation obs = env.reset();
    EpisodeLog log;
    log.episode = first_episode_index + e;
    log.mask = mask_from_observation(obs);
    while (true) {
      auto sample = agent.act(obs);
      const JointAngles deg = agent.to_degrees(sample.action);
      const StepResult r = env.step_continuous(deg);
      ++steps;

      Transition t;
      t.observation = obs;
      t.action = std::move(sample.action);
      t.log_prob = sample.log_prob;
      t.value = sample.value;
      t.reward = r.reward;
      t.terminated = r.terminated;
      t.truncated = r.truncated;
      if (r.truncated) t.bootstrap_value = agent.value(r.observation);
      buf.steps.push_back(std::move(t));

      log.continuous_actions.push_back(deg);
      log.reward += r.reward;
      obs = r.observation;
      if (r.terminated || r.truncated) {
        log.length = static_cast<int>(log.continuous_actions.size());
        log.detected = r.terminated;
        log.truncated = r.truncated;
        break;
      }
    }
    buf.episodes.push_back(std::move(log));
  }
  return buf;
}

// GAE over a buffer of complete episodes. Terminated steps do not bootstrap;
// truncated steps bootstrap from Transition::bootstrap_value.
inline AdvantageEstimate compute_gae(const std::vector<Transition>& steps, double gamma, double lambda) {
  const std::size_t n = steps.size();
  AdvantageEstimate out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const auto& t = steps[k];
    const bool last_of_episode = t.terminated || t.truncated || k + 1 == n;
    if (last_of_episode) {
      next_value = t.terminated ? 0.0 : t.bootstrap_value;
      next_adv = 0.0;
    }
    const double delta = t.reward + gamma * next_value - t.value;
    const double adv = delta + gamma * lambda * next_adv;
    out.advantages[k] = adv;
    out.returns[k] = adv + t.value;
    next_adv = adv;
    next_value = t.value;
  }
  return out;
}

// Mean 0 / std 1 in place; left alone for a single sample.
inline void normalize_advantages(std::vector<double>& adv) {
  if (adv.size() < 2) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::max(std::sqrt(var / (n - 1.0)), 1e-8);
  for (double& a : adv) a = (a - mean) / sd;
}

inline PpoDiagnostics ppo_update(PpoAgent& agent, const RolloutBuffer& buffer, const AdvantageEstimate& est) {
  const auto& cfg = agent.cfg_;
  const std::size_t n = buffer.steps.size();
  if (n == 0) throw UsageError("ppo_update: empty rollout buffer");
  if (est.advantages.size() != n || est.returns.size() != n) throw ShapeError("ppo_update: advantage size mismatch");

  std::vector<double> adv = est.advantages;
  normalize_advantages(adv);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  PpoDiagnostics diag;
  double sum_pl = 0.0, sum_vl = 0.0, sum_kl = 0.0, clipped = 0.0;
  long samples = 0;
  bool first = true;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), agent.rng_);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.minibatch_size));
      const double inv_b = 1.0 / static_cast<double>(end - start);

      Eigen::VectorXd g_actor = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(agent.actor_.num_params()));
      Eigen::VectorXd g_log_std = Eigen::VectorXd::Zero(kNumJoints);
      Eigen::VectorXd g_critic = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(agent.critic_.num_params()));
      const Eigen::ArrayXd inv_std = (-agent.log_std_.array()).exp();
      double mb_clipped = 0.0, mb_max_err = 0.0;

      for (std::size_t idx = start; idx < end; ++idx) {
        const auto& t = buffer.steps[order[idx]];
        const double a_hat = adv[order[idx]];
        const Eigen::VectorXd x = to_vector(t.observation);

        auto fa = forward(agent.actor_, x);
        const double logp = gaussian_log_prob(fa.output, agent.log_std_, t.action);
        const double log_ratio = logp - t.log_prob;
        const double ratio = std::exp(log_ratio);
        const double unclipped = ratio * a_hat;
        const double objective = clipped_surrogate(ratio, a_hat, cfg.clip_ratio);
        if (!std::isfinite(objective)) throw DivergenceError("ppo_update: non-finite surrogate objective");

        // The gradient flows only through the unclipped branch when it is the minimum.
        const double dloss_dlogp = (unclipped <= objective) ? -ratio * a_hat * inv_b : 0.0;
        const Eigen::ArrayXd z = (t.action - fa.output).array() * inv_std;
        const Eigen::VectorXd dmean = (dloss_dlogp * z * inv_std).matrix();
        g_actor += backward(agent.actor_, fa.cache, dmean).params;
        g_log_std += (dloss_dlogp * (z * z - 1.0)).matrix();

        auto fc = forward(agent.critic_, x);
        const double verr = fc.output[0] - est.returns[order[idx]];
        Eigen::VectorXd dv(1);
        dv[0] = cfg.value_coef * verr * inv_b;
        g_critic += backward(agent.critic_, fc.cache, dv).params;

        const bool was_clipped = std::abs(ratio - 1.0) > cfg.clip_ratio;
        mb_clipped += was_clipped ? 1.0 : 0.0;
        mb_max_err = std::max(mb_max_err, std::abs(ratio - 1.0));
        sum_pl += -objective;
        sum_vl += 0.5 * verr * verr;
        sum_kl += (ratio - 1.0) - log_ratio;
        ++samples;
      }
      clipped += mb_clipped;
      if (first) {
        diag.first_minibatch_clip_fraction = mb_clipped * inv_b;
        diag.first_minibatch_max_ratio_error = mb_max_err;
        first = false;
      }

      // entropy bonus: loss -= c_e * H, dH/dlog_std = 1
      g_log_std.array() -= cfg.entropy_coef;

      clip_global_norm({&g_actor, &g_log_std, &g_critic}, cfg.max_grad_norm);
      if (!g_actor.allFinite() || !g_log_std.allFinite() || !g_critic.allFinite())
        throw DivergenceError("ppo_update: non-finite gradient");
      adam_step(agent.actor_, g_actor, agent.actor_opt_);
      adam_step(agent.log_std_, g_log_std, agent.log_std_opt_);
      adam_step(agent.critic_, g_critic, agent.critic_opt_);
    }
  }

  const double s = static_cast<double>(samples);
  diag.policy_loss = sum_pl / s;
  diag.value_loss = sum_vl / s;
  diag.approx_kl = sum_kl / s;
  diag.clip_fraction = clipped / s;
  diag.entropy = gaussian_entropy(agent.log_std_);
  if (!std::isfinite(diag.policy_loss) || !std::isfinite(diag.value_loss) || !agent.parameters_finite())
    throw DivergenceError("ppo_update: training diverged (non-finite loss or parameters)");
  return diag;
}

}  // namespace limbrl
