#pragma once

// Episodic actor-critic for the discrete task. The actor is a softmax over
// eight logits (one per signed servo move); after each complete episode the
// critic regresses onto discounted returns and the actor follows
// (G_t - V(s_t)) * grad log pi(a_t | s_t).

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "limbrl/episode.hpp"
#include "limbrl/error.hpp"
#include "limbrl/neural.hpp"

namespace limbrl {

struct AcConfig {
  int episodes = 250;
  double gamma = 0.95;
  double actor_lr = 1e-3;
  double critic_lr = 1e-2;
  int safety_cap = 500;
  std::vector<int> actor_hidden{32};
  std::vector<int> critic_hidden{32};
  double hidden_gain = std::numbers::sqrt2;
  double output_gain = 0.01;

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ac gamma must lie in (0, 1]");
    if (episodes < 1 || safety_cap < 1) throw ConfigError("ac episodes and safety_cap must be positive");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("ac learning rates must be positive");
  }
};

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

// Inverse-CDF draw from a probability vector.
template <class Rng>
int sample_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

// returns[t] = sum_k gamma^k r_{t+k}; anything after the last step counts as 0.
inline std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    acc = rewards[k] + gamma * acc;
    g[k] = acc;
  }
  return g;
}

struct AcStep {
  Observation observation{};
  int action = 0;
  double reward = 0.0;
};

struct AcGradients {
  Eigen::VectorXd actor;   // descent direction for the actor loss
  Eigen::VectorXd critic;  // gradient of 0.5 * mean (V - G)^2
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

// Averaged over the episode's steps.
inline AcGradients ac_gradients(const Network& actor, const Network& critic, const std::vector<AcStep>& steps,
                                double gamma) {
  std::vector<double> rewards;
  rewards.reserve(steps.size());
  for (const auto& s : steps) rewards.push_back(s.reward);
  const auto returns = discounted_returns(rewards, gamma);

  AcGradients g;
  g.actor = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(actor.num_params()));
  g.critic = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(critic.num_params()));
  if (steps.empty()) return g;
  const double inv_n = 1.0 / static_cast<double>(steps.size());

  for (std::size_t t = 0; t < steps.size(); ++t) {
    const Eigen::VectorXd x = to_vector(steps[t].observation);
    auto fc = forward(critic, x);
    const double v = fc.output[0];
    const double advantage = returns[t] - v;

    Eigen::VectorXd dv(1);
    dv[0] = (v - returns[t]) * inv_n;
    g.critic += backward(critic, fc.cache, dv).params;
    g.critic_loss += 0.5 * (v - returns[t]) * (v - returns[t]) * inv_n;

    auto fa = forward(actor, x);
    const Eigen::VectorXd p = softmax(fa.output);
    // d log pi(a) / d logits = onehot(a) - p; the loss is -advantage * log pi(a).
    Eigen::VectorXd dlogits = p;
    dlogits[steps[t].action] -= 1.0;
    dlogits *= advantage * inv_n;
    g.actor += backward(actor, fa.cache, dlogits).params;
    g.actor_loss += -advantage * std::log(std::max(p[steps[t].action], 1e-300)) * inv_n;
  }
  return g;
}

class AcAgent {
 public:
  AcAgent(const AcConfig& cfg, std::uint64_t seed)
      : cfg_(cfg),
        actor_(Network::mlp(kObservationSize, cfg.actor_hidden, kNumDiscreteActions)),
        critic_(Network::mlp(kObservationSize, cfg.critic_hidden, 1)),
        rng_(seed) {
    cfg_.validate();
    actor_.init_uniform(rng_, cfg.hidden_gain, cfg.output_gain);
    critic_.init_uniform(rng_, cfg.hidden_gain, cfg.output_gain);
    actor_opt_ = AdamState::for_size(actor_.num_params(), cfg.actor_lr);
    critic_opt_ = AdamState::for_size(critic_.num_params(), cfg.critic_lr);
  }

  Eigen::VectorXd probabilities(const Observation& obs) const { return softmax(evaluate(actor_, to_vector(obs))); }
  int act(const Observation& obs) { return sample_categorical(probabilities(obs), rng_); }
  double value(const Observation& obs) const { return evaluate(critic_, to_vector(obs))[0]; }

  void apply(const AcGradients& g) {
    if (!g.actor.allFinite() || !g.critic.allFinite()) throw DivergenceError("actor-critic: non-finite gradient");
    adam_step(actor_, g.actor, actor_opt_);
    adam_step(critic_, g.critic, critic_opt_);
    if (!parameters_finite()) throw DivergenceError("actor-critic: parameters became non-finite");
  }

  bool parameters_finite() const { return actor_.params().allFinite() && critic_.params().allFinite(); }

  const AcConfig& config() const { return cfg_; }
  const Network& actor() const { return actor_; }
  const Network& critic() const { return critic_; }
  Network& actor() { return actor_; }
  Network& critic() { return critic_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  AcConfig cfg_;
  Network actor_;
  Network critic_;
  AdamState actor_opt_;
  AdamState critic_opt_;
  std::mt19937_64 rng_;
};

struct AcEpisodeResult {
  EpisodeLog log;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

// One full episode followed by one update. A safety-capped episode is
// recorded as truncated and still updates, with a zero tail value.
template <class Env>
AcEpisodeResult ac_episode(Env& env, AcAgent& agent, int episode_index = 0) {
  AcEpisodeResult out;
  out.log.episode = episode_index;
  Observation obs = env.reset();
  out.log.mask = mask_from_observation(obs);
  std::vector<AcStep> steps;
  while (true) {
    const int a = agent.act(obs);
    const StepResult r = env.step_discrete(DiscreteAction{a});
    steps.push_back({obs, a, r.reward});
    out.log.discrete_actions.push_back(a);
    out.log.reward += r.reward;
    obs = r.observation;
    if (r.terminated || r.truncated) {
      out.log.detected = r.terminated;
      out.log.truncated = r.truncated;
      break;
    }
  }
  out.log.length = static_cast<int>(steps.size());
  const auto g = ac_gradients(agent.actor(), agent.critic(), steps, agent.config().gamma);
  if (!std::isfinite(g.actor_loss) || !std::isfinite(g.critic_loss))
    throw DivergenceError("actor-critic: non-finite loss");
  agent.apply(g);
  out.actor_loss = g.actor_loss;
  out.critic_loss = g.critic_loss;
  return out;
}

}  // namespace limbrl
