#pragma once

// Brownian-motion baselines: BMMS moves every servo by an independent uniform
// delta each step, BMSS moves one uniformly chosen servo by one discrete step.

#include <random>
#include <string>

#include "limbrl/episode.hpp"
#include "limbrl/error.hpp"

namespace limbrl {

enum class BrownianMode { BMMS, BMSS };

inline JointAngles sample_bmms(double max_delta_deg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-max_delta_deg, max_delta_deg);
  JointAngles d{};
  for (double& x : d) x = dist(rng);
  return d;
}

inline DiscreteAction sample_bmss(std::mt19937_64& rng) {
  return DiscreteAction{std::uniform_int_distribution<int>(0, kNumDiscreteActions - 1)(rng)};
}

// Runs one episode to detection or the environment's step cap. BMMS needs a
// continuous environment, BMSS a discrete one.
template <class Env>
EpisodeLog brownian_episode(Env& env, BrownianMode mode, std::mt19937_64& rng, int episode_index = 0) {
  EpisodeLog log;
  log.episode = episode_index;
  Observation obs = env.reset();
  log.mask = mask_from_observation(obs);
  while (true) {
    StepResult r;
    if (mode == BrownianMode::BMMS) {
      const JointAngles d = sample_bmms(env.config().max_delta_deg, rng);
      log.continuous_actions.push_back(d);
      r = env.step_continuous(d);
    } else {
      const DiscreteAction a = sample_bmss(rng);
      log.discrete_actions.push_back(a.index);
      r = env.step_discrete(a);
    }
    ++log.length;
    log.reward += r.reward;
    if (r.terminated || r.truncated) {
      log.detected = r.terminated;
      log.truncated = r.truncated;
      return log;
    }
  }
}

}  // namespace limbrl
