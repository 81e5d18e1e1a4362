#pragma once

#include <array>
#include <vector>

#include "limbrl/environment.hpp"

namespace limbrl {

// What a controller did in one episode; serialized one per transcript line.
struct EpisodeLog {
  int episode = 0;
  KillMask mask;
  // Continuous actions are stored in degrees as sent to the environment
  // (before the environment clips them).
  std::vector<JointAngles> continuous_actions;
  std::vector<int> discrete_actions;
  int length = 0;
  double reward = 0.0;
  bool detected = false;
  bool truncated = false;
};

inline KillMask mask_from_observation(const Observation& obs) {
  KillMask m;
  for (int i = 0; i < kNumCameras; ++i) m.live[i] = obs[kNumJoints + i] > 0.5;
  return m;
}

}  // namespace limbrl
