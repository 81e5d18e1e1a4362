#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "limbrl/config.hpp"
#include "limbrl/environment.hpp"

#ifndef LIMBRL_DEFAULT_CONFIG
#error "tests need LIMBRL_DEFAULT_CONFIG"
#endif

namespace limbrl::test {

inline const ExperimentConfig& default_config() {
  static const ExperimentConfig cfg = load_config(LIMBRL_DEFAULT_CONFIG);
  return cfg;
}

inline const LimbModel& default_model() { return default_config().model; }
inline const CameraRig& default_rig() { return default_config().rig; }

inline JointState joints(double yaw, double pitch, double wrist, double curl) {
  return clip_joints({yaw, pitch, wrist, curl}, default_model());
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("limbrl_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace limbrl::test

namespace limbrl::test {

inline Environment make_env(ActionSpace space, KillSetting kill, std::uint64_t seed, int max_steps = -1) {
  EnvConfig ec = default_config().env_config(space, kill, seed);
  ec.max_steps = max_steps > 0 ? max_steps
                 : space == ActionSpace::Continuous ? default_config().env.continuous_max_steps
                                                    : default_config().env.safety_cap;
  return Environment(default_model(), default_rig(), ec);
}

}  // namespace limbrl::test
