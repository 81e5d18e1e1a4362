#pragma once

// Episodic target-finding task. Each episode starts from a random joint
// configuration that does not already see the target, with a freshly sampled
// camera kill mask. Reward is 1 on the step that detects the target.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "limbrl/error.hpp"
#include "limbrl/kinematics.hpp"
#include "limbrl/vision.hpp"

namespace limbrl {

inline constexpr int kObservationSize = kNumJoints + kNumCameras;
inline constexpr int kNumDiscreteActions = 2 * kNumJoints;

using Observation = std::array<double, kObservationSize>;

enum class ActionSpace { Continuous, Discrete };

// A servo index and sign packed as index = 2 * servo + (negative ? 1 : 0).
struct DiscreteAction {
  int index = 0;

  int servo() const { return index / 2; }
  double sign() const { return index % 2 == 0 ? 1.0 : -1.0; }
};

struct StepResult {
  Observation observation{};
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
};

struct EnvConfig {
  ActionSpace action_space = ActionSpace::Continuous;
  KillSetting kill_setting = KillSetting::Kill0;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  int max_steps = 5;
  std::uint64_t seed = 0;
  double max_delta_deg = 36.0;       // per-component clip for continuous actions
  double discrete_step_deg = 22.5;   // magnitude of one discrete action
  int max_reset_tries = 100;

  // Task presets. The continuous preset caps episodes at five steps;
  // the discrete preset only stops at the safety cap.
  static EnvConfig continuous_cap5(KillSetting kill, const Eigen::Vector3d& target, std::uint64_t seed) {
    EnvConfig c;
    c.action_space = ActionSpace::Continuous;
    c.kill_setting = kill;
    c.target = target;
    c.max_steps = 5;
    c.seed = seed;
    return c;
  }
  static EnvConfig discrete_uncapped(KillSetting kill, const Eigen::Vector3d& target, std::uint64_t seed,
                                     int safety_cap = 500) {
    EnvConfig c = continuous_cap5(kill, target, seed);
    c.action_space = ActionSpace::Discrete;
    c.max_steps = safety_cap;
    return c;
  }

  void validate() const {
    if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
    if (!target.allFinite()) throw ConfigError("target must be finite");
    if (!(max_delta_deg > 0.0) || !(discrete_step_deg > 0.0)) throw ConfigError("action magnitudes must be positive");
    if (max_reset_tries < 1) throw ConfigError("max_reset_tries must be at least 1");
  }
};

inline Observation encode_observation(const JointState& joints, const KillMask& mask, const LimbModel& model) {
  Observation obs{};
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& lim = model.joint_limits[i];
    obs[i] = 2.0 * (joints[i] - lim.min_deg) / lim.span() - 1.0;
  }
  for (int i = 0; i < kNumCameras; ++i) obs[kNumJoints + i] = mask.live[i] ? 1.0 : 0.0;
  return obs;
}

inline Eigen::VectorXd to_vector(const Observation& obs) {
  return Eigen::Map<const Eigen::VectorXd>(obs.data(), kObservationSize);
}

template <class Rng>
JointState sample_joints(const LimbModel& model, Rng& rng) {
  JointAngles a{};
  for (int i = 0; i < kNumJoints; ++i) {
    std::uniform_real_distribution<double> dist(model.joint_limits[i].min_deg, model.joint_limits[i].max_deg);
    a[i] = dist(rng);
  }
  return clip_joints(a, model);
}

class Environment {
 public:
  Environment(LimbModel model, CameraRig rig, EnvConfig cfg)
      : model_(std::move(model)), rig_(std::move(rig)), cfg_(std::move(cfg)), rng_(cfg_.seed) {
    model_.validate();
    rig_.validate(model_);
    cfg_.validate();
  }

  Observation reset() {
    const KillMask all_live;
    int tries = 0;
    do {
      if (tries++ == cfg_.max_reset_tries)
        throw ConfigError("target trivially visible: " + std::to_string(cfg_.max_reset_tries) +
                          " consecutive start poses already detect it");
      joints_ = sample_joints(model_, rng_);
    } while (detect(joints_, all_live, cfg_.target, model_, rig_).detected);
    mask_ = sample_kill_mask(cfg_.kill_setting, rng_);
    steps_ = 0;
    active_ = true;
    return observation();
  }

  StepResult step_continuous(const JointAngles& action) {
    require_active(ActionSpace::Continuous);
    JointAngles delta{};
    for (int i = 0; i < kNumJoints; ++i) {
      if (!std::isfinite(action[i])) throw InvalidInput("action component is not finite");
      delta[i] = std::clamp(action[i], -cfg_.max_delta_deg, cfg_.max_delta_deg);
    }
    return advance(delta);
  }

  StepResult step_discrete(DiscreteAction action) {
    require_active(ActionSpace::Discrete);
    if (action.index < 0 || action.index >= kNumDiscreteActions)
      throw InvalidInput("discrete action index " + std::to_string(action.index) + " outside [0, 8)");
    JointAngles delta{};
    delta[action.servo()] = action.sign() * cfg_.discrete_step_deg;
    return advance(delta);
  }

  Observation observation() const { return encode_observation(joints_, mask_, model_); }

  const JointState& joints() const { return joints_; }
  const KillMask& mask() const { return mask_; }
  const EnvConfig& config() const { return cfg_; }
  const LimbModel& model() const { return model_; }
  const CameraRig& rig() const { return rig_; }
  int steps() const { return steps_; }
  bool active() const { return active_; }

 private:
  void require_active(ActionSpace space) const {
    if (cfg_.action_space != space) throw UsageError("action type does not match the environment's action space");
    if (!active_) throw UsageError("step() called outside an episode; call reset() first");
  }

  StepResult advance(const JointAngles& delta) {
    joints_ = apply_delta(joints_, delta, model_);
    ++steps_;
    StepResult r;
    r.terminated = detect(joints_, mask_, cfg_.target, model_, rig_).detected;
    r.reward = r.terminated ? 1.0 : 0.0;
    r.truncated = !r.terminated && steps_ >= cfg_.max_steps;
    r.observation = observation();
    active_ = !(r.terminated || r.truncated);
    return r;
  }

  LimbModel model_;
  CameraRig rig_;
  EnvConfig cfg_;
  std::mt19937_64 rng_;
  JointState joints_;
  KillMask mask_;
  int steps_ = 0;
  bool active_ = false;
};

}  // namespace limbrl
