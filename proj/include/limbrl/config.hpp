#pragma once

// Experiment configuration in INI form. Sections:
//
//   [geometry]        base_height, rigid_link_length, soft_section_length, num_soft_hinges
//   [joint.<name>]    min_deg, max_deg for yaw, pitch, wrist, curl
//   [rig]             intrinsics shared by all cameras
//   [camera.<name>]   segment, offset_xyz, offset_rpy_deg (+ optional intrinsics overrides)
//                     for tip_a, tip_b, connecting, extension
//   [env] [ppo] [ac] [baseline] [plan]
//
// Lengths are metres, angles degrees. Vectors are whitespace separated.
// Comments are whole lines starting with ';' or '#'. Limb dimensions have no
// built-in defaults; they must come from the file.

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "limbrl/actor_critic.hpp"
#include "limbrl/environment.hpp"
#include "limbrl/error.hpp"
#include "limbrl/evaluation.hpp"
#include "limbrl/kinematics.hpp"
#include "limbrl/ppo.hpp"
#include "limbrl/vision.hpp"

namespace limbrl {

inline constexpr std::array<const char*, kNumJoints> kJointNames{"yaw", "pitch", "wrist", "curl"};
inline constexpr std::array<const char*, kNumCameras> kCameraNames{"tip_a", "tip_b", "connecting", "extension"};

struct EnvDefaults {
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  int continuous_max_steps = 5;
  int safety_cap = 500;
  double max_delta_deg = 36.0;
  double discrete_step_deg = 22.5;
  int max_reset_tries = 100;
};

struct PlanConfig {
  std::vector<Algorithm> learners{Algorithm::PPO, Algorithm::AC};
  std::vector<Algorithm> baselines{Algorithm::BMMS, Algorithm::BMSS};
  std::vector<KillSetting> settings{KillSetting::Kill0, KillSetting::Kill1, KillSetting::Kill1or2};
  int repetitions = 10;
  int baseline_seeds = 1;
  int baseline_episodes = 200;
  std::uint64_t base_seed = 0;
  int parallel = 0;  // 0 = hardware threads, capped at 10
  int ppo_window = 15;
  int ac_window = 50;
  double alpha = 0.01;
  TTestKind t_test = TTestKind::Pooled;
};

struct ExperimentConfig {
  LimbModel model;
  CameraRig rig;
  EnvDefaults env;
  PpoConfig ppo;
  AcConfig ac;
  PlanConfig plan;
  std::string source_text;  // verbatim file contents, hashed into the run manifest

  EnvConfig env_config(ActionSpace space, KillSetting kill, std::uint64_t seed) const {
    EnvConfig c;
    c.action_space = space;
    c.kill_setting = kill;
    c.target = env.target;
    c.seed = seed;
    c.max_delta_deg = env.max_delta_deg;
    c.discrete_step_deg = env.discrete_step_deg;
    c.max_reset_tries = env.max_reset_tries;
    c.max_steps = env.safety_cap;
    return c;
  }
};

namespace detail {

using boost::property_tree::ptree;

inline ptree::path_type key(const std::string& section, const std::string& name) {
  return ptree::path_type(section + "/" + name, '/');
}

template <class T>
T required(const ptree& pt, const std::string& section, const std::string& name) {
  try {
    return pt.get<T>(key(section, name));
  } catch (const boost::property_tree::ptree_error&) {
    throw ConfigError("config: missing or malformed [" + section + "] " + name);
  }
}

template <class T>
T optional(const ptree& pt, const std::string& section, const std::string& name, T fallback) {
  const auto v = pt.get_optional<std::string>(key(section, name));
  if (!v) return fallback;
  std::istringstream in(*v);
  T out{};
  if (!(in >> out)) throw ConfigError("config: malformed [" + section + "] " + name + " = " + *v);
  return out;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::vector<double> numbers(const ptree& pt, const std::string& section, const std::string& name,
                                   std::size_t expected, const std::vector<double>& fallback = {}) {
  const auto v = pt.get_optional<std::string>(key(section, name));
  if (!v) {
    if (fallback.empty()) throw ConfigError("config: missing [" + section + "] " + name);
    return fallback;
  }
  std::vector<double> out;
  for (const auto& w : words(*v)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(w, &used));
      if (used != w.size()) throw std::invalid_argument(w);
    } catch (const std::exception&) {
      throw ConfigError("config: [" + section + "] " + name + " has a non-numeric entry '" + w + "'");
    }
  }
  if (expected && out.size() != expected)
    throw ConfigError("config: [" + section + "] " + name + " needs " + std::to_string(expected) + " values");
  return out;
}

inline std::vector<int> int_list(const ptree& pt, const std::string& section, const std::string& name,
                                 const std::vector<int>& fallback) {
  const auto v = pt.get_optional<std::string>(key(section, name));
  if (!v) return fallback;
  std::vector<int> out;
  for (double d : numbers(pt, section, name, 0)) out.push_back(static_cast<int>(d));
  return out;
}

inline CameraIntrinsics intrinsics(const ptree& pt, const std::string& section, const CameraIntrinsics& base) {
  CameraIntrinsics c = base;
  c.image_width = optional(pt, section, "image_width", c.image_width);
  c.image_height = optional(pt, section, "image_height", c.image_height);
  c.horizontal_fov_deg = optional(pt, section, "horizontal_fov_deg", c.horizontal_fov_deg);
  c.near = optional(pt, section, "near", c.near);
  c.far = optional(pt, section, "far", c.far);
  return c;
}

// R = Rz(yaw) * Ry(pitch) * Rx(roll)
inline Eigen::Matrix3d rpy(double roll_deg, double pitch_deg, double yaw_deg) {
  return (Eigen::AngleAxisd(deg2rad(yaw_deg), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(deg2rad(pitch_deg), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(deg2rad(roll_deg), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace detail

inline LimbModel parse_limb_model(const boost::property_tree::ptree& pt) {
  using detail::required;
  LimbModel m;
  m.base_height = required<double>(pt, "geometry", "base_height");
  m.rigid_link_length = required<double>(pt, "geometry", "rigid_link_length");
  m.soft_section_length = required<double>(pt, "geometry", "soft_section_length");
  m.num_soft_hinges = required<int>(pt, "geometry", "num_soft_hinges");
  for (int i = 0; i < kNumJoints; ++i) {
    const std::string s = std::string("joint.") + kJointNames[i];
    m.joint_limits[i] = {required<double>(pt, s, "min_deg"), required<double>(pt, s, "max_deg")};
  }
  m.validate();
  return m;
}

inline CameraRig parse_camera_rig(const boost::property_tree::ptree& pt, const LimbModel& model) {
  const CameraIntrinsics shared = detail::intrinsics(pt, "rig", CameraIntrinsics{});
  CameraRig rig;
  for (int i = 0; i < kNumCameras; ++i) {
    const std::string s = std::string("camera.") + kCameraNames[i];
    auto& cam = rig.cameras[i];
    cam.name = kCameraNames[i];
    const auto seg = detail::required<std::string>(pt, s, "segment");
    if (seg == "tip") {
      cam.segment = model.tip_index();
    } else {
      try {
        std::size_t used = 0;
        cam.segment = std::stoi(seg, &used);
        if (used != seg.size()) throw std::invalid_argument(seg);
      } catch (const std::exception&) {
        throw ConfigError("config: [" + s + "] segment must be 'tip' or a frame index, got '" + seg + "'");
      }
    }
    const auto xyz = detail::numbers(pt, s, "offset_xyz", 3, {0.0, 0.0, 0.0});
    const auto ang = detail::numbers(pt, s, "offset_rpy_deg", 3, {0.0, 0.0, 0.0});
    cam.offset.position = Eigen::Vector3d(xyz[0], xyz[1], xyz[2]);
    cam.offset.orientation = detail::rpy(ang[0], ang[1], ang[2]);
    cam.intrinsics = detail::intrinsics(pt, s, shared);
  }
  rig.validate(model);
  return rig;
}

inline ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  using detail::optional;

  ExperimentConfig c;
  c.source_text = text;
  c.model = parse_limb_model(pt);
  c.rig = parse_camera_rig(pt, c.model);

  const auto t = detail::numbers(pt, "env", "target", 3);
  c.env.target = Eigen::Vector3d(t[0], t[1], t[2]);
  c.env.continuous_max_steps = optional(pt, "env", "continuous_max_steps", c.env.continuous_max_steps);
  c.env.safety_cap = optional(pt, "env", "safety_cap", c.env.safety_cap);
  c.env.max_delta_deg = optional(pt, "env", "max_delta_deg", c.env.max_delta_deg);
  c.env.discrete_step_deg = optional(pt, "env", "discrete_step_deg", c.env.discrete_step_deg);
  c.env.max_reset_tries = optional(pt, "env", "max_reset_tries", c.env.max_reset_tries);
  if (c.env.continuous_max_steps < 1 || c.env.safety_cap < 1) throw ConfigError("config: step caps must be >= 1");

  auto& p = c.ppo;
  p.episodes_per_update = optional(pt, "ppo", "episodes_per_update", p.episodes_per_update);
  p.total_steps = optional(pt, "ppo", "total_steps", p.total_steps);
  p.clip_ratio = optional(pt, "ppo", "clip_ratio", p.clip_ratio);
  p.gamma = optional(pt, "ppo", "gamma", p.gamma);
  p.gae_lambda = optional(pt, "ppo", "gae_lambda", p.gae_lambda);
  p.epochs = optional(pt, "ppo", "epochs", p.epochs);
  p.minibatch_size = optional(pt, "ppo", "minibatch_size", p.minibatch_size);
  p.entropy_coef = optional(pt, "ppo", "entropy_coef", p.entropy_coef);
  p.value_coef = optional(pt, "ppo", "value_coef", p.value_coef);
  p.max_grad_norm = optional(pt, "ppo", "max_grad_norm", p.max_grad_norm);
  p.learning_rate = optional(pt, "ppo", "learning_rate", p.learning_rate);
  p.actor_hidden = detail::int_list(pt, "ppo", "actor_hidden", p.actor_hidden);
  p.critic_hidden = detail::int_list(pt, "ppo", "critic_hidden", p.critic_hidden);
  p.init_log_std = optional(pt, "ppo", "init_log_std", p.init_log_std);
  p.action_scale_deg = optional(pt, "ppo", "action_scale_deg", c.env.max_delta_deg);
  p.hidden_gain = optional(pt, "ppo", "hidden_gain", p.hidden_gain);
  p.output_gain = optional(pt, "ppo", "output_gain", p.output_gain);
  p.validate();

  auto& a = c.ac;
  a.episodes = optional(pt, "ac", "episodes", a.episodes);
  a.gamma = optional(pt, "ac", "gamma", a.gamma);
  a.actor_lr = optional(pt, "ac", "actor_lr", a.actor_lr);
  a.critic_lr = optional(pt, "ac", "critic_lr", a.critic_lr);
  a.safety_cap = c.env.safety_cap;
  a.actor_hidden = detail::int_list(pt, "ac", "actor_hidden", a.actor_hidden);
  a.critic_hidden = detail::int_list(pt, "ac", "critic_hidden", a.critic_hidden);
  a.hidden_gain = optional(pt, "ac", "hidden_gain", a.hidden_gain);
  a.output_gain = optional(pt, "ac", "output_gain", a.output_gain);
  a.validate();

  auto& pl = c.plan;
  pl.baseline_episodes = optional(pt, "baseline", "episodes", pl.baseline_episodes);
  pl.baseline_seeds = optional(pt, "baseline", "seeds", pl.baseline_seeds);
  if (auto v = pt.get_optional<std::string>(detail::key("plan", "algorithms"))) {
    pl.learners.clear();
    for (const auto& w : detail::words(*v)) pl.learners.push_back(parse_algorithm(w));
  }
  if (auto v = pt.get_optional<std::string>(detail::key("plan", "baselines"))) {
    pl.baselines.clear();
    for (const auto& w : detail::words(*v)) pl.baselines.push_back(parse_algorithm(w));
  }
  if (auto v = pt.get_optional<std::string>(detail::key("plan", "kill_settings"))) {
    pl.settings.clear();
    for (const auto& w : detail::words(*v)) pl.settings.push_back(parse_kill_setting(w));
  }
  for (auto alg : pl.learners)
    if (!is_learner(alg)) throw ConfigError("config: [plan] algorithms accepts PPO and AC only");
  for (auto alg : pl.baselines)
    if (is_learner(alg)) throw ConfigError("config: [plan] baselines accepts BMMS and BMSS only");
  pl.repetitions = optional(pt, "plan", "repetitions", pl.repetitions);
  pl.base_seed = optional<std::uint64_t>(pt, "plan", "base_seed", pl.base_seed);
  pl.parallel = optional(pt, "plan", "parallel", pl.parallel);
  pl.ppo_window = optional(pt, "plan", "ppo_window", pl.ppo_window);
  pl.ac_window = optional(pt, "plan", "ac_window", pl.ac_window);
  pl.alpha = optional(pt, "plan", "alpha", pl.alpha);
  const auto kind = optional<std::string>(pt, "plan", "t_test", "pooled");
  if (kind == "pooled")
    pl.t_test = TTestKind::Pooled;
  else if (kind == "welch")
    pl.t_test = TTestKind::Welch;
  else
    throw ConfigError("config: [plan] t_test must be 'pooled' or 'welch'");
  if (pl.repetitions < 1 || pl.baseline_seeds < 1 || pl.baseline_episodes < 1)
    throw ConfigError("config: repetition and episode counts must be positive");
  if (!(pl.alpha > 0.0 && pl.alpha < 1.0)) throw ConfigError("config: [plan] alpha must lie in (0, 1)");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace limbrl
