#pragma once

// Simulated camera rig. A target counts as seen when its pinhole projection
// lands inside the image and within the camera's range gate; this stands in
// for fiducial detection on the real limb.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "limbrl/error.hpp"
#include "limbrl/kinematics.hpp"

namespace limbrl {

inline constexpr int kNumCameras = 4;

struct CameraIntrinsics {
  int image_width = 100;
  int image_height = 100;
  double horizontal_fov_deg = 60.0;
  double near = 0.05;
  double far = 1.5;

  // Focal length in pixels; pixels are square.
  double focal() const { return 0.5 * image_width / std::tan(0.5 * deg2rad(horizontal_fov_deg)); }
  double cx() const { return 0.5 * image_width; }
  double cy() const { return 0.5 * image_height; }

  void validate() const {
    if (image_width <= 0 || image_height <= 0) throw ConfigError("camera resolution must be positive");
    if (!(near > 0.0 && near < far)) throw ConfigError("camera range must satisfy 0 < near < far");
    if (!(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0))
      throw ConfigError("camera fov must lie in (0, 180) degrees");
  }
};

// A camera rigidly attached to one of the forward-kinematics frames. The
// optical axis is the camera's local +x; local +y maps to decreasing u and
// local +z to decreasing v.
struct Camera {
  std::string name;
  int segment = 0;
  Frame offset;
  CameraIntrinsics intrinsics;
};

// Ordered [tip_a, tip_b, connecting, extension].
struct CameraRig {
  std::array<Camera, kNumCameras> cameras;

  void validate(const LimbModel& model) const {
    for (const auto& cam : cameras) {
      if (cam.segment < 0 || cam.segment >= model.num_frames())
        throw ConfigError("camera '" + cam.name + "' references missing segment " + std::to_string(cam.segment));
      if (!cam.offset.is_proper_rotation(1e-9)) throw ConfigError("camera '" + cam.name + "' offset is not a rotation");
      cam.intrinsics.validate();
    }
  }
};

enum class KillSetting { Kill0, Kill1, Kill1or2 };

inline const char* to_string(KillSetting s) {
  switch (s) {
    case KillSetting::Kill0: return "Kill0";
    case KillSetting::Kill1: return "Kill1";
    case KillSetting::Kill1or2: return "Kill1or2";
  }
  return "?";
}

inline KillSetting parse_kill_setting(const std::string& s) {
  if (s == "Kill0") return KillSetting::Kill0;
  if (s == "Kill1") return KillSetting::Kill1;
  if (s == "Kill1or2") return KillSetting::Kill1or2;
  throw ConfigError("unknown kill setting '" + s + "'");
}

struct KillMask {
  std::array<bool, kNumCameras> live{true, true, true, true};

  int num_dead() const {
    int n = 0;
    for (bool b : live) n += b ? 0 : 1;
    return n;
  }
  bool operator==(const KillMask&) const = default;
};

struct DetectionResult {
  bool detected = false;
  std::array<bool, kNumCameras> per_camera{};
  std::optional<int> detecting_camera;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

inline std::array<Frame, kNumCameras> camera_poses(const std::vector<Frame>& frames, const CameraRig& rig) {
  std::array<Frame, kNumCameras> poses;
  for (int i = 0; i < kNumCameras; ++i) {
    const auto& cam = rig.cameras[i];
    if (cam.segment < 0 || static_cast<std::size_t>(cam.segment) >= frames.size())
      throw ConfigError("camera '" + cam.name + "' references missing segment " + std::to_string(cam.segment));
    poses[i] = frames[cam.segment] * cam.offset;
  }
  return poses;
}

inline std::optional<Projection> project(const Frame& pose, const CameraIntrinsics& intr,
                                         const Eigen::Vector3d& target) {
  const Eigen::Vector3d p = pose.orientation.transpose() * (target - pose.position);
  const double depth = p.x();
  if (!(depth > intr.near && depth <= intr.far)) return std::nullopt;
  const double f = intr.focal();
  const double u = intr.cx() - f * p.y() / depth;
  const double v = intr.cy() - f * p.z() / depth;
  if (!(u >= 0.0 && u < intr.image_width && v >= 0.0 && v < intr.image_height)) return std::nullopt;
  return Projection{u, v, depth};
}

inline DetectionResult detect(const JointState& joints, const KillMask& mask, const Eigen::Vector3d& target,
                              const LimbModel& model, const CameraRig& rig) {
  const auto poses = camera_poses(forward_kinematics(joints, model), rig);
  DetectionResult out;
  for (int i = 0; i < kNumCameras; ++i) {
    out.per_camera[i] = project(poses[i], rig.cameras[i].intrinsics, target).has_value();
    if (out.per_camera[i] && mask.live[i] && !out.detecting_camera) out.detecting_camera = i;
  }
  out.detected = out.detecting_camera.has_value();
  return out;
}

template <class Rng>
KillMask sample_kill_mask(KillSetting setting, Rng& rng) {
  KillMask mask;
  if (setting == KillSetting::Kill0) return mask;
  std::uniform_int_distribution<int> pick(0, kNumCameras - 1);
  int dead = 1;
  if (setting == KillSetting::Kill1or2) dead = std::bernoulli_distribution(0.5)(rng) ? 1 : 2;
  const int first = pick(rng);
  mask.live[first] = false;
  if (dead == 2) {
    // uniform over the remaining three cameras
    const int offset = std::uniform_int_distribution<int>(1, kNumCameras - 1)(rng);
    mask.live[(first + offset) % kNumCameras] = false;
  }
  return mask;
}

}  // namespace limbrl
