#pragma once

// Kinematic model of the hybrid limb: a rigid yaw/pitch shoulder, one rigid
// link, a wrist hinge and a tendon-driven soft section approximated as a
// constant-curvature arc.
//
// Conventions: world z is vertical, x points forward from the tower. Pitch,
// wrist and curl all rotate about the local +y axis, so a positive angle
// tips the forward axis downward. Angles in the public API are degrees.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "limbrl/error.hpp"

namespace limbrl {

enum class Joint : int { Yaw = 0, Pitch = 1, Wrist = 2, Curl = 3 };

inline constexpr int kNumJoints = 4;

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

using JointAngles = std::array<double, kNumJoints>;

struct JointLimit {
  double min_deg = 0.0;
  double max_deg = 0.0;

  double span() const { return max_deg - min_deg; }
  double clamp(double deg) const { return std::min(std::max(deg, min_deg), max_deg); }
  bool contains(double deg) const { return deg >= min_deg && deg <= max_deg; }
};

struct LimbModel {
  double base_height = 0.0;
  double rigid_link_length = 0.0;
  double soft_section_length = 0.0;
  int num_soft_hinges = 0;
  std::array<JointLimit, kNumJoints> joint_limits{};

  const JointLimit& limit(Joint j) const { return joint_limits[static_cast<int>(j)]; }

  // Number of frames produced by forward_kinematics().
  int num_frames() const { return num_soft_hinges + 3; }
  int tip_index() const { return num_frames() - 1; }

  void validate() const {
    if (!(base_height > 0.0) || !(rigid_link_length > 0.0) || !(soft_section_length > 0.0))
      throw ConfigError("limb lengths must be positive");
    if (num_soft_hinges < 2) throw ConfigError("limb needs at least two soft hinges");
    for (int i = 0; i < kNumJoints; ++i) {
      const auto& l = joint_limits[i];
      if (!std::isfinite(l.min_deg) || !std::isfinite(l.max_deg) || !(l.min_deg < l.max_deg))
        throw ConfigError("joint limit " + std::to_string(i) + " must satisfy min < max");
    }
  }
};

// The four servo angles [yaw, pitch, wrist, curl] in degrees. Only
// clip_joints()/apply_delta() produce one, so angles are always in range.
class JointState {
 public:
  JointState() = default;

  const JointAngles& angles() const { return angles_; }
  double operator[](Joint j) const { return angles_[static_cast<int>(j)]; }
  double operator[](int i) const { return angles_[i]; }

  bool operator==(const JointState&) const = default;

 private:
  explicit JointState(const JointAngles& a) : angles_(a) {}
  friend JointState clip_joints(const JointAngles& raw, const LimbModel& model);

  JointAngles angles_{};
};

struct Frame {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();

  static Frame identity() { return {}; }

  Frame operator*(const Frame& child) const {
    return {position + orientation * child.position, orientation * child.orientation};
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& local) const { return position + orientation * local; }

  // Heading = local +x axis expressed in the parent frame.
  Eigen::Vector3d heading() const { return orientation.col(0); }

  bool is_proper_rotation(double tol = 1e-9) const {
    const Eigen::Matrix3d err = orientation.transpose() * orientation - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && std::abs(orientation.determinant() - 1.0) <= tol;
  }
};

inline Eigen::Matrix3d rot_y(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitY()).toRotationMatrix();
}
inline Eigen::Matrix3d rot_z(double rad) {
  return Eigen::AngleAxisd(rad, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

inline JointState clip_joints(const JointAngles& raw, const LimbModel& model) {
  JointAngles out{};
  for (int i = 0; i < kNumJoints; ++i) {
    if (!std::isfinite(raw[i])) throw InvalidInput("joint angle " + std::to_string(i) + " is not finite");
    out[i] = model.joint_limits[i].clamp(raw[i]);
  }
  return JointState(out);
}

inline JointState apply_delta(const JointState& joints, const JointAngles& delta, const LimbModel& model) {
  JointAngles raw{};
  for (int i = 0; i < kNumJoints; ++i) {
    if (!std::isfinite(delta[i])) throw InvalidInput("joint delta " + std::to_string(i) + " is not finite");
    raw[i] = joints[i] + delta[i];
  }
  return clip_joints(raw, model);
}

// Frames along a constant-curvature arc of the given length whose heading
// turns by `curl_deg` in total. Frame k sits at arc length k*length/n in the
// section-local frame (frame 0 is the identity).
inline std::vector<Frame> soft_section_frames(double curl_deg, double length, int n) {
  if (!(std::abs(curl_deg) <= 180.0)) throw InvalidInput("curl must lie in [-180, 180] degrees");
  if (!(length > 0.0)) throw InvalidInput("soft section length must be positive");
  if (n < 2) throw InvalidInput("soft section needs at least two hinges");

  const double theta = deg2rad(curl_deg);
  std::vector<Frame> frames;
  frames.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double s = length * k / n;
    const double phi = theta * k / n;
    // x = s sin(phi)/phi, z = -s (1 - cos(phi))/phi, written to stay finite at phi -> 0.
    double sinc = 1.0, versinc = 0.0;
    if (std::abs(phi) > 1e-8) {
      sinc = std::sin(phi) / phi;
      const double half = std::sin(0.5 * phi);
      versinc = 2.0 * half * half / phi;
    } else {
      sinc = 1.0 - phi * phi / 6.0;
      versinc = 0.5 * phi;
    }
    Frame f;
    f.position = Eigen::Vector3d(s * sinc, 0.0, -s * versinc);
    f.orientation = rot_y(phi);
    frames.push_back(f);
  }
  return frames;
}

// World frames: [base, shoulder, wrist, soft hinge 1 .. soft hinge n]; the
// last soft frame is the tip.
inline std::vector<Frame> forward_kinematics(const JointState& joints, const LimbModel& model) {
  std::vector<Frame> frames;
  frames.reserve(model.num_frames());

  frames.push_back(Frame::identity());

  Frame shoulder;
  shoulder.position = Eigen::Vector3d(0.0, 0.0, model.base_height);
  shoulder.orientation = rot_z(deg2rad(joints[Joint::Yaw])) * rot_y(deg2rad(joints[Joint::Pitch]));
  frames.push_back(shoulder);

  Frame wrist;
  wrist.position = shoulder.apply(Eigen::Vector3d(model.rigid_link_length, 0.0, 0.0));
  wrist.orientation = shoulder.orientation * rot_y(deg2rad(joints[Joint::Wrist]));
  frames.push_back(wrist);

  const auto soft = soft_section_frames(joints[Joint::Curl], model.soft_section_length, model.num_soft_hinges);
  for (std::size_t k = 1; k < soft.size(); ++k) frames.push_back(wrist * soft[k]);
  return frames;
}

inline Eigen::Vector3d tip_position(const JointState& joints, const LimbModel& model) {
  return forward_kinematics(joints, model).back().position;
}

}  // namespace limbrl
