#pragma once

// Slow reference implementations used by `limbrl check` and the test suite.
// Each one reaches its answer by a different route than the production code:
// arc integration instead of the closed form, pixel-ray scanning instead of
// projection, quadrature instead of the incomplete beta function.

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <random>

#include "limbrl/evaluation.hpp"
#include "limbrl/kinematics.hpp"
#include "limbrl/neural.hpp"
#include "limbrl/vision.hpp"

namespace limbrl::oracle {

// Tip position by integrating the soft-section tangent with `steps`
// midpoint-rule arc steps. Rigid transforms built from Eigen::AngleAxis.
inline Eigen::Vector3d tip_position(const JointAngles& q, const LimbModel& m, int steps = 1000) {
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  const Eigen::Matrix3d shoulder = (AngleAxisd(deg2rad(q[0]), Vector3d::UnitZ()) *
                                    AngleAxisd(deg2rad(q[1]), Vector3d::UnitY()))
                                       .toRotationMatrix();
  const Vector3d wrist_pos = Vector3d(0, 0, m.base_height) + shoulder * Vector3d(m.rigid_link_length, 0, 0);
  const Eigen::Matrix3d wrist = shoulder * AngleAxisd(deg2rad(q[2]), Vector3d::UnitY()).toRotationMatrix();

  const double kappa = deg2rad(q[3]) / m.soft_section_length;
  const double h = m.soft_section_length / steps;
  Vector3d local = Vector3d::Zero();
  for (int i = 0; i < steps; ++i) {
    const double phi = kappa * (i + 0.5) * h;
    local += h * Vector3d(std::cos(phi), 0.0, -std::sin(phi));
  }
  return wrist_pos + wrist * local;
}

struct RasterVerdict {
  bool visible = false;
  double border_distance_px = 0.0;  // distance of the analytic (u, v) to the nearest image edge
};

// Visibility by scanning pixel-centre rays. A pixel column (row) contains the
// target when the target's horizontal (vertical) angle lies within half that
// pixel's angular pitch of the column's (row's) centre ray.
inline RasterVerdict rasterize(const Frame& pose, const CameraIntrinsics& intr, const Eigen::Vector3d& target) {
  Eigen::Affine3d world_from_cam = Eigen::Affine3d::Identity();
  world_from_cam.linear() = pose.orientation;
  world_from_cam.translation() = pose.position;
  const Eigen::Vector3d p = world_from_cam.inverse() * target;

  RasterVerdict out;
  const double f = intr.focal();
  const double ang_y = std::atan2(-p.y(), p.x());  // increases with u
  const double ang_z = std::atan2(-p.z(), p.x());  // increases with v
  const double u = intr.cx() + f * std::tan(ang_y);
  const double v = intr.cy() + f * std::tan(ang_z);
  out.border_distance_px = std::min({std::abs(u), std::abs(u - intr.image_width), std::abs(v),
                                     std::abs(v - intr.image_height)});
  if (!(p.x() > intr.near && p.x() <= intr.far)) return out;

  auto covered = [&](double ang, int pixels, double centre) {
    for (int i = 0; i < pixels; ++i) {
      const double ray = std::atan((i + 0.5 - centre) / f);
      const double lo = std::atan((i - centre) / f);
      const double hi = std::atan((i + 1.0 - centre) / f);
      const double half = ang < ray ? ray - lo : hi - ray;
      if (std::abs(ang - ray) <= half && !(ang == hi)) return true;
    }
    return false;
  };
  out.visible = covered(ang_y, intr.image_width, intr.cx()) && covered(ang_z, intr.image_height, intr.cy());
  return out;
}

struct VisibilitySweep {
  int cases = 0;
  int agree = 0;
  int visible = 0;  // cases the analytic test calls visible
  double worst_disagreement_border_px = 0.0;
};

// Random camera poses with targets drawn around the frustum so both verdicts
// are well represented.
inline VisibilitySweep visibility_sweep(int cases, std::uint64_t seed, const CameraIntrinsics& intr = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> depth(0.0, intr.far * 1.15);
  VisibilitySweep s;
  const double f = intr.focal();
  for (int i = 0; i < cases; ++i) {
    Eigen::Quaterniond q(unit(rng), unit(rng), unit(rng), unit(rng));
    if (q.norm() < 1e-6) q = Eigen::Quaterniond::Identity();
    Frame pose;
    pose.orientation = q.normalized().toRotationMatrix();
    pose.position = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    const double x = depth(rng);
    const double y = -x * (unit(rng) * 0.65 * intr.image_width) / f;
    const double z = -x * (unit(rng) * 0.65 * intr.image_height) / f;
    const Eigen::Vector3d target = pose.apply(Eigen::Vector3d(x, y, z));

    const bool analytic = project(pose, intr, target).has_value();
    const auto ref = rasterize(pose, intr, target);
    ++s.cases;
    s.visible += analytic;
    if (analytic == ref.visible)
      ++s.agree;
    else
      s.worst_disagreement_border_px = std::max(s.worst_disagreement_border_px, ref.border_distance_px);
  }
  return s;
}

// Two-sided Student-t p-value by composite Simpson integration of the density
// over [0, |t|].
inline double t_two_sided_p(double t, double df, int intervals = 20000) {
  if (intervals % 2) ++intervals;
  const double a = std::abs(t);
  const double logc = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi);
  auto pdf = [&](double x) { return std::exp(logc - 0.5 * (df + 1.0) * std::log1p(x * x / df)); };
  const double h = a / intervals;
  double sum = pdf(0.0) + pdf(a);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
  return std::max(0.0, 1.0 - 2.0 * sum * h / 3.0);
}

struct GradientSweep {
  int networks = 0;
  double worst = 0.0;
};

// Random MLPs (1 to 3 layers, widths 1..64, mixed activations) under a
// squared-error loss against a random target.
inline GradientSweep gradient_sweep(int networks, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> width(1, 64), depth(1, 3), coin(0, 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  GradientSweep s;
  for (int n = 0; n < networks; ++n) {
    const int layers = depth(rng);
    std::vector<LayerShape> shapes;
    int in = width(rng);
    for (int l = 0; l < layers; ++l) {
      const int out = width(rng);
      shapes.push_back({in, out, coin(rng) ? Activation::Tanh : Activation::Identity});
      in = out;
    }
    Network net(shapes);
    net.init_uniform(rng, 1.0, 1.0);
    for (Eigen::Index i = 0; i < net.params().size(); ++i)
      if (std::abs(net.params()[i]) == 0.0) net.mutable_params()[i] = 0.1 * gauss(rng);
    Eigen::VectorXd x(shapes.front().inputs), y(shapes.back().outputs);
    for (auto& v : x) v = gauss(rng);
    for (auto& v : y) v = gauss(rng);
    const LossFn loss = [y](const Eigen::VectorXd& out, Eigen::VectorXd& grad) {
      grad = out - y;
      return 0.5 * grad.squaredNorm();
    };
    s.worst = std::max(s.worst, gradient_check(net, loss, x));
    ++s.networks;
  }
  return s;
}

}  // namespace limbrl::oracle
