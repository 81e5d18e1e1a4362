#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "limbrl/oracles.hpp"
#include "support.hpp"

using namespace limbrl;
using limbrl::test::default_model;
using limbrl::test::joints;

namespace {

constexpr double kPi = std::numbers::pi;

void expect_vec_near(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double tol) {
  EXPECT_LE((a - b).norm(), tol) << "got " << a.transpose() << " expected " << b.transpose();
}

}  // namespace

TEST(ClipJoints, InteriorUnchanged) {
  EXPECT_EQ(joints(0, 0, 0, 0).angles(), (JointAngles{0, 0, 0, 0}));
  EXPECT_EQ(joints(12.5, -3, 40, -60).angles(), (JointAngles{12.5, -3, 40, -60}));
}

TEST(ClipJoints, ClampsToBounds) {
  EXPECT_EQ(joints(100, 0, 0, 0).angles(), (JointAngles{45, 0, 0, 0}));
  EXPECT_EQ(joints(-50, 50, -80, 200).angles(), (JointAngles{-45, 45, -75, 180}));
}

TEST(ClipJoints, RejectsNonFinite) {
  EXPECT_THROW(clip_joints({NAN, 0, 0, 0}, default_model()), InvalidInput);
  EXPECT_THROW(clip_joints({0, 0, INFINITY, 0}, default_model()), InvalidInput);
}

TEST(ClipJoints, Idempotent) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> wide(-400, 400);
  for (int i = 0; i < 500; ++i) {
    const auto once = clip_joints({wide(rng), wide(rng), wide(rng), wide(rng)}, default_model());
    EXPECT_EQ(clip_joints(once.angles(), default_model()), once);
  }
}

TEST(ApplyDelta, Examples) {
  const auto& m = default_model();
  EXPECT_EQ(apply_delta(joints(0, 0, 0, 0), {36, -36, 0, 0}, m).angles(), (JointAngles{36, -36, 0, 0}));
  EXPECT_EQ(apply_delta(joints(40, 0, 0, 0), {36, 0, 0, 0}, m).angles(), (JointAngles{45, 0, 0, 0}));
  EXPECT_EQ(apply_delta(joints(-45, 45, -75, 180), {-36, 36, -36, 36}, m).angles(),
            (JointAngles{-45, 45, -75, 180}));
  EXPECT_THROW(apply_delta(joints(0, 0, 0, 0), {0, NAN, 0, 0}, m), InvalidInput);
}

TEST(SoftSection, StraightLimit) {
  const auto f = soft_section_frames(0.0, 0.3, 4);
  ASSERT_EQ(f.size(), 5u);
  expect_vec_near(f.back().position, {0.3, 0, 0}, 1e-12);
  expect_vec_near(f.back().heading(), {1, 0, 0}, 1e-12);
}

TEST(SoftSection, HalfTurnChord) {
  const double L = 0.3;
  const auto f = soft_section_frames(180.0, L, 4);
  EXPECT_NEAR(f.back().position.norm(), 2 * L / kPi, 1e-12);
  expect_vec_near(f.back().heading(), {-1, 0, 0}, 1e-12);
}

TEST(SoftSection, QuarterTurnChord) {
  const double L = 0.3;
  const auto f = soft_section_frames(90.0, L, 4);
  EXPECT_NEAR(f.back().position.norm(), 2 * (L / (kPi / 2)) * std::sin(kPi / 4), 1e-12);
}

TEST(SoftSection, FramesOnArcAtEqualSpacing) {
  const double L = 0.3, theta = deg2rad(120.0);
  const auto f = soft_section_frames(120.0, L, 6);
  const double r = L / theta;
  const Eigen::Vector3d centre(0, 0, -r);
  for (std::size_t k = 0; k < f.size(); ++k) {
    EXPECT_NEAR((f[k].position - centre).norm(), r, 1e-12);
    EXPECT_TRUE(f[k].is_proper_rotation());
  }
  for (std::size_t k = 1; k < f.size(); ++k)
    EXPECT_NEAR((f[k].position - f[k - 1].position).norm(), (f[1].position - f[0].position).norm(), 1e-12);
  const double turned = std::atan2(-f.back().heading().z(), f.back().heading().x());
  EXPECT_NEAR(turned, theta, 1e-12);
}

TEST(SoftSection, Preconditions) {
  EXPECT_THROW(soft_section_frames(181, 0.3, 4), InvalidInput);
  EXPECT_THROW(soft_section_frames(10, 0.0, 4), InvalidInput);
  EXPECT_THROW(soft_section_frames(10, 0.3, 1), InvalidInput);
}

TEST(SoftSection, ArcLengthBoundAndConvergence) {
  for (int n : {2, 4, 16, 256}) {
    const auto f = soft_section_frames(170.0, 0.3, n);
    double sum = 0.0;
    for (std::size_t k = 1; k < f.size(); ++k) sum += (f[k].position - f[k - 1].position).norm();
    EXPECT_LE(sum, 0.3 + 1e-12);
    if (n == 256) { EXPECT_LT((0.3 - sum) / 0.3, 1e-3); }
  }
}

TEST(SoftSection, ContinuityNearStraight) {
  const auto a = soft_section_frames(1e-6, 0.3, 4);
  const auto b = soft_section_frames(0.0, 0.3, 4);
  EXPECT_LT((a.back().position - b.back().position).norm(), 1e-6);
}

TEST(ForwardKinematics, ZeroPose) {
  const auto& m = default_model();
  const auto frames = forward_kinematics(joints(0, 0, 0, 0), m);
  ASSERT_EQ(static_cast<int>(frames.size()), m.num_frames());
  expect_vec_near(frames.back().position, {m.rigid_link_length + m.soft_section_length, 0, m.base_height}, 1e-12);
}

TEST(ForwardKinematics, YawRotatesZeroPoseTip) {
  const auto& m = default_model();
  const Eigen::Vector3d zero = tip_position(joints(0, 0, 0, 0), m);
  const Eigen::Vector3d rotated = Eigen::AngleAxisd(deg2rad(45), Eigen::Vector3d::UnitZ()) * zero;
  expect_vec_near(tip_position(joints(45, 0, 0, 0), m), rotated, 1e-12);
}

TEST(ForwardKinematics, ComposedExampleMatchesOracle) {
  const auto& m = default_model();
  const auto q = joints(10, 20, -30, 120);
  expect_vec_near(tip_position(q, m), oracle::tip_position(q.angles(), m), 1e-6);
}

TEST(ForwardKinematics, HalfCurlClosedForm) {
  const auto& m = default_model();
  const Eigen::Vector3d expected(m.rigid_link_length, 0, m.base_height - 2 * m.soft_section_length / kPi);
  expect_vec_near(tip_position(joints(0, 0, 0, 180), m), expected, 1e-9);
}

TEST(ForwardKinematicsProperty, RigidLinkAndRotations) {
  const auto& m = default_model();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto q = sample_joints(m, rng);
    const auto f = forward_kinematics(q, m);
    EXPECT_NEAR((f[2].position - f[1].position).norm(), m.rigid_link_length, 1e-9);
    for (const auto& fr : f) EXPECT_TRUE(fr.is_proper_rotation());
  }
}

TEST(ForwardKinematicsProperty, YawEquivariance) {
  const auto& m = default_model();
  std::mt19937_64 rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto q = sample_joints(m, rng);
    const auto base = joints(0, q[1], q[2], q[3]);
    const Eigen::Matrix3d r = rot_z(deg2rad(q[0]));
    const auto a = forward_kinematics(q, m), b = forward_kinematics(base, m);
    for (std::size_t k = 0; k < a.size(); ++k) {
      expect_vec_near(a[k].position, r * b[k].position, 1e-12);
      if (k > 0) { EXPECT_LE((a[k].orientation - r * b[k].orientation).cwiseAbs().maxCoeff(), 1e-12); }
    }
  }
}

TEST(ForwardKinematicsProperty, Deterministic) {
  const auto& m = default_model();
  const auto q = joints(3, -7, 11, 97);
  const auto a = forward_kinematics(q, m), b = forward_kinematics(q, m);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].position, b[k].position);
    EXPECT_EQ(a[k].orientation, b[k].orientation);
  }
}

TEST(ForwardKinematicsProperty, MatchesIntegrationOracle) {
  const auto& m = default_model();
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto q = sample_joints(m, rng);
    worst = std::max(worst, (tip_position(q, m) - oracle::tip_position(q.angles(), m)).norm());
  }
  EXPECT_LT(worst, 1e-6);
}
