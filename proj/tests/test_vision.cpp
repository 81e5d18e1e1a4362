#include <gtest/gtest.h>

#include "limbrl/oracles.hpp"
#include "support.hpp"

using namespace limbrl;
using limbrl::test::default_model;
using limbrl::test::default_rig;
using limbrl::test::joints;

TEST(Project, OpticalAxisMapsToCentre) {
  const auto p = project(Frame::identity(), CameraIntrinsics{}, {1, 0, 0});
  ASSERT_TRUE(p);
  EXPECT_NEAR(p->u, 50.0, 1e-9);
  EXPECT_NEAR(p->v, 50.0, 1e-9);
  EXPECT_NEAR(p->depth, 1.0, 1e-12);
}

TEST(Project, OutsideHalfFov) { EXPECT_FALSE(project(Frame::identity(), CameraIntrinsics{}, {1, 0.6, 0})); }

TEST(Project, BehindCamera) { EXPECT_FALSE(project(Frame::identity(), CameraIntrinsics{}, {-1, 0, 0})); }

TEST(Project, RangeGate) {
  const CameraIntrinsics intr;
  EXPECT_TRUE(project(Frame::identity(), intr, {intr.far, 0, 0}));
  EXPECT_FALSE(project(Frame::identity(), intr, {intr.far + 1e-9, 0, 0}));
  EXPECT_FALSE(project(Frame::identity(), intr, {intr.near, 0, 0}));
}

TEST(Project, AxisDirections) {
  // local +y goes left (smaller u), local +z goes up (smaller v)
  const auto p = project(Frame::identity(), CameraIntrinsics{}, {1, 0.1, 0.1});
  ASSERT_TRUE(p);
  EXPECT_LT(p->u, 50.0);
  EXPECT_LT(p->v, 50.0);
}

TEST(ProjectProperty, OnAxisAlwaysCentre) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1), d(0.06, 1.5);
  for (int i = 0; i < 500; ++i) {
    Frame pose;
    pose.orientation = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized().toRotationMatrix();
    pose.position = {u(rng), u(rng), u(rng)};
    const auto p = project(pose, CameraIntrinsics{}, pose.apply({d(rng), 0, 0}));
    ASSERT_TRUE(p);
    EXPECT_NEAR(p->u, 50.0, 1e-9);
    EXPECT_NEAR(p->v, 50.0, 1e-9);
  }
}

TEST(CameraPoses, IdentityMountEqualsTip) {
  const auto& m = default_model();
  const auto frames = forward_kinematics(joints(10, -5, 20, 45), m);
  CameraRig rig = default_rig();
  rig.cameras[0].segment = m.tip_index();
  rig.cameras[0].offset = Frame::identity();
  const auto poses = camera_poses(frames, rig);
  EXPECT_LE((poses[0].position - frames.back().position).norm(), 1e-15);
  EXPECT_LE((poses[0].orientation - frames.back().orientation).norm(), 1e-15);
}

TEST(CameraPoses, TranslatedMount) {
  const auto& m = default_model();
  const auto frames = forward_kinematics(joints(10, -5, 20, 45), m);
  CameraRig rig = default_rig();
  rig.cameras[0].segment = m.tip_index();
  rig.cameras[0].offset = Frame::identity();
  rig.cameras[0].offset.position = {0, 0, 0.01};
  const auto poses = camera_poses(frames, rig);
  const Eigen::Vector3d expected = frames.back().position + frames.back().orientation * Eigen::Vector3d(0, 0, 0.01);
  EXPECT_LE((poses[0].position - expected).norm(), 1e-15);
}

TEST(CameraPoses, DefaultRigAtZeroJoints) {
  const auto& m = default_model();
  const auto poses = camera_poses(forward_kinematics(joints(0, 0, 0, 0), m), default_rig());
  const double L1 = m.rigid_link_length, Ls = m.soft_section_length, h = m.base_height;
  const Eigen::Vector3d pos[4] = {{L1 + Ls, 0, h}, {L1 + Ls, 0, h}, {L1 + 0.75 * Ls, 0, h}, {L1 + 0.5 * Ls, 0, h}};
  const double pitch[4] = {0, 90, 60, 60};
  for (int i = 0; i < 4; ++i) {
    const Eigen::Matrix3d r = Eigen::AngleAxisd(deg2rad(pitch[i]), Eigen::Vector3d::UnitY()).toRotationMatrix();
    EXPECT_LE((poses[i].position - pos[i]).norm(), 1e-12) << i;
    EXPECT_LE((poses[i].orientation - r).cwiseAbs().maxCoeff(), 1e-12) << i;
  }
}

TEST(CameraPoses, MissingSegmentIsConfigError) {
  CameraRig rig = default_rig();
  rig.cameras[2].segment = 99;
  EXPECT_THROW(camera_poses(forward_kinematics(joints(0, 0, 0, 0), default_model()), rig), ConfigError);
}

namespace {

// A target half a metre down the tip camera's optical axis.
Eigen::Vector3d on_tip_axis(const JointState& q) {
  const auto poses = camera_poses(forward_kinematics(q, default_model()), default_rig());
  return poses[0].apply({0.5, 0, 0});
}

}  // namespace

TEST(Detect, TipCameraSeesTargetOnAxis) {
  const auto q = joints(0, 0, 0, 0);
  const auto r = detect(q, KillMask{}, on_tip_axis(q), default_model(), default_rig());
  EXPECT_TRUE(r.detected);
  EXPECT_TRUE(r.per_camera[0]);
  ASSERT_TRUE(r.detecting_camera);
  EXPECT_EQ(*r.detecting_camera, 0);
}

TEST(Detect, KilledTipCamerasHideTarget) {
  const auto q = joints(0, 0, 0, 0);
  const auto target = on_tip_axis(q);
  KillMask mask;
  mask.live = {false, false, true, true};
  const auto r = detect(q, mask, target, default_model(), default_rig());
  ASSERT_FALSE(r.per_camera[2] || r.per_camera[3]);
  EXPECT_TRUE(r.per_camera[0]);
  EXPECT_FALSE(r.detected);
  EXPECT_FALSE(r.detecting_camera);
}

TEST(Detect, BeyondFarOnAxis) {
  const auto q = joints(0, 0, 0, 0);
  const auto poses = camera_poses(forward_kinematics(q, default_model()), default_rig());
  const double far = default_rig().cameras[0].intrinsics.far;
  const auto r = detect(q, KillMask{}, poses[0].apply({far + 1e-6, 0, 0}), default_model(), default_rig());
  EXPECT_FALSE(r.per_camera[0]);
}

TEST(DetectProperty, MaskMonotoneAndPerCameraIndependent) {
  const auto& m = default_model();
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> box(-0.6, 0.6);
  for (int i = 0; i < 300; ++i) {
    const auto q = sample_joints(m, rng);
    const Eigen::Vector3d target = i % 2 ? on_tip_axis(q) : Eigen::Vector3d(box(rng), box(rng), 0.2 + box(rng));
    const auto all = detect(q, KillMask{}, target, m, default_rig());
    for (int bits = 0; bits < 16; ++bits) {
      KillMask small;
      for (int c = 0; c < 4; ++c) small.live[c] = (bits >> c) & 1;
      const auto r = detect(q, small, target, m, default_rig());
      EXPECT_EQ(r.per_camera, all.per_camera);
      bool any = false;
      for (int c = 0; c < 4; ++c) any = any || (r.per_camera[c] && small.live[c]);
      EXPECT_EQ(r.detected, any);
      if (r.detected) { EXPECT_TRUE(all.detected); }
    }
  }
}

TEST(KillMask, Kill0AllLive) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_kill_mask(KillSetting::Kill0, rng).num_dead(), 0);
}

TEST(KillMask, Kill1UniformSingleCamera) {
  std::mt19937_64 rng(2);
  std::array<int, 4> dead{};
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto m = sample_kill_mask(KillSetting::Kill1, rng);
    ASSERT_EQ(m.num_dead(), 1);
    for (int c = 0; c < 4; ++c) dead[c] += m.live[c] ? 0 : 1;
  }
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(dead[c] / double(n), 0.25, 0.01);
}

TEST(KillMask, Kill1or2HalfSingle) {
  std::mt19937_64 rng(3);
  const int n = 40000;
  int one = 0;
  std::array<int, 4> dead{};
  for (int i = 0; i < n; ++i) {
    const auto m = sample_kill_mask(KillSetting::Kill1or2, rng);
    ASSERT_GE(m.num_dead(), 1);
    ASSERT_LE(m.num_dead(), 2);
    one += m.num_dead() == 1;
    for (int c = 0; c < 4; ++c) dead[c] += m.live[c] ? 0 : 1;
  }
  EXPECT_NEAR(one / double(n), 0.5, 0.01);
  // each camera dead with probability 0.5 * 1/4 + 0.5 * 2/4
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(dead[c] / double(n), 0.375, 0.01);
}

TEST(KillMask, ReproducibleFromRngState) {
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 200; ++i)
    EXPECT_EQ(sample_kill_mask(KillSetting::Kill1or2, a), sample_kill_mask(KillSetting::Kill1or2, b));
}

TEST(KillSetting, ParseRoundTrip) {
  for (auto s : {KillSetting::Kill0, KillSetting::Kill1, KillSetting::Kill1or2})
    EXPECT_EQ(parse_kill_setting(to_string(s)), s);
  EXPECT_THROW(parse_kill_setting("Kill3"), ConfigError);
}

TEST(VisibilityOracle, AgreesWithProjection) {
  const auto s = oracle::visibility_sweep(10000, 5);
  EXPECT_GE(s.agree, 9990);
  EXPECT_LE(s.worst_disagreement_border_px, 0.5);
}

TEST(VisibilityOracle, SweepCoversBothVerdicts) {
  const auto s = oracle::visibility_sweep(2000, 6);
  EXPECT_GT(s.visible, 400);
  EXPECT_LT(s.visible, 1600);
}
