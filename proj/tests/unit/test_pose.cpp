#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "softbubble/classify/objects.hpp"
#include "softbubble/experiments/press.hpp"
#include "softbubble/experiments/track.hpp"
#include "softbubble/geometry/primitives.hpp"
#include "softbubble/pose/estimate.hpp"
#include "softbubble/pose/icp.hpp"
#include "softbubble/pose/kdtree.hpp"
#include "softbubble/pose/tracker.hpp"

using namespace softbubble;
using namespace softbubble::pose;
using geometry::deg2rad;
using geometry::PointCloud;
using geometry::rad2deg;

namespace {

const Vec3 kNormal(0.0, 0.0, -1.0);
const Quat kFace(Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX()));

PointCloud every_nth(const PointCloud& c, std::size_t n) {
  PointCloud out{{}, c.frame};
  for (std::size_t i = 0; i < c.size(); i += n) out.points.push_back(c.points[i]);
  return out;
}

double pair_cost(const RigidTransform& t, const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  double e = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) e += (t.apply(src[i]) - dst[i]).squaredNorm();
  return e;
}

struct PressFixture {
  experiments::PressSettings settings;
  touch::ReferenceFrame ref;
  PressFixture() : ref(experiments::noisy_reference(settings, 7)) {}
};

const PressFixture& fixture() {
  static const PressFixture f;
  return f;
}

}  // namespace

TEST(KdTree, MatchesBruteForce) {
  Rng rng(3);
  std::vector<Vec3> pts;
  for (int i = 0; i < 2000; ++i) pts.emplace_back(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 20));
  const KdTree tree(pts);
  for (int q = 0; q < 500; ++q) {
    const Vec3 p(rng.uniform(-70, 70), rng.uniform(-70, 70), rng.uniform(-10, 30));
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& x : pts) best = std::min(best, (x - p).squaredNorm());
    const auto m = tree.nearest(p);
    ASSERT_GE(m.index, 0);
    EXPECT_DOUBLE_EQ(m.squared_distance, best);
  }
  EXPECT_EQ(KdTree().nearest(Vec3::Zero()).index, -1);
}

TEST(CropModel, ZeroFractionIsIdentity) {
  const PointCloud model = geometry::sample_surface(classify::shapes::cube().mesh, 2.0, 1);
  const PointCloud out = crop_model(model, kNormal, 0.0);
  EXPECT_EQ(out.points, model.points);
}

TEST(CropModel, QuarterOfUniformCubeCloud) {
  Rng rng(21);
  PointCloud cloud;
  for (int i = 0; i < 1000; ++i) cloud.points.emplace_back(rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(0, 40));
  double lo = 1e9, hi = -1e9;
  for (const Vec3& p : cloud.points) lo = std::min(lo, -p.z()), hi = std::max(hi, -p.z());
  int kept = 0;
  for (const Vec3& p : cloud.points) kept += (-p.z() >= lo + 0.25 * (hi - lo));
  const PointCloud out = crop_model(cloud, kNormal, 0.25);
  EXPECT_EQ(static_cast<int>(out.size()), kept);
  EXPECT_NEAR(static_cast<double>(out.size()), 750.0, 30.0);
  // The dropped quarter is the far side from the contact face at z = 0.
  for (const Vec3& p : out.points) EXPECT_LE(p.z(), 0.75 * 40.0 + 0.5);
}

TEST(CropModel, RejectsLargeFractionAndEmptyModel) {
  const PointCloud model = geometry::sample_surface(classify::shapes::cube().mesh, 3.0, 1);
  EXPECT_THROW(crop_model(model, kNormal, 0.3), InvalidArgument);
  EXPECT_THROW(crop_model(model, kNormal, -0.1), InvalidArgument);
  EXPECT_THROW(crop_model(PointCloud{}, kNormal, 0.1), InvalidArgument);
}

TEST(Kabsch, MatchesGridSearchOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vec3> src, dst;
    const RigidTransform t = RigidTransform::axis_angle(
        Vec3(rng.normal(), rng.normal(), rng.normal()), rng.uniform(0.0, 3.0), Vec3(rng.normal(), rng.normal(), 0.0));
    for (int i = 0; i < 5; ++i) {
      src.emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
      dst.push_back(t.apply(src.back()) + 0.5 * Vec3(rng.normal(), rng.normal(), rng.normal()));
    }
    const double k = pair_cost(kabsch(src, dst), src, dst);
    EXPECT_NEAR(k, oracle::grid_search_rigid_cost(src, dst), 1e-6) << "trial " << trial;
  }
  EXPECT_THROW(kabsch({Vec3::Zero(), Vec3::UnitX()}, {Vec3::Zero(), Vec3::UnitX()}), InvalidArgument);
}

TEST(Kabsch, ExactOnNoiselessPairs) {
  Rng rng(9);
  std::vector<Vec3> src, dst;
  const RigidTransform t = RigidTransform::axis_angle(Vec3(1, 2, 3), 2.5, Vec3(4, -5, 6));
  for (int i = 0; i < 20; ++i) {
    src.emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    dst.push_back(t.apply(src.back()));
  }
  const RigidTransform k = kabsch(src, dst);
  EXPECT_LT(geometry::rotation_distance(k, t), 1e-9);
  EXPECT_LT(geometry::translation_distance(k, t), 1e-9);
}

TEST(Icp, IdentityOnIdenticalClouds) {
  const PointCloud model = geometry::sample_surface(classify::shapes::frustum().mesh, 1.5, 2);
  const IcpResult r = icp(model, model, RigidTransform{});
  ASSERT_TRUE(r.success);
  EXPECT_LT(r.fitness, 1e-6);
  EXPECT_LT(r.transform.angle(), 1e-9);
  EXPECT_LT(r.transform.translation().norm(), 1e-9);
}

TEST(Icp, RecoversSmallPerturbation) {
  const PointCloud target = crop_model(geometry::sample_surface(classify::shapes::frustum().mesh, 1.5, 2), kNormal, 0.25);
  const PointCloud source = every_nth(target, 3);
  for (const Vec3& axis : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 1, 1)}) {
    const RigidTransform p = RigidTransform::axis_angle(axis, deg2rad(5.0), Vec3(3.0, -4.0, 0.0));
    ASSERT_NEAR(p.translation().norm(), 5.0, 1e-12);
    const IcpResult r = icp(source.transformed(p, source.frame), target, RigidTransform{});
    ASSERT_TRUE(r.success);
    const RigidTransform residual = r.transform * p;
    EXPECT_LT(rad2deg(residual.angle()), 0.5);
    EXPECT_LT(residual.translation().norm(), 0.5);
  }
}

TEST(Icp, DisjointCloudsFail) {
  const PointCloud model = geometry::sample_surface(classify::shapes::cube().mesh, 2.0, 4);
  const PointCloud far = model.transformed(RigidTransform::translation({1000.0, 0.0, 0.0}), model.frame);
  EXPECT_FALSE(icp(model, far, RigidTransform{}).success);
}

TEST(Icp, TruncatedLossNeverIncreases) {
  const PointCloud target = geometry::sample_surface(classify::shapes::l_block().mesh, 1.5, 5);
  const PointCloud source = every_nth(target, 4);
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const RigidTransform p = RigidTransform::axis_angle(Vec3(rng.normal(), rng.normal(), rng.normal()),
                                                        deg2rad(rng.uniform(0, 30)),
                                                        Vec3(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-8, 8)));
    const IcpResult r = icp(source.transformed(p, source.frame), target, RigidTransform{});
    ASSERT_GE(r.loss_history.size(), 2u);
    for (std::size_t k = 1; k < r.loss_history.size(); ++k)
      EXPECT_LE(r.loss_history[k], r.loss_history[k - 1] + 1e-9) << "trial " << trial << " step " << k;
  }
}

TEST(Icp, InvalidParamsThrow) {
  IcpParams p;
  p.min_inlier_fraction = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  const PointCloud two{{Vec3::Zero(), Vec3::UnitX()}, ""};
  EXPECT_THROW(icp(two, two, RigidTransform{}), InvalidArgument);
}

TEST(InitOrientations, EvenlySpacedAboutNormal) {
  const auto qs = init_orientations(kFace, kNormal, 12);
  ASSERT_EQ(qs.size(), 12u);
  for (int k = 0; k < 12; ++k) {
    const double a = RigidTransform(kFace.conjugate() * qs[k], Vec3::Zero()).angle();
    EXPECT_NEAR(rad2deg(a), std::min(30.0 * k, 360.0 - 30.0 * k), 1e-9);
    EXPECT_LT((qs[k] * kNormal - kFace * kNormal).norm(), 1e-12);
  }
}

TEST(SymmetricRotationError, QuotientsSymmetry) {
  const Quat truth(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()));
  const Quat quarter = truth * Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()));
  EXPECT_NEAR(symmetric_rotation_error(quarter, truth, Vec3::UnitZ(), 4), 0.0, 1e-9);
  EXPECT_NEAR(rad2deg(symmetric_rotation_error(quarter, truth, Vec3::UnitZ(), 1)), 90.0, 1e-9);
  EXPECT_NEAR(rad2deg(symmetric_rotation_error(quarter, truth, Vec3::UnitZ(), 2)), 90.0, 1e-9);
  const Quat spun = truth * Quat(Eigen::AngleAxisd(1.234, Vec3::UnitZ()));
  EXPECT_NEAR(symmetric_rotation_error(spun, truth, Vec3::UnitZ(), 0), 0.0, 1e-7);
  const Quat tilted = truth * Quat(Eigen::AngleAxisd(deg2rad(3.0), Vec3::UnitX()));
  EXPECT_NEAR(rad2deg(symmetric_rotation_error(tilted, truth, Vec3::UnitZ(), 0)), 3.0, 1e-6);
}

TEST(EstimatePose, RejectsBadArguments) {
  const PointCloud model = geometry::sample_surface(classify::shapes::cube().mesh, 2.0, 1);
  const PointCloud patch = every_nth(model, 5);
  EXPECT_THROW(estimate_pose(patch, model, kNormal, kFace, 13), InvalidArgument);
  EXPECT_THROW(estimate_pose(patch, model, kNormal, kFace, 0), InvalidArgument);
  EXPECT_THROW(estimate_pose(PointCloud{}, model, kNormal, kFace, 4), InvalidArgument);
}

TEST(EstimatePose, CubePressUpToSymmetry) {
  const auto& fx = fixture();
  const classify::ObjectModel cube = classify::shapes::cube();
  const PointCloud model = geometry::sample_surface(cube.mesh, 1.5, 3);
  const experiments::PressScenario sc{cube, experiments::object_on_table(cube, 2.0, -3.0, deg2rad(37.0)),
                                      Vec3::UnitZ(), 20.0, 3, 5};
  const experiments::PressResult r = experiments::run_press(sc, fx.settings, fx.ref);
  ASSERT_GT(r.final_core_world.size(), 50u);
  const PoseEstimate e = estimate_pose(r.final_core_world, model, kNormal, kFace, 12);
  ASSERT_TRUE(e.success);
  EXPECT_LT(rad2deg(symmetric_rotation_error(e.pose.rotation(), sc.object_pose.rotation(), Vec3::UnitZ(), 4)), 5.0);
  EXPECT_LT((e.pose.translation() - sc.object_pose.translation()).norm(), 5.0);
}

TEST(EstimatePose, EquivariantUnderRigidMotion) {
  // Voxel downsampling uses an axis-aligned grid, so exact equivariance only
  // holds with it disabled.
  const auto& fx = fixture();
  const classify::ObjectModel prism = classify::shapes::triangular_prism();
  const PointCloud model = geometry::sample_surface(prism.mesh, 1.5, 3);
  const experiments::PressScenario sc{prism, experiments::object_on_table(prism, 0.0, 0.0, deg2rad(10.0)),
                                      Vec3::UnitZ(), 20.0, 3, 6};
  const PointCloud patch = experiments::run_press(sc, fx.settings, fx.ref).final_core_world;
  ASSERT_GT(patch.size(), 50u);
  PoseParams params;
  params.source_voxel = 0.0;
  const PoseEstimate base = estimate_pose(patch, model, kNormal, kFace, 6, params);
  ASSERT_TRUE(base.success);
  const RigidTransform g = RigidTransform::axis_angle(Vec3(0.3, -0.5, 1.0), 0.9, Vec3(40.0, -25.0, 13.0));
  const PoseEstimate moved =
      estimate_pose(patch.transformed(g, patch.frame), model, kNormal, g.rotation() * kFace, 6, params);
  ASSERT_TRUE(moved.success);
  const RigidTransform expect = g * base.pose;
  EXPECT_LT(rad2deg(geometry::rotation_distance(moved.pose, expect)), 0.01);
  EXPECT_LT(geometry::translation_distance(moved.pose, expect), 0.01);
  EXPECT_EQ(moved.init_index, base.init_index);
}

TEST(Tracker, RateOutsideRangeThrows) {
  const PointCloud model = geometry::sample_surface(classify::shapes::cube().mesh, 3.0, 1);
  for (double hz : {0.5, 2.5}) {
    TrackerConfig cfg;
    cfg.target_rate_hz = hz;
    EXPECT_THROW(PoseTracker(model, kNormal, kFace, cfg), InvalidArgument);
  }
  TrackerConfig ok;
  ok.target_rate_hz = 2.0;
  EXPECT_NO_THROW(PoseTracker(model, kNormal, kFace, ok));
}

TEST(Tracker, WindowHasTwoFixedOrientationsPlusLast) {
  const PointCloud model = geometry::sample_surface(classify::shapes::cube().mesh, 3.0, 1);
  PoseTracker t(model, kNormal, kFace);
  const auto w = t.window();
  ASSERT_EQ(w.size(), 2u);
  for (const Quat& q : w) EXPECT_NEAR(rad2deg(RigidTransform(kFace.conjugate() * q, Vec3::Zero()).angle()), 20.0, 1e-9);
}

TEST(Tracker, StaticInputIsStableAndEmptyFrameKeepsState) {
  const auto& fx = fixture();
  const classify::ObjectModel prism = classify::shapes::triangular_prism();
  const PointCloud model = geometry::sample_surface(prism.mesh, 1.5, 3);
  const RigidTransform truth = experiments::object_on_table(prism, 0.0, 0.0, deg2rad(5.0));
  const PointCloud patch = experiments::run_press({prism, truth, Vec3::UnitZ(), 20.0, 3, 8}, fx.settings, fx.ref)
                               .final_core_world;
  PoseTracker tracker(model, kNormal, experiments::object_on_table(prism, 0, 0, 0).rotation());
  std::vector<RigidTransform> poses;
  for (int k = 0; k < 10; ++k) {
    const PoseEstimate e = tracker.step(patch);
    ASSERT_TRUE(e.success) << "frame " << k;
    poses.push_back(e.pose);
  }
  Vec3 mean = Vec3::Zero();
  for (const auto& p : poses) mean += p.translation();
  mean /= poses.size();
  double t_var = 0.0, r_var = 0.0;
  for (const auto& p : poses) {
    t_var += (p.translation() - mean).squaredNorm() / poses.size();
    r_var += std::pow(rad2deg(geometry::rotation_distance(p, poses.front())), 2) / poses.size();
  }
  EXPECT_LT(t_var, 1.0);
  EXPECT_LT(r_var, 1.0);

  const auto before = tracker.last_success();
  ASSERT_TRUE(before.has_value());
  EXPECT_FALSE(tracker.step(PointCloud{}).success);
  EXPECT_FALSE(tracker.step(PointCloud{{Vec3::Zero(), Vec3::UnitX()}, ""}).success);
  ASSERT_TRUE(tracker.last_success().has_value());
  EXPECT_EQ(tracker.last_success()->pose.rotation().coeffs(), before->pose.rotation().coeffs());
  EXPECT_EQ(tracker.last_success()->pose.translation(), before->pose.translation());
}

TEST(Tracker, FollowsRotatingPrism) {
  const auto& fx = fixture();
  experiments::TrackingScenario sc;
  sc.object = classify::shapes::triangular_prism();
  sc.frames = 6;
  sc.seed = 2;
  const auto frames = experiments::run_tracking(sc, fx.settings, fx.ref);
  ASSERT_EQ(frames.size(), 6u);
  for (const auto& f : frames) {
    ASSERT_TRUE(f.estimate.success) << "frame " << f.index;
    EXPECT_LT(f.rotation_error_deg, 3.0) << "frame " << f.index;
    EXPECT_NEAR(f.true_yaw_deg, sc.yaw0_deg + 5.0 * f.index, 1e-12);
  }
}

TEST(Tracker, DropoutFrameFailsAndRecovers) {
  const auto& fx = fixture();
  experiments::TrackingScenario sc;
  sc.object = classify::shapes::triangular_prism();
  sc.frames = 4;
  sc.dropout_frames = {1};
  sc.seed = 3;
  const auto frames = experiments::run_tracking(sc, fx.settings, fx.ref);
  EXPECT_TRUE(frames[1].dropped);
  EXPECT_FALSE(frames[1].estimate.success);
  EXPECT_TRUE(frames[2].estimate.success);
  EXPECT_LT(frames[2].rotation_error_deg, 5.0);
}

TEST(PoseLog, HeaderAndRowFormat) {
  PoseEstimate e{true, RigidTransform::translation({1.5, -2.0, 3.25}), 0.5, 0.9, 3, 7};
  std::ostringstream out;
  write_pose_log(out, {{0, 0.0, e}, {1, 1.0, PoseEstimate{}}});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "frame,timestamp,qw,qx,qy,qz,tx,ty,tz,fitness,inlier_fraction,init_index,success");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0.0000,1.000000000,0.000000000,0.000000000,0.000000000,1.500000,-2.000000,3.250000,0.500000,"
                  "0.900000,3,1");
  std::getline(in, line);
  EXPECT_EQ(line.back(), '0');
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 12);
  EXPECT_THROW(write_pose_log("/nonexistent/dir/log.csv", {}), IoError);
}
