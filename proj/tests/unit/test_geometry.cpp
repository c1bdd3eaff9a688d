#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "softbubble/geometry/camera.hpp"
#include "softbubble/geometry/frame_graph.hpp"
#include "softbubble/geometry/mesh_io.hpp"
#include "softbubble/geometry/ply.hpp"
#include "softbubble/geometry/primitives.hpp"
#include "softbubble/geometry/ray_cast.hpp"
#include "softbubble/random.hpp"

using namespace softbubble;
using namespace softbubble::geometry;

namespace {

RigidTransform random_transform(Rng& rng) {
  const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return RigidTransform::axis_angle(axis, rng.uniform(0.0, std::numbers::pi),
                                    Vec3(rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-500, 500)));
}

}  // namespace

TEST(RigidTransform, IdentityComposition) {
  Rng rng(1);
  const RigidTransform t = random_transform(rng);
  const RigidTransform c = compose(RigidTransform::identity(), t);
  EXPECT_LT(rotation_distance(c, t), 1e-12);
  EXPECT_LT((c.translation() - t.translation()).norm(), 1e-12);
}

TEST(RigidTransform, InverseComposesToIdentity) {
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const RigidTransform t = random_transform(rng);
    const RigidTransform e = compose(t, invert(t));
    EXPECT_LT(e.angle(), 1e-9);
    EXPECT_LT(e.translation().norm(), 1e-9);
  }
}

TEST(RigidTransform, QuarterTurnsAboutZ) {
  const RigidTransform rz = RigidTransform::axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);
  const Vec3 p = compose(rz, rz).apply(Vec3(1, 0, 0));
  EXPECT_NEAR(p.x(), -1.0, 1e-12);
  EXPECT_NEAR(p.y(), 0.0, 1e-12);
  EXPECT_NEAR(p.z(), 0.0, 1e-12);
}

TEST(RigidTransform, PropertyRoundTripAndUnitQuaternion) {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const RigidTransform t = random_transform(rng);
    const Vec3 p(rng.uniform(-1000, 1000), rng.uniform(-1000, 1000), rng.uniform(-1000, 1000));
    EXPECT_LT((invert(t).apply(t.apply(p)) - p).norm(), 1e-6);
    EXPECT_NEAR(t.rotation().norm(), 1.0, 1e-9);
    EXPECT_NEAR((t * t).rotation().norm(), 1.0, 1e-9);
  }
}

TEST(RigidTransform, CompositionMatchesSequentialApplication) {
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const RigidTransform a = random_transform(rng), b = random_transform(rng);
    const Vec3 p(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100));
    EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-9);
  }
}

TEST(PinholeCamera, FocalLengthsFromFov) {
  const PinholeCamera cam;
  EXPECT_NEAR(cam.fx(), 186.40, 0.01);
  EXPECT_NEAR(cam.fy(), 206.42, 0.01);
  EXPECT_NEAR(cam.fx(), 112.0 / std::tan(31.0 * std::numbers::pi / 180.0), 1e-9);
}

TEST(PinholeCamera, RejectsInvalidRanges) {
  PinholeCamera cam;
  cam.max_range = 50.0;
  EXPECT_THROW(cam.validate(), InvalidArgument);
}

TEST(Deproject, PrincipalPointAndCorner) {
  const PinholeCamera cam;
  const Vec3 c = cam.deproject(cam.cx(), cam.cy(), 100.0);
  EXPECT_NEAR(c.x(), 0.0, 1e-12);
  EXPECT_NEAR(c.y(), 0.0, 1e-12);
  EXPECT_NEAR(c.z(), 100.0, 1e-12);

  DepthImage img(cam.width, cam.height);
  img.at(0, 0) = 100.0f;
  const PointCloud cloud = deproject(img, cam);
  ASSERT_EQ(cloud.size(), 1u);
  EXPECT_NEAR(cloud.points[0].x(), -111.5 / 186.40 * 100.0, 0.01);
  EXPECT_NEAR(cloud.points[0].x(), -59.82, 0.01);
  EXPECT_EQ(cloud.frame, kCameraFrame);
}

TEST(Deproject, EmptyAndMismatched) {
  const PinholeCamera cam;
  EXPECT_TRUE(deproject(cam.blank(), cam).empty());
  EXPECT_THROW(deproject(DepthImage(10, 10), cam), InvalidArgument);
}

TEST(Deproject, PropertyProjectInvertsDeproject) {
  const PinholeCamera cam;
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.uniform(0, cam.width), y = rng.uniform(0, cam.height), d = rng.uniform(50, 4000);
    const auto pr = cam.project(cam.deproject(x, y, d));
    ASSERT_TRUE(pr);
    EXPECT_NEAR(pr->x, x, 1e-6);
    EXPECT_NEAR(pr->y, y, 1e-6);
    EXPECT_NEAR(pr->depth, d, 1e-6);
  }
}

TEST(RayCast, AxisAlignedPlate) {
  const TriangleMesh plate = extrude(rectangle(200, 200), 50.0, 51.0);
  const auto t = ray_cast(Vec3::Zero(), Vec3::UnitZ(), plate);
  ASSERT_TRUE(t);
  EXPECT_NEAR(*t, 50.0, 1e-9);
}

TEST(RayCast, Miss) {
  const TriangleMesh plate = extrude(rectangle(20, 20), 50.0, 51.0);
  EXPECT_FALSE(ray_cast(Vec3(100, 0, 0), Vec3::UnitZ(), plate));
  EXPECT_FALSE(ray_cast(Vec3::Zero(), -Vec3::UnitZ(), plate));
}

TEST(RayCast, CubeEntryMatchesBruteForce) {
  const TriangleMesh cube = box(40, 40, 40).transformed(RigidTransform::translation({0, 0, 80}));
  const auto t = ray_cast(Vec3::Zero(), Vec3::UnitZ(), cube);
  ASSERT_TRUE(t);
  EXPECT_NEAR(*t, 80.0, 1e-9);
  const auto o = oracle::ray_mesh(Vec3::Zero(), Vec3::UnitZ(), cube);
  ASSERT_TRUE(o);
  EXPECT_NEAR(*t, *o, 1e-9);
}

TEST(RayCast, PropertyBvhAndLinearScanAgreeWithOracle) {
  Rng rng(6);
  const std::vector<TriangleMesh> meshes = {
      uv_sphere(30.0, 16, 32), box(40, 30, 20), loft(regular_polygon(6, 30), 0, regular_polygon(6, 12), 25),
      relief_block(40, 20, 12, [](double x, double y) { return 4.0 + 3.0 * std::sin(x / 4.0) * std::cos(y / 5.0); })};
  for (const TriangleMesh& mesh : meshes) {
    ASSERT_LE(mesh.size(), 1000u);
    const MeshBvh bvh(mesh);
    for (int k = 0; k < 300; ++k) {
      const Vec3 o(rng.uniform(-60, 60), rng.uniform(-60, 60), rng.uniform(-80, -40));
      const Vec3 target(rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-10, 30));
      const Vec3 d = (target - o).normalized();
      const auto expect = oracle::ray_mesh(o, d, mesh);
      const auto lin = ray_cast(o, d, mesh);
      const auto fast = bvh.cast(o, d);
      ASSERT_EQ(expect.has_value(), lin.has_value());
      ASSERT_EQ(expect.has_value(), fast.has_value());
      if (expect) {
        EXPECT_NEAR(*lin, *expect, 1e-7);
        EXPECT_NEAR(*fast, *expect, 1e-7);
      }
    }
  }
}

TEST(FrameGraph, ResolveChains) {
  FrameGraph g;
  EXPECT_LT(g.resolve(kWorldFrame, kWorldFrame).translation().norm(), 1e-12);
  g.add_frame("EE", kWorldFrame, RigidTransform::translation({0, 0, 500}));
  g.add_frame("Camera", "EE", RigidTransform::translation({0, 0, 50}));
  EXPECT_NEAR(g.resolve(kWorldFrame, "Camera").translation().z(), 550.0, 1e-12);
  EXPECT_NEAR(g.resolve("Camera", kWorldFrame).translation().z(), -550.0, 1e-12);
  EXPECT_THROW(g.resolve(kWorldFrame, "nope"), InvalidArgument);
  g.add_root("Other");
  EXPECT_THROW(g.resolve(kWorldFrame, "Other"), InvalidArgument);
  EXPECT_THROW(g.add_frame("EE", kWorldFrame, {}), InvalidArgument);
}

TEST(FrameGraph, PropertyResolveIsEdgeComposition) {
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    FrameGraph g;
    const RigidTransform a = random_transform(rng), b = random_transform(rng), c = random_transform(rng);
    g.add_frame("A", kWorldFrame, a);
    g.add_frame("B", "A", b);
    g.add_frame("C", kWorldFrame, c);
    const RigidTransform expect = c.inverse() * a * b;
    const RigidTransform got = g.resolve("C", "B");
    EXPECT_LT(rotation_distance(expect, got), 1e-9);
    EXPECT_LT((expect.translation() - got.translation()).norm(), 1e-6);
  }
}

TEST(MeshIo, ObjWithQuadAndDegenerateFace) {
  std::istringstream in(
      "# quad plus a degenerate triangle\n"
      "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 2 0 0\n"
      "f 1 2 3 4\n"
      "f 1 2 5\n");
  const TriangleMesh m = parse_obj(in);
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.dropped_degenerate(), 1u);
  EXPECT_NEAR(m.surface_area(), 1.0, 1e-12);
}

TEST(MeshIo, ObjRejectsBadIndex) {
  std::istringstream in("v 0 0 0\nv 1 0 0\nf 1 2 7\n");
  EXPECT_THROW(parse_obj(in), Error);
}

TEST(MeshIo, AsciiStl) {
  std::istringstream in(
      "solid t\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 2 0 0\n   vertex 0 2 0\n"
      "  endloop\n endfacet\nendsolid t\n");
  const TriangleMesh m = parse_stl(in);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_NEAR(m.surface_area(), 2.0, 1e-12);
}

TEST(MeshIo, ObjRoundTrip) {
  const TriangleMesh cube = box(40, 40, 40);
  std::stringstream s;
  write_obj(s, cube);
  const TriangleMesh back = parse_obj(s);
  EXPECT_EQ(back.size(), cube.size());
  EXPECT_NEAR(back.surface_area(), 6 * 1600.0, 1e-6);
}

TEST(Ply, RoundTripWithLabels) {
  PointCloud c{{{1, 2, 3}, {-4.5, 0.25, 7}}, "W"};
  const std::vector<int> labels = {1, 2};
  std::stringstream s;
  write_ply(s, c, &labels);
  EXPECT_NE(s.str().find("element vertex 2"), std::string::npos);
  const PlyData back = read_ply(s);
  ASSERT_EQ(back.cloud.size(), 2u);
  EXPECT_EQ(back.labels, labels);
  EXPECT_EQ(back.cloud.frame, "W");
  EXPECT_NEAR((back.cloud.points[1] - c.points[1]).norm(), 0.0, 1e-5);
}

TEST(PointCloud, VoxelDownsampleAndFinite) {
  PointCloud c{{{0.1, 0.1, 0.1}, {0.2, 0.2, 0.2}, {5, 5, 5}}, "W"};
  EXPECT_TRUE(c.all_finite());
  const PointCloud d = voxel_downsample(c, 1.0);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d.points[0].x(), 0.15, 1e-12);
  c.points.push_back({std::nan(""), 0, 0});
  EXPECT_FALSE(c.all_finite());
}
