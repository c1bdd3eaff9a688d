#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "softbubble/geometry/primitives.hpp"
#include "softbubble/membrane/obstacle.hpp"
#include "softbubble/membrane/solver.hpp"
#include "softbubble/render/pgm.hpp"
#include "softbubble/render/render.hpp"
#include "softbubble/render/stream.hpp"

using namespace softbubble;
using namespace softbubble::render;
using membrane::HeightField;

namespace {

// First crossing of the pixel ray with the bilinear surface, found by
// marching in 0.05 mm steps and bisecting on HeightField::sample.
std::optional<double> march_oracle(const SensorRig& rig, const HeightField& hf, const Vec3& ray) {
  const double c = rig.camera_standoff;
  auto f = [&](double t) { return hf.sample(ray.x() * t, ray.y() * t) - (t - c); };
  double t0 = c;
  for (double t1 = c + 0.05; t1 < c + 200.0; t1 += 0.05) {
    if (f(t1) <= 0.0) {
      double lo = t0, hi = t1;
      for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    t0 = t1;
  }
  return std::nullopt;
}

}  // namespace

TEST(SensorRig, DefaultsValidateAndFovInsideRim) {
  const SensorRig rig;
  EXPECT_NO_THROW(rig.validate());
  EXPECT_LT(rig.rest_footprint_radius(), rig.bubble.rim_radius);
  SensorRig far = rig;
  far.camera_standoff = 400.0;
  EXPECT_THROW(far.validate(), InvalidArgument);
}

TEST(SensorRig, FootprintAreaAt100mm) {
  const PinholeCamera cam;
  const double w = 2.0 * 100.0 * std::tan(31.0 * std::numbers::pi / 180.0);
  const double h = 2.0 * 100.0 * std::tan(22.5 * std::numbers::pi / 180.0);
  EXPECT_NEAR(w, 120.17, 0.01);
  EXPECT_NEAR(h, 82.84, 0.01);
  EXPECT_NEAR(cam.footprint_area(100.0), w * h, 1e-9);
  EXPECT_NEAR(cam.footprint_area(100.0) / 100.0, 99.5, 0.01 * 99.5);
}

TEST(Render, RestOnAxisDepthIsStandoffPlusHeight) {
  SensorRig rig;
  for (double c : {75.0, 100.0}) {
    rig.camera_standoff = c;
    const HeightField rest = membrane::rest_shape(rig.bubble);
    const auto hit = intersect_membrane(rig, rest, 0.0, 0.0);
    ASSERT_TRUE(hit.has_value());
    EXPECT_NEAR(hit->depth, c + rig.bubble.inflation_height, 1e-9);
  }
  // Center pixels of the (even-sized) image straddle the axis.
  rig.camera_standoff = 100.0;
  const DepthImage img = render_rest(rig);
  EXPECT_NEAR(img.at(rig.camera.width / 2, rig.camera.height / 2), 150.0, 0.05);
}

TEST(Render, FlatPlatePlateau) {
  const SensorRig rig;
  const HeightField hf = membrane::solve_membrane(rig.bubble, membrane::flat_obstacle(rig.bubble, 40.0));
  const DepthImage img = render_depth(rig, hf);
  const int cu = rig.camera.width / 2, cv = rig.camera.height / 2;
  for (int dv = -5; dv <= 5; ++dv)
    for (int du = -5; du <= 5; ++du) EXPECT_NEAR(img.at(cu + du, cv + dv), rig.camera_standoff + 40.0, 1e-3);
}

TEST(Render, MatchesMarchingOracleOnPressedMembrane) {
  const SensorRig rig;
  const geometry::TriangleMesh sphere = geometry::uv_sphere(20.0, 24, 48);
  const SceneFrame scene = simulate_scene(rig, sphere, RigidTransform::translation({8.0, -5.0, 58.0}));
  ASSERT_GT(scene.membrane.contact_count(), 0u);
  Rng rng(11);
  for (int k = 0; k < 400; ++k) {
    const int u = static_cast<int>(rng.uniform(0.0, rig.camera.width));
    const int v = static_cast<int>(rng.uniform(0.0, rig.camera.height));
    const Vec3 ray = rig.camera.pixel_ray(u, v);
    const auto expect = march_oracle(rig, scene.membrane, ray);
    ASSERT_TRUE(expect.has_value());
    EXPECT_NEAR(scene.clean.at(u, v), *expect, 1e-3) << "pixel " << u << "," << v;
  }
}

TEST(Render, RoundTripOnRestParaboloid) {
  const SensorRig rig;
  const geometry::PointCloud cloud = geometry::deproject(render_rest(rig), rig.camera);
  ASSERT_EQ(cloud.size(), static_cast<std::size_t>(rig.camera.width * rig.camera.height));
  double se = 0.0;
  for (const Vec3& p : cloud.points) {
    const double zb = p.z() - rig.camera_standoff;
    se += std::pow(zb - rig.bubble.rest_height(std::hypot(p.x(), p.y())), 2);
  }
  // Vertical offset bounds the distance to the surface from above.
  EXPECT_LT(std::sqrt(se / cloud.size()), 1.5 * rig.bubble.grid_spacing);
}

TEST(Render, InFovAreaAndDensity) {
  const SensorRig rig;
  const HeightField rest = membrane::rest_shape(rig.bubble);
  const double area = in_fov_membrane_area(rig, rest);
  EXPECT_NEAR(area / 100.0, 175.4, 0.10 * 175.4);
  const double density = render_rest(rig).valid_count() / area;
  EXPECT_NEAR(density, 2.0, 0.25 * 2.0);
  // The surface seen through the image is larger than its flat footprint at the apex.
  EXPECT_GT(area, rig.camera.footprint_area(rig.camera_standoff + rig.bubble.inflation_height) * 0.5);
}

TEST(Noise, DisabledIsIdentity) {
  const SensorRig rig;
  const DepthImage img = render_rest(rig);
  EXPECT_EQ(apply_noise(img, rig.camera, NoiseModel::none()), img);
}

TEST(Noise, GaussianStdAt100mm) {
  const PinholeCamera cam;
  const DepthImage flat(cam.width, cam.height, 100.0f);
  NoiseModel nm;
  nm.gaussian_sigma_fraction = 0.01;
  nm.seed = 5;
  const DepthImage noisy = apply_noise(flat, cam, nm);
  const int draws = 10000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double d = noisy.data()[i] - 100.0;
    s += d;
    s2 += d * d;
  }
  const double mean = s / draws;
  const double sd = std::sqrt(s2 / draws - mean * mean);
  EXPECT_NEAR(sd, 1.0, 0.1);
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(draws));
}

TEST(Noise, SeedDeterminism) {
  const SensorRig rig;
  const DepthImage img = render_rest(rig);
  NoiseModel nm;
  nm.seed = 99;
  nm.glare.enabled = true;
  nm.dark_region.enabled = true;
  EXPECT_EQ(apply_noise(img, rig.camera, nm), apply_noise(img, rig.camera, nm));
  NoiseModel other = nm;
  other.seed = 100;
  EXPECT_NE(apply_noise(img, rig.camera, nm), apply_noise(img, rig.camera, other));
}

TEST(Noise, DarkRegionIsOneSidedBand) {
  const SensorRig rig;
  const DepthImage clean = render_rest(rig);
  NoiseModel nm = NoiseModel::none();
  nm.dark_region.enabled = true;
  const DepthImage out = apply_noise(clean, rig.camera, nm);
  int biased = 0;
  for (int v = 0; v < clean.height(); ++v) {
    // Per row, the biased pixels must be a run ending at the right edge.
    bool in_band = false;
    for (int u = 0; u < clean.width(); ++u) {
      ASSERT_GE(out.at(u, v), clean.at(u, v));
      const bool b = out.at(u, v) > clean.at(u, v);
      if (b) {
        ++biased;
        EXPECT_NEAR(out.at(u, v), clean.at(u, v) * (1.0 + nm.dark_region.bias_fraction), 1e-3);
      }
      if (in_band) {
        ASSERT_TRUE(b) << "row " << v << " col " << u;
      }
      in_band = in_band || b;
    }
  }
  EXPECT_GT(biased, 0);
  EXPECT_LT(biased, static_cast<int>(clean.size()) / 2);
}

TEST(Noise, GlareDropsNearNormalPixels) {
  const SensorRig rig;
  const DepthImage clean = render_rest(rig);
  NoiseModel nm = NoiseModel::none();
  nm.glare.enabled = true;
  nm.glare.dropout_probability = 1.0;
  const DepthImage out = apply_noise(clean, rig.camera, nm);
  EXPECT_FALSE(out.valid(rig.camera.width / 2, rig.camera.height / 2));
  EXPECT_TRUE(out.valid(0, 0));
  EXPECT_LT(out.valid_count(), clean.valid_count());
}

TEST(Noise, RejectsLargeSigma) {
  NoiseModel nm;
  nm.gaussian_sigma_fraction = 0.021;
  EXPECT_THROW(nm.validate(), InvalidArgument);
}

TEST(Stream, RateAbove45IsRejected) {
  const SensorRig rig;
  StreamScenario sc;
  EXPECT_THROW(frame_stream(rig, sc, 46.0), InvalidArgument);
  EXPECT_NO_THROW(frame_stream(rig, sc, 45.0));
}

TEST(Stream, StaticSceneIsConstant) {
  const SensorRig rig;
  StreamScenario sc;
  sc.frames = 3;
  const auto frames = frame_stream(rig, sc, 30.0);
  ASSERT_EQ(frames.size(), 3u);
  EXPECT_EQ(frames[0].depth, frames[1].depth);
  EXPECT_EQ(frames[1].depth, frames[2].depth);
}

TEST(Stream, DescendingPlateDeepensMonotonically) {
  const SensorRig rig;
  StreamScenario sc;
  sc.mesh = geometry::box(60, 60, 10);
  sc.frames = 10;
  sc.object_pose = [](double t) { return RigidTransform::translation({0.0, 0.0, 52.0 - 30.0 * t}); };
  const auto frames = frame_stream(rig, sc, 10.0);
  double last = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (k > 0) {
      EXPECT_GT(frames[k].timestamp, frames[k - 1].timestamp);
    }
    double m = std::numeric_limits<double>::infinity();
    for (float d : frames[k].depth.data())
      if (d > 0.0f) m = std::min(m, static_cast<double>(d));
    EXPECT_LE(m, last + 1e-9) << "frame " << k;
    last = m;
  }
  const DepthImage& final_frame = frames.back().depth;
  EXPECT_NEAR(final_frame.at(rig.camera.width / 2, rig.camera.height / 2), rig.camera_standoff + 52.0 - 30.0 * 0.9,
              1e-3);
}

TEST(Pgm, RoundTripQuantized) {
  const SensorRig rig;
  DepthImage img = render_rest(rig);
  img.at(3, 4) = 0.0f;
  std::stringstream buf;
  write_pgm(buf, img);
  const DepthImage back = read_pgm(buf);
  EXPECT_EQ(back, quantized(img));
  EXPECT_FALSE(back.valid(3, 4));
  EXPECT_EQ(quantize_depth(150.0f), 1500);
  std::istringstream bad("P2\n1 1\n255\n0");
  EXPECT_THROW(read_pgm(bad), IoError);
}
