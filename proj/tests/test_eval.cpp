// Scene rendering, programmatic ground truth, detection matching and the
// report statistics.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ega/eval.hpp"
#include "ega/scene.hpp"
#include "support/audit.hpp"

namespace ega {
namespace {

SceneSpec sphere_on_axis_scene(double radius, double depth) {
  SceneSpec spec;
  spec.camera.width = 640;
  spec.camera.height = 480;
  spec.camera.fx = spec.camera.fy = 520.0;
  spec.primitives.push_back({SpherePrim{Vec3(0, 0, depth), radius}, "ball", -1});
  return spec;
}

TEST(Render, SphereSilhouetteMatchesProjectedDiskArea) {
  const double r = 0.05, d = 0.6;
  const SceneSpec spec = sphere_on_axis_scene(r, d);
  const PointCloud cloud = render_range_image(spec, 1);
  const double rpix = spec.camera.fx * r / std::sqrt(d * d - r * r);
  const double expect = kPi * rpix * rpix;
  EXPECT_NEAR(cloud.size(), expect, 0.05 * expect);
}

TEST(Render, NoiselessPlaneHasExactDepth) {
  SceneSpec spec;
  spec.camera.width = 160;
  spec.camera.height = 120;
  spec.camera.fx = spec.camera.fy = 140.0;
  spec.primitives.push_back(
      {PlanePrim{Vec3(0, 0, 1.25), Vec3(0, 0, -1), 2.0, 2.0}, "wall", -1});
  const PointCloud cloud = render_range_image(spec, 3);
  ASSERT_EQ(cloud.size(), 160 * 120);
  for (const Vec3& p : cloud.points) {
    EXPECT_NEAR(p.z(), 1.25, 1e-12);
  }
}

TEST(Render, SlabShadowsThePlaneBehindIt) {
  SceneSpec spec;
  spec.camera.width = 320;
  spec.camera.height = 240;
  spec.camera.fx = spec.camera.fy = 280.0;
  spec.primitives.push_back(
      {PlanePrim{Vec3(0, 0, 1.0), Vec3(0, 0, -1), 1.0, 1.0}, "wall", -1});
  spec.primitives.push_back(
      {BoxPrim{Vec3(-0.1, 0, 0.8), Vec3(0.08, 0.3, 0.01), Vec3::UnitZ(), 0.0}, "slab", -1});
  const PointCloud cloud = render_range_image(spec, 5);
  const RangeImageLayout& im = *cloud.organized;

  // interior of the slab footprint, shrunk by a couple of pixels
  const double z = 0.8 - 0.01;
  const int u0 = static_cast<int>(im.cx + im.fx * (-0.18) / z) + 3;
  const int u1 = static_cast<int>(im.cx + im.fx * (-0.02) / z) - 3;
  const int v0 = static_cast<int>(im.cy + im.fy * (-0.3) / z) + 3;
  const int v1 = static_cast<int>(im.cy + im.fy * (0.3) / z) - 3;
  ASSERT_LT(u0, u1);
  int wall_points_in_shadow = 0;
  for (int v = std::max(0, v0); v <= std::min(im.height - 1, v1); ++v) {
    for (int u = std::max(0, u0); u <= std::min(im.width - 1, u1); ++u) {
      const int pi = im.point_at(u, v);
      if (pi >= 0 && cloud.points[pi].z() > 0.9) ++wall_points_in_shadow;
    }
  }
  EXPECT_EQ(wall_points_in_shadow, 0);
}

TEST(Render, SeededRendersAreBitIdentical) {
  SceneSpec spec = sphere_on_axis_scene(0.04, 0.7);
  spec.camera.width = 160;
  spec.camera.height = 120;
  spec.camera.fx = spec.camera.fy = 140.0;
  spec.noise_sigma = 1e-3;
  const PointCloud a = render_range_image(spec, 42);
  const PointCloud b = render_range_image(spec, 42);
  ASSERT_EQ(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.points[i], b.points[i]);
  }
  const PointCloud c = render_range_image(spec, 43);
  bool any_differ = false;
  for (int i = 0; i < std::min(a.size(), c.size()); ++i) {
    any_differ |= a.points[i] != c.points[i];
  }
  EXPECT_TRUE(any_differ);
}

TEST(Render, EmptyViewThrows) {
  SceneSpec spec = sphere_on_axis_scene(0.05, 0.6);
  spec.camera.look_at = Vec3(0, 0, -1);  // face away from the ball
  EXPECT_THROW(render_range_image(spec, 1), NoVisibleGeometry);
}

TEST(Render, CameraPoseTransformsIntoSensorFrame) {
  SceneSpec spec;
  spec.camera.width = 64;
  spec.camera.height = 64;
  spec.camera.fx = spec.camera.fy = 64.0;
  spec.camera.position = Vec3(0.5, 0.2, -0.3);
  spec.camera.look_at = Vec3(0.5, 0.2, 1.0);  // looking along +z from offset
  spec.primitives.push_back({SpherePrim{Vec3(0.5, 0.2, 0.7), 0.15}, "ball", -1});
  const PointCloud cloud = render_range_image(spec, 9);
  // the ball center sits on the optical axis at distance 1.0
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : cloud.points) mean += p;
  mean /= cloud.size();
  EXPECT_LT(std::abs(mean.x()), 0.01);
  EXPECT_LT(std::abs(mean.y()), 0.01);
  EXPECT_NEAR(mean.z(), 1.0 - 0.15, 0.05);  // front cap region
}

SceneSpec rod_scene() {
  SceneSpec spec;
  spec.camera.fx = spec.camera.fy = 525.0;
  spec.camera.position = Vec3(0, -0.5, -0.4);
  spec.camera.look_at = Vec3(0, 0, 1.0);
  spec.camera.up = Vec3(0, -1, 0);
  // table normal faces the camera side (-y is up in this scene)
  spec.primitives.push_back(
      {PlanePrim{Vec3(0, 0.0, 1.0), Vec3(0, -1, 0), 0.6, 0.4}, "table", -1});
  // rod standing on the table, pointing up toward -y
  spec.primitives.push_back(
      {CylinderPrim{Vec3(0.1, -0.08, 0.95), Vec3(0, 1, 0), 0.015, 0.16}, "rod", -1});
  // oversized drum lying on the table
  spec.primitives.push_back(
      {CylinderPrim{Vec3(-0.2, -0.05, 1.05), Vec3(1, 0, 0), 0.05, 0.2}, "drum", -1});
  // cylinder flush against a side wall
  spec.primitives.push_back(
      {PlanePrim{Vec3(0.45, -0.2, 1.0), Vec3(-1, 0, 0), 0.3, 0.4}, "wall", -1});
  spec.primitives.push_back(
      {CylinderPrim{Vec3(0.45 - 0.0225, -0.1, 1.0), Vec3(0, 0, 1), 0.02, 0.14}, "flush", -1});
  return spec;
}

TEST(LabelScene, RuleMirrorsClearanceAndSize) {
  const SceneSpec spec = rod_scene();
  const auto truth = label_scene(spec);

  const TruthAffordance* rod = nullptr;
  const TruthAffordance* flush = nullptr;
  bool saw_drum = false;
  for (const auto& aff : truth) {
    if (aff.id == "rod") rod = &aff;
    if (aff.id == "flush") flush = &aff;
    if (aff.id == "drum") saw_drum = true;
  }
  ASSERT_NE(rod, nullptr);
  EXPECT_TRUE(rod->graspable);
  ASSERT_FALSE(rod->segments.empty());
  // the clear run is trimmed away from the table contact
  for (const auto& seg : rod->segments) {
    EXPECT_LT(std::max(seg.p0.y(), seg.p1.y()), -0.005);
  }

  ASSERT_NE(flush, nullptr);
  EXPECT_FALSE(flush->graspable);  // wall blocks the shell
  EXPECT_FALSE(saw_drum);          // radius above capture is not tracked
}

TEST(LabelScene, TruthSurvivesRenderedCloudAudit) {
  const SceneSpec spec = rod_scene();
  const auto truth_world = label_scene(spec);
  const auto truth = truth_in_camera_frame(truth_world, spec.camera);
  const PointCloud cloud = render_range_image(spec, 11);

  int graspable = 0;
  for (const auto& aff : truth) {
    if (!aff.graspable) continue;
    ++graspable;
    for (const auto& seg : aff.segments) {
      // the annulus starts one radius-step outside the nominal surface, as
      // the detector's accepted inner radius does
      EXPECT_LE(testing::annulus_occupancy_segment(
                    cloud.points, seg.p0, seg.p1, aff.radius + 0.001,
                    aff.radius + spec.labeling.clearance),
                5)
          << aff.id;
      EXPECT_LE(aff.radius, spec.labeling.capture_radius);
    }
  }
  EXPECT_GE(graspable, 1);
}

Detection fake_detection(const Vec3& centroid, const Vec3& axis, double r,
                         double extent, int ordinal) {
  Detection d;
  d.shell.centroid = centroid;
  d.shell.axis = axis.normalized();
  d.shell.inner_radius = r;
  d.shell.thickness = 0.008;
  d.shell.extent = extent;
  d.shell.support = 100;
  d.sample_ordinal = ordinal;
  return d;
}

TruthAffordance straight_truth(const std::string& id, const Vec3& p0, const Vec3& p1,
                               double r, bool graspable = true) {
  TruthAffordance aff;
  aff.id = id;
  aff.radius = r;
  aff.graspable = graspable;
  aff.segments.push_back({p0, p1});
  return aff;
}

TEST(MatchDetections, PerfectDetectionsScoreOne) {
  std::vector<TruthAffordance> truth = {
      straight_truth("a", Vec3(0, 0, 1), Vec3(0, 0.1, 1), 0.015),
      straight_truth("b", Vec3(0.2, 0, 1), Vec3(0.2, 0.1, 1), 0.02)};
  std::vector<Detection> dets = {
      fake_detection(Vec3(0, 0.05, 1), Vec3::UnitY(), 0.015, 0.05, 0),
      fake_detection(Vec3(0.2, 0.05, 1), Vec3::UnitY(), 0.02, 0.05, 1)};
  const MatchReport rep = match_detections(dets, truth);
  EXPECT_DOUBLE_EQ(rep.precision, 1.0);
  EXPECT_DOUBLE_EQ(rep.recall, 1.0);
  EXPECT_FALSE(rep.precision_vacuous);
}

TEST(MatchDetections, VacuousPrecisionConvention) {
  std::vector<TruthAffordance> truth = {
      straight_truth("a", Vec3(0, 0, 1), Vec3(0, 0.1, 1), 0.015)};
  const MatchReport rep = match_detections({}, truth);
  EXPECT_DOUBLE_EQ(rep.precision, 1.0);
  EXPECT_TRUE(rep.precision_vacuous);
  EXPECT_DOUBLE_EQ(rep.recall, 0.0);
}

TEST(MatchDetections, CountingMatchesTheHandComputation) {
  std::vector<TruthAffordance> truth = {
      straight_truth("a", Vec3(0, 0, 1), Vec3(0, 0.1, 1), 0.015),
      straight_truth("b", Vec3(0.2, 0, 1), Vec3(0.2, 0.1, 1), 0.02),
      straight_truth("c", Vec3(0.4, 0, 1), Vec3(0.4, 0.1, 1), 0.01)};
  std::vector<Detection> dets = {
      fake_detection(Vec3(0, 0.05, 1), Vec3::UnitY(), 0.016, 0.05, 0),
      fake_detection(Vec3(0.2, 0.03, 1), Vec3::UnitY(), 0.021, 0.05, 1),
      fake_detection(Vec3(0.4, 0.06, 1), Vec3::UnitY(), 0.011, 0.05, 2),
      fake_detection(Vec3(0.8, 0.0, 1), Vec3::UnitX(), 0.02, 0.05, 3)};  // spurious
  const MatchReport rep = match_detections(dets, truth);
  EXPECT_DOUBLE_EQ(rep.precision, 0.75);
  EXPECT_DOUBLE_EQ(rep.recall, 1.0);
  ASSERT_EQ(rep.false_positive_ordinals.size(), 1u);
  EXPECT_EQ(rep.false_positive_ordinals[0], 3);
}

TEST(MatchDetections, ToleranceBoundsAreEnforced) {
  std::vector<TruthAffordance> truth = {
      straight_truth("a", Vec3(0, 0, 1), Vec3(0, 0.1, 1), 0.015)};
  // too far, wrong angle, wrong radius
  std::vector<Detection> far = {
      fake_detection(Vec3(0.05, 0.05, 1), Vec3::UnitY(), 0.015, 0.05, 0)};
  std::vector<Detection> tilted = {
      fake_detection(Vec3(0, 0.05, 1), Vec3(0, 1, 0.6).normalized(), 0.015, 0.05, 0)};
  std::vector<Detection> fat = {
      fake_detection(Vec3(0, 0.05, 1), Vec3::UnitY(), 0.03, 0.05, 0)};
  EXPECT_EQ(match_detections(far, truth).matched, 0);
  EXPECT_EQ(match_detections(tilted, truth).matched, 0);
  EXPECT_EQ(match_detections(fat, truth).matched, 0);
}

TEST(MatchDetections, OrderInvariant) {
  std::vector<TruthAffordance> truth = {
      straight_truth("a", Vec3(0, 0, 1), Vec3(0, 0.1, 1), 0.015),
      straight_truth("b", Vec3(0.2, 0, 1), Vec3(0.2, 0.1, 1), 0.02)};
  std::vector<Detection> dets = {
      fake_detection(Vec3(0, 0.05, 1), Vec3::UnitY(), 0.015, 0.05, 0),
      fake_detection(Vec3(0.7, 0.0, 1), Vec3::UnitX(), 0.02, 0.05, 1),
      fake_detection(Vec3(0.2, 0.05, 1), Vec3::UnitY(), 0.02, 0.05, 2)};
  const MatchReport a = match_detections(dets, truth);
  std::reverse(dets.begin(), dets.end());
  const MatchReport b = match_detections(dets, truth);
  EXPECT_DOUBLE_EQ(a.precision, b.precision);
  EXPECT_DOUBLE_EQ(a.recall, b.recall);
}

TEST(SegmentDistance, AgainstSampledOracle) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 a0(u(rng), u(rng), u(rng)), a1(u(rng), u(rng), u(rng));
    const Vec3 b0(u(rng), u(rng), u(rng)), b1(u(rng), u(rng), u(rng));
    double best = 1e30;
    for (int i = 0; i <= 200; ++i) {
      for (int j = 0; j <= 200; ++j) {
        const Vec3 p = a0 + (i / 200.0) * (a1 - a0);
        const Vec3 q = b0 + (j / 200.0) * (b1 - b0);
        best = std::min(best, (p - q).norm());
      }
    }
    EXPECT_NEAR(segment_distance(a0, a1, b0, b1), best, 2e-2 * best + 1e-4);
  }
}

TEST(Summarize, MeanAndConfidenceInterval) {
  std::vector<double> xs = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
  const Summary s = summarize(xs);
  EXPECT_DOUBLE_EQ(s.mean, 5.5);
  // sd = 3.0276, t(9) = 2.262 -> half width 2.262 * 3.0276 / sqrt(10)
  EXPECT_NEAR(s.ci_half, 2.262 * 3.02765 / std::sqrt(10.0), 1e-3);
}

TEST(LinearFit, RSquared) {
  std::vector<double> x = {1, 2, 3, 4};
  std::vector<double> y = {2.1, 4.0, 6.1, 7.9};
  EXPECT_GT(linear_fit_r2(x, y), 0.99);
  std::vector<double> noise = {5, -3, 4, -2};
  EXPECT_LT(linear_fit_r2(x, noise), 0.5);
}

TEST(SceneParse, RoundTripAndErrors) {
  const std::string text = R"(# sample scene
camera
  position 0 0 0
  look_at 0 0 1
  up 0 -1 0
  resolution 320 240
  focal 260
noise 0.001
plane table
  center 0 0.1 1
  normal 0 -1 0
  extent 0.5 0.4
cylinder rod
  center 0 0 0.9
  axis 0 1 0
  radius 0.012
  length 0.12
  graspable auto
handle grip
  center 0.1 -0.05 0.95
  normal 0 0 1
  ring_radius 0.045
  tube_radius 0.009
  arc 20 160
)";
  std::istringstream in(text);
  const SceneSpec spec = parse_scene(in, "sample.scene");
  EXPECT_EQ(spec.camera.width, 320);
  EXPECT_NEAR(spec.noise_sigma, 1e-3, 1e-12);
  ASSERT_EQ(spec.primitives.size(), 3u);
  EXPECT_EQ(spec.primitives[1].name, "rod");
  const auto& rod = std::get<CylinderPrim>(spec.primitives[1].shape);
  EXPECT_NEAR(rod.radius, 0.012, 1e-12);

  std::istringstream bad("cylinder c\n  radius\n");
  try {
    parse_scene(bad, "bad.scene");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.scene:2"), std::string::npos);
  }

  std::istringstream stray("  center 0 0 0\n");
  EXPECT_THROW(parse_scene(stray, "stray.scene"), ParseError);
}

}  // namespace
}  // namespace ega
