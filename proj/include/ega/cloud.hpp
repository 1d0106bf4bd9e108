#pragma once

// Point-cloud container, neighborhood sampling and the range-image occlusion
// filter. Clouds are immutable once built; all queries go through a KdTree.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "ega/common.hpp"
#include "ega/errors.hpp"
#include "ega/kdtree.hpp"

namespace ega {

// Pixel grid of an organized cloud. pixel_to_point maps row-major pixels to
// point indices (-1 for invalid returns). Intrinsics are in pixels; the
// projection model is u = fx * x/z + cx, v = fy * y/z + cy in the sensor
// frame.
struct RangeImageLayout {
  int width = 0;
  int height = 0;
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  std::vector<int> pixel_to_point;

  int point_at(int u, int v) const { return pixel_to_point[v * width + u]; }
};

struct PointCloud {
  std::vector<Vec3> points;  // meters, sensor frame
  std::optional<RangeImageLayout> organized;
  Vec3 viewpoint = Vec3::Zero();  // sensor origin

  int size() const { return static_cast<int>(points.size()); }
  double range(int i) const { return (points[i] - viewpoint).norm(); }
};

struct Neighborhood {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  std::vector<int> indices;
  int seed_index = -1;

  std::vector<Vec3> gather(const PointCloud& cloud) const {
    std::vector<Vec3> pts;
    pts.reserve(indices.size());
    for (int i : indices) pts.push_back(cloud.points[i]);
    return pts;
  }
};

// Sphere-of-capture-radius search or k-nearest search around the seed.
struct NeighborhoodQuery {
  enum class Kind { Radius, Knn } kind = Kind::Radius;
  double radius = 0.026;
  int k = 500;

  static NeighborhoodQuery ball(double r) { return {Kind::Radius, r, 0}; }
  static NeighborhoodQuery nearest(int k) { return {Kind::Knn, 0.0, k}; }
};

// Uniformly samples a seed point and collects its neighborhood.
inline Neighborhood sample_neighborhood(const PointCloud& cloud, const KdTree& index,
                                        std::mt19937_64& rng,
                                        const NeighborhoodQuery& query) {
  if (cloud.points.empty()) throw EmptyCloud();
  std::uniform_int_distribution<int> pick(0, cloud.size() - 1);
  Neighborhood nb;
  nb.seed_index = pick(rng);
  nb.center = cloud.points[nb.seed_index];
  if (query.kind == NeighborhoodQuery::Kind::Radius) {
    nb.radius = query.radius;
    nb.indices = index.radius_search(nb.center, query.radius);
  } else {
    nb.indices = index.knn(nb.center, query.k);
    nb.radius = nb.indices.empty()
                    ? 0.0
                    : (cloud.points[nb.indices.back()] - nb.center).norm();
  }
  return nb;
}

// Projects the neighborhood sphere onto the range image and counts pixels
// inside the resulting circle whose return is closer than the closest point
// of the neighborhood. True means "likely occluded, discard". Throws
// NotOrganized when the cloud has no pixel grid; the caller decides whether
// to skip the filter.
inline bool occlusion_filter(const PointCloud& cloud, const Neighborhood& nb,
                             int occluder_threshold) {
  if (!cloud.organized) throw NotOrganized();
  const RangeImageLayout& im = *cloud.organized;

  const Vec3 c = nb.center - cloud.viewpoint;
  if (c.z() <= 1e-9) return false;  // behind the sensor; nothing to project
  const double u0 = im.fx * c.x() / c.z() + im.cx;
  const double v0 = im.fy * c.y() / c.z() + im.cy;
  const double rpix = im.fx * nb.radius / c.z();

  double min_range = std::numeric_limits<double>::infinity();
  for (int i : nb.indices) min_range = std::min(min_range, cloud.range(i));

  const int ulo = std::max(0, static_cast<int>(std::floor(u0 - rpix)));
  const int uhi = std::min(im.width - 1, static_cast<int>(std::ceil(u0 + rpix)));
  const int vlo = std::max(0, static_cast<int>(std::floor(v0 - rpix)));
  const int vhi = std::min(im.height - 1, static_cast<int>(std::ceil(v0 + rpix)));

  int closer = 0;
  for (int v = vlo; v <= vhi; ++v) {
    for (int u = ulo; u <= uhi; ++u) {
      const double du = u - u0, dv = v - v0;
      if (du * du + dv * dv > rpix * rpix) continue;
      const int pi = im.point_at(u, v);
      if (pi < 0) continue;
      if (cloud.range(pi) < min_range) {
        if (++closer > occluder_threshold) return true;
      }
    }
  }
  return false;
}

// Recovers pinhole intrinsics of an organized cloud from its pixel-to-point
// correspondences by least squares on u = fx * x/z + cx (and likewise v).
// Returns false if the correspondences do not constrain the model.
inline bool estimate_intrinsics(const std::vector<Vec3>& points, RangeImageLayout& im) {
  double sxx = 0, sx = 0, sxu = 0, su = 0;
  double syy = 0, sy = 0, syv = 0, sv = 0;
  long n = 0;
  for (int v = 0; v < im.height; ++v) {
    for (int u = 0; u < im.width; ++u) {
      const int pi = im.point_at(u, v);
      if (pi < 0) continue;
      const Vec3& p = points[pi];
      if (p.z() <= 1e-9) continue;
      const double a = p.x() / p.z(), b = p.y() / p.z();
      sxx += a * a;
      sx += a;
      sxu += a * u;
      su += u;
      syy += b * b;
      sy += b;
      syv += b * v;
      sv += v;
      ++n;
    }
  }
  if (n < 8) return false;
  const double dx = n * sxx - sx * sx;
  const double dy = n * syy - sy * sy;
  if (std::abs(dx) < 1e-9 * n * n || std::abs(dy) < 1e-9 * n * n) return false;
  im.fx = (n * sxu - sx * su) / dx;
  im.cx = (su - im.fx * sx) / n;
  im.fy = (n * syv - sy * sv) / dy;
  im.cy = (sv - im.fy * sy) / n;
  return im.fx > 1.0 && im.fy > 1.0;
}

}  // namespace ega
