#pragma once

// Circle fitting in the plane orthogonal to the curvature axis, and the 1-D
// shell radius search: grow the inner radius from the fitted circle until the
// annulus of one finger thickness around it is (nearly) empty.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "ega/cloud.hpp"
#include "ega/common.hpp"
#include "ega/errors.hpp"
#include "ega/taubin.hpp"

namespace ega {

// Detected enveloping-grasp geometry: an empty annulus of the given thickness
// around the surface captured inside inner_radius.
struct CylindricalShell {
  Vec3 centroid = Vec3::Zero();  // on the axis, at the axial midpoint
  Vec3 axis = Vec3::UnitZ();
  double inner_radius = 0.0;
  double thickness = 0.0;
  double extent = 0.0;  // axial span of the supporting points
  int support = 0;      // cloud points inside the inner radius
};

struct ShellSearchConfig {
  double radius_step = 0.001;  // m
  // Points tolerated inside the shell annulus; -1 resolves per neighborhood
  // to max(2, 1% of its size).
  int max_gap_points = -1;

  int resolve_gap(size_t neighborhood_size) const {
    if (max_gap_points >= 0) return max_gap_points;
    return std::max<int>(2, static_cast<int>(neighborhood_size / 100));
  }
};

struct CircleFit {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  Eigen::Vector3d abc = Eigen::Vector3d::Zero();  // algebraic parameters
};

// Algebraic circle fit: minimize sum (x^2 + y^2 + a x + b y + c)^2 via the
// 3x3 normal equations, then back out center (-a/2, -b/2) and radius
// sqrt(a^2/4 + b^2/4 - c). Points are centered first for conditioning; the
// solution is mapped back exactly.
inline CircleFit fit_circle_2d(const std::vector<Vec2>& pts) {
  if (pts.size() < 3) throw InsufficientPoints("circle fit needs 3 points");
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());

  Eigen::Matrix3d s = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (const Vec2& p : pts) {
    const Vec2 q = p - mean;
    const Eigen::Vector3d v(q.x(), q.y(), 1.0);
    const double lam = q.squaredNorm();
    s.noalias() += v * v.transpose();
    rhs.noalias() += lam * v;
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(s);
  const double lmin = eig.eigenvalues()[0], lmax = eig.eigenvalues()[2];
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    throw CollinearPoints("circle fit normal equations are singular");
  }
  const Eigen::Vector3d w = -s.ldlt().solve(rhs);

  CircleFit fit;
  const Vec2 center_local(-w[0] / 2.0, -w[1] / 2.0);
  const double r2 = center_local.squaredNorm() - w[2];
  if (r2 < 0.0) throw ImaginaryRadius();
  fit.center = center_local + mean;
  fit.radius = std::sqrt(r2);
  // algebraic parameters in the original (uncentered) coordinates
  fit.abc[0] = -2.0 * fit.center.x();
  fit.abc[1] = -2.0 * fit.center.y();
  fit.abc[2] = fit.center.squaredNorm() - r2;
  return fit;
}

// Searches for an empty cylindrical shell around the neighborhood. Returns
// nothing when the circle fit fails or no radius up to the capture radius
// clears the annulus. All cloud points whose axial coordinate falls within
// the extent are tested, fetched through the index with an enclosing ball so
// the result matches a full scan.
inline std::optional<CylindricalShell> find_shell(const Neighborhood& nb,
                                                  const Vec3& axis,
                                                  const PointCloud& cloud,
                                                  const KdTree& index,
                                                  const HandParams& hand,
                                                  const ShellSearchConfig& cfg) {
  if (nb.indices.size() < 3) return std::nullopt;
  const auto [w1, w2] = plane_basis(axis);

  std::vector<Vec2> flat;
  flat.reserve(nb.indices.size());
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
  for (int i : nb.indices) {
    const Vec3& p = cloud.points[i];
    flat.emplace_back(w1.dot(p), w2.dot(p));
    const double t = axis.dot(p);
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }

  CircleFit fit;
  try {
    fit = fit_circle_2d(flat);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!std::isfinite(fit.radius) || fit.radius <= 0.0) return std::nullopt;

  const double mid = 0.5 * (tmin + tmax);
  const double half_span = 0.5 * (tmax - tmin);
  const Vec3 centroid = fit.center.x() * w1 + fit.center.y() * w2 + mid * axis;
  const int gap_allow = cfg.resolve_gap(nb.indices.size());

  // One query covers every radius step: a ball around the centroid enclosing
  // the largest possible annulus over the neighborhood's axial span.
  const double rmax = hand.capture_radius + hand.finger_thickness;
  const double ball = std::sqrt(rmax * rmax + half_span * half_span);
  struct RadialAxial {
    double radial;
    double t;  // signed axial offset from the midpoint
  };
  std::vector<RadialAxial> cand;
  for (int i : index.radius_search(centroid, ball)) {
    const Vec3 d = cloud.points[i] - centroid;
    const double t = axis.dot(d);
    if (std::abs(t) > half_span) continue;
    cand.push_back({(d - t * axis).norm(), t});
  }

  for (double r = fit.radius; r <= hand.capture_radius; r += cfg.radius_step) {
    int inside = 0, in_annulus = 0;
    const double outer = r + hand.finger_thickness;
    double slo = 0.0, shi = 0.0;  // axial span of the supporting points
    for (const RadialAxial& c : cand) {
      if (c.radial < r) {
        if (inside == 0) {
          slo = shi = c.t;
        } else {
          slo = std::min(slo, c.t);
          shi = std::max(shi, c.t);
        }
        ++inside;
      } else if (c.radial <= outer) {
        ++in_annulus;
      }
    }
    if (in_annulus <= gap_allow) {
      if (inside == 0) return std::nullopt;  // nothing captured, not a grasp
      CylindricalShell shell;
      shell.centroid = centroid;
      shell.axis = axis;
      shell.inner_radius = r;
      shell.thickness = hand.finger_thickness;
      shell.extent = shi - slo;
      shell.support = inside;
      return shell;
    }
  }
  return std::nullopt;
}

}  // namespace ega
