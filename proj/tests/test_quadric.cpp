// Geometry of implicit quadrics: evaluation, gradients, normals and the
// shape-operator curvatures, checked against independent numerical oracles.

#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <random>

#include "ega/quadric.hpp"

namespace ega {
namespace {

// Independent polynomial expansion: explicit powers, no shared code with
// Quadric::eval.
double eval_oracle(const QuadricCoeffs& c, const Vec3& x) {
  return c[0] * std::pow(x[0], 2) + c[1] * std::pow(x[1], 2) +
         c[2] * std::pow(x[2], 2) + c[3] * x[0] * x[1] + c[4] * x[1] * x[2] +
         c[5] * x[0] * x[2] + c[6] * x[0] + c[7] * x[1] + c[8] * x[2] + c[9];
}

Vec3 central_difference_gradient(const Quadric& q, const Vec3& x, double h = 1e-5) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 hi = x, lo = x;
    hi[a] += h;
    lo[a] -= h;
    g[a] = (q.eval(hi) - q.eval(lo)) / (2.0 * h);
  }
  return g;
}

QuadricCoeffs random_coeffs(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  QuadricCoeffs c;
  for (int i = 0; i < 10; ++i) c[i] = gauss(rng);
  return c;
}

// A point on the zero set of q found by shooting a random ray and solving the
// resulting quadratic exactly. Empty when the ray misses.
std::optional<Vec3> surface_point_on_ray(const Quadric& q, const Vec3& origin,
                                         const Vec3& dir) {
  const Mat3 a3 = q.quadratic_form();
  const double a = dir.dot(a3 * dir);
  const double b = dir.dot(2.0 * (a3 * origin) + q.linear_form());
  const double c = q.eval(origin);
  if (std::abs(a) < 1e-14) {
    if (std::abs(b) < 1e-14) return std::nullopt;
    return origin + (-c / b) * dir;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t1 = (-b - sq) / (2.0 * a), t2 = (-b + sq) / (2.0 * a);
  const double t = std::abs(t1) < std::abs(t2) ? t1 : t2;
  return origin + t * dir;
}

std::optional<Vec3> random_surface_point(const Quadric& q, std::mt19937_64& rng,
                                         double max_norm = 10.0) {
  std::normal_distribution<double> gauss;
  for (int tries = 0; tries < 64; ++tries) {
    const Vec3 origin(gauss(rng), gauss(rng), gauss(rng));
    const Vec3 dir = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    const auto hit = surface_point_on_ray(q, origin, dir);
    if (!hit || hit->norm() > max_norm) continue;
    if (q.gradient(*hit).norm() <= 100.0 * q.gradient_epsilon(*hit)) continue;
    return hit;
  }
  return std::nullopt;
}

// Height-field oracle for the principal curvatures: sample the surface on a
// small tangent-plane grid by exact root solving along the normal, fit a
// quadratic height field and evaluate the fundamental forms at the origin.
// Signs follow the shape-operator convention of the implementation (positive
// when the surface bends away from the gradient direction's far side), i.e.
// kappa = -height-field form.
std::optional<std::pair<double, double>> paraboloid_curvature_oracle(
    const Quadric& q, const Vec3& x0) {
  const Vec3 g = q.gradient(x0);
  const double gn = g.norm();
  const double hn = q.hessian().norm();
  if (gn <= 0.0 || hn <= 0.0) return std::nullopt;
  const Vec3 n = g / gn;
  const auto [t1, t2] = plane_basis(n);
  const double rho = 1e-5 * gn / hn;

  Eigen::Matrix<double, Eigen::Dynamic, 6> design(49, 6);
  Eigen::VectorXd heights(49);
  int row = 0;
  for (int i = -3; i <= 3; ++i) {
    for (int j = -3; j <= 3; ++j) {
      const double u = rho * i / 3.0, v = rho * j / 3.0;
      const Vec3 p = x0 + u * t1 + v * t2;
      const auto s = surface_point_on_ray(q, p, n);
      if (!s) return std::nullopt;
      const double w = (*s - p).dot(n);
      if (std::abs(w) > 10.0 * rho) return std::nullopt;  // wandered off
      // scaled coordinates for conditioning
      const double us = u / rho, vs = v / rho;
      design.row(row) << us * us, us * vs, vs * vs, us, vs, 1.0;
      heights[row] = w / rho;
      ++row;
    }
  }
  const Eigen::Matrix<double, 6, 1> beta =
      design.colPivHouseholderQr().solve(heights);
  // unscale: h(u,v) coefficients in real units
  const double huu = 2.0 * beta[0] / rho, huv = beta[1] / rho, hvv = 2.0 * beta[2] / rho;
  const double hu = beta[3], hv = beta[4];

  const double e = 1.0 + hu * hu, f = hu * hv, gm = 1.0 + hv * hv;
  const double denom = std::sqrt(1.0 + hu * hu + hv * hv);
  const double l = huu / denom, m = huv / denom, nn = hvv / denom;
  // shape operator = I^-1 II, negated for the implementation's convention
  const double det_i = e * gm - f * f;
  Eigen::Matrix2d s;
  s << (l * gm - m * f), (m * gm - nn * f), (m * e - l * f), (nn * e - m * f);
  s /= -det_i;
  const double tr = s.trace(), det = s.determinant();
  const double disc = std::max(0.0, tr * tr / 4.0 - det);
  const double k1 = tr / 2.0 + std::sqrt(disc), k2 = tr / 2.0 - std::sqrt(disc);
  if (std::abs(k1) >= std::abs(k2)) return std::make_pair(k1, k2);
  return std::make_pair(k2, k1);
}

TEST(QuadricEval, PointOnUnitSphereIsZero) {
  const Quadric q = Quadric::sphere(Vec3::Zero(), 1.0);
  EXPECT_DOUBLE_EQ(q.eval(Vec3(1, 0, 0)), 0.0);
}

TEST(QuadricEval, CenterOfUnitSphere) {
  const Quadric q = Quadric::sphere(Vec3::Zero(), 1.0);
  EXPECT_DOUBLE_EQ(q.eval(Vec3::Zero()), -1.0);
}

TEST(QuadricEval, MatchesTermByTermOracle) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 500; ++trial) {
    const QuadricCoeffs c = random_coeffs(rng);
    const Quadric q(c);
    const Vec3 x(3.0 * gauss(rng), 3.0 * gauss(rng), 3.0 * gauss(rng));
    const double want = eval_oracle(c, x);
    EXPECT_NEAR(q.eval(x), want, 1e-12 * (1.0 + std::abs(want)));
  }
}

TEST(QuadricGradient, SphereGradientIsTwoX) {
  const Quadric q = Quadric::sphere(Vec3::Zero(), 1.0);
  EXPECT_LT((q.gradient(Vec3(1, 0, 0)) - Vec3(2, 0, 0)).norm(), 1e-15);
}

TEST(QuadricGradient, CylinderGradient) {
  const double r = 0.75;
  const Quadric q = Quadric::cylinder(Vec3::Zero(), Vec3::UnitZ(), r);
  EXPECT_LT((q.gradient(Vec3(0, r, 0)) - Vec3(0, 2 * r, 0)).norm(), 1e-15);
}

TEST(QuadricGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Quadric q(random_coeffs(rng));
    const Vec3 x(coord(rng), coord(rng), coord(rng));
    const Vec3 g = q.gradient(x);
    const Vec3 fd = central_difference_gradient(q, x);
    EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST(SurfaceNormal, SpherePole) {
  const Quadric q = Quadric::sphere(Vec3::Zero(), 1.0);
  EXPECT_LT((q.normal(Vec3(0, 0, 1)) - Vec3(0, 0, 1)).norm(), 1e-14);
}

TEST(SurfaceNormal, CylinderNormalIgnoresAxialCoordinate) {
  const Quadric q = Quadric::cylinder(Vec3::Zero(), Vec3::UnitZ(), 1.0);
  EXPECT_LT((q.normal(Vec3(1, 0, 5)) - Vec3(1, 0, 0)).norm(), 1e-14);
}

TEST(SurfaceNormal, ConeApexIsDegenerate) {
  QuadricCoeffs c = QuadricCoeffs::Zero();
  c[0] = c[1] = 1.0;
  c[2] = -1.0;  // x^2 + y^2 - z^2
  const Quadric q(c);
  EXPECT_THROW(q.normal(Vec3::Zero()), DegenerateGradient);
}

TEST(PrincipalCurvatures, SphereIsUmbilic) {
  for (const double r : {0.02, 0.5, 3.0}) {
    const Quadric q = Quadric::sphere(Vec3(0.1, -0.2, 0.3), r);
    const Vec3 x = Vec3(0.1, -0.2, 0.3) + r * Vec3(1, 2, -1).normalized();
    const PrincipalCurvature pc = q.principal_curvatures(x);
    EXPECT_NEAR(std::abs(pc.kappa_max), 1.0 / r, 1e-8 / r);
    EXPECT_NEAR(std::abs(pc.kappa_min), 1.0 / r, 1e-8 / r);
  }
}

TEST(PrincipalCurvatures, CylinderHasRuledDirection) {
  const double r = 0.026;
  const Quadric q = Quadric::cylinder(Vec3::Zero(), Vec3::UnitZ(), r);
  const Vec3 x(r * std::cos(0.3), r * std::sin(0.3), 0.07);
  const PrincipalCurvature pc = q.principal_curvatures(x);
  EXPECT_NEAR(std::abs(pc.kappa_max), 1.0 / r, 1e-8 / r);
  EXPECT_NEAR(pc.kappa_min, 0.0, 1e-8);
  EXPECT_LT(std::min((pc.dir_min - Vec3::UnitZ()).norm(),
                     (pc.dir_min + Vec3::UnitZ()).norm()),
            1e-8);
}

TEST(PrincipalCurvatures, TriadIsOrthonormal) {
  std::mt19937_64 rng(23);
  int checked = 0;
  while (checked < 200) {
    const Quadric q(random_coeffs(rng));
    const auto x = random_surface_point(q, rng);
    if (!x) continue;
    PrincipalCurvature pc;
    try {
      pc = q.principal_curvatures(*x);
    } catch (const DegenerateGradient&) {
      continue;
    }
    EXPECT_NEAR(pc.dir_max.norm(), 1.0, 1e-8);
    EXPECT_NEAR(pc.dir_min.norm(), 1.0, 1e-8);
    EXPECT_NEAR(pc.normal.norm(), 1.0, 1e-8);
    EXPECT_NEAR(pc.dir_max.dot(pc.dir_min), 0.0, 1e-8);
    EXPECT_NEAR(pc.dir_max.dot(pc.normal), 0.0, 1e-8);
    EXPECT_NEAR(pc.dir_min.dot(pc.normal), 0.0, 1e-8);
    EXPECT_GE(std::abs(pc.kappa_max), std::abs(pc.kappa_min));
    ++checked;
  }
}

TEST(PrincipalCurvatures, MatchesParaboloidOracle) {
  std::mt19937_64 rng(42);
  int checked = 0;
  while (checked < 40) {
    const Quadric q(random_coeffs(rng));
    const auto x = random_surface_point(q, rng, 5.0);
    if (!x) continue;
    PrincipalCurvature pc;
    try {
      pc = q.principal_curvatures(*x);
    } catch (const DegenerateGradient&) {
      continue;
    }
    const auto oracle = paraboloid_curvature_oracle(q, *x);
    if (!oracle) continue;
    const double scale = std::abs(pc.kappa_max) + 1e-12;
    EXPECT_NEAR(pc.kappa_max, oracle->first, 1e-4 * scale)
        << "quadric " << q.coeffs().transpose();
    EXPECT_NEAR(pc.kappa_min, oracle->second, 1e-4 * scale);
    ++checked;
  }
}

TEST(PrincipalCurvatures, ScaleCovariance) {
  const double r = 0.02, s = 7.5;
  const Quadric q1 = Quadric::cylinder(Vec3::Zero(), Vec3::UnitZ(), r);
  const Quadric q2 = Quadric::cylinder(Vec3::Zero(), Vec3::UnitZ(), s * r);
  const auto pc1 = q1.principal_curvatures(Vec3(r, 0, 0));
  const auto pc2 = q2.principal_curvatures(Vec3(s * r, 0, 0));
  EXPECT_NEAR(pc2.kappa_max, pc1.kappa_max / s, 1e-10 * std::abs(pc1.kappa_max));

  const Quadric s1 = Quadric::sphere(Vec3::Zero(), r);
  const Quadric s2 = Quadric::sphere(Vec3::Zero(), s * r);
  const auto ps1 = s1.principal_curvatures(Vec3(0, 0, r));
  const auto ps2 = s2.principal_curvatures(Vec3(0, 0, s * r));
  EXPECT_NEAR(ps2.kappa_max, ps1.kappa_max / s, 1e-10 * std::abs(ps1.kappa_max));
}

TEST(Quadric, CanonicalizedKeepsZeroSetAndNormalizes) {
  std::mt19937_64 rng(5);
  const QuadricCoeffs c = random_coeffs(rng);
  const Quadric q(c);
  const Quadric qc = q.canonicalized();
  EXPECT_NEAR(qc.coeffs().norm(), 1.0, 1e-14);
  // first nonzero component positive
  for (int i = 0; i < 10; ++i) {
    if (qc.coeffs()[i] != 0.0) {
      EXPECT_GT(qc.coeffs()[i], 0.0);
      break;
    }
  }
  // same zero set: coefficients proportional up to sign
  const double sign = qc.coeffs().dot(c) > 0.0 ? 1.0 : -1.0;
  EXPECT_LT((qc.coeffs() * c.norm() * sign - c).norm(), 1e-12 * c.norm());
}

TEST(Quadric, RejectsZeroCoefficients) {
  EXPECT_THROW(Quadric(QuadricCoeffs::Zero()), Error);
}

}  // namespace
}  // namespace ega
