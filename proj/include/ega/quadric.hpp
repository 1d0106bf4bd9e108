#pragma once

// Implicit quadric surfaces f(c, x) = 0: evaluation, gradients, normals and
// principal curvatures via the shape operator restricted to the tangent plane.

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "ega/common.hpp"
#include "ega/errors.hpp"

namespace ega {

// Coefficient vector of the quadric
//   f(c,x) = c1 x1^2 + c2 x2^2 + c3 x3^2 + c4 x1 x2 + c5 x2 x3 + c6 x1 x3
//          + c7 x1 + c8 x2 + c9 x3 + c10,
// stored in exactly this term order.
using QuadricCoeffs = Eigen::Matrix<double, 10, 1>;

// Principal curvatures and directions at a surface point. kappa values are
// signed; |kappa_max| >= |kappa_min| and (dir_max, dir_min, normal) is an
// orthonormal triad.
struct PrincipalCurvature {
  double kappa_max = 0.0;
  double kappa_min = 0.0;
  Vec3 dir_max = Vec3::UnitX();
  Vec3 dir_min = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();
};

class Quadric {
 public:
  explicit Quadric(const QuadricCoeffs& c) : c_(c) {
    if (!(c.norm() > 0.0)) throw Error("quadric coefficients are all zero");
  }

  static Quadric sphere(const Vec3& center, double radius) {
    QuadricCoeffs c = QuadricCoeffs::Zero();
    c[0] = c[1] = c[2] = 1.0;
    c.segment<3>(6) = -2.0 * center;
    c[9] = center.squaredNorm() - radius * radius;
    return Quadric(c);
  }

  // Infinite cylinder of given radius about the line through `on_axis` with
  // unit direction `axis`.
  static Quadric cylinder(const Vec3& on_axis, const Vec3& axis, double radius) {
    const Mat3 p = Mat3::Identity() - axis * axis.transpose();
    const Vec3 b = -2.0 * (p * on_axis);
    return from_quadratic_form(p, b, on_axis.dot(p * on_axis) - radius * radius);
  }

  // f(x) = x^T A x + b^T x + d with A symmetric.
  static Quadric from_quadratic_form(const Mat3& a, const Vec3& b, double d) {
    QuadricCoeffs c;
    c[0] = a(0, 0);
    c[1] = a(1, 1);
    c[2] = a(2, 2);
    c[3] = 2.0 * a(0, 1);
    c[4] = 2.0 * a(1, 2);
    c[5] = 2.0 * a(0, 2);
    c[6] = b[0];
    c[7] = b[1];
    c[8] = b[2];
    c[9] = d;
    return Quadric(c);
  }

  const QuadricCoeffs& coeffs() const { return c_; }

  Mat3 quadratic_form() const {
    Mat3 a;
    a << c_[0], c_[3] / 2.0, c_[5] / 2.0,  //
        c_[3] / 2.0, c_[1], c_[4] / 2.0,   //
        c_[5] / 2.0, c_[4] / 2.0, c_[2];
    return a;
  }

  Vec3 linear_form() const { return c_.segment<3>(6); }
  double constant_term() const { return c_[9]; }

  // Same zero set with ||c|| = 1 and the first nonzero component positive.
  Quadric canonicalized() const {
    QuadricCoeffs c = c_ / c_.norm();
    for (int i = 0; i < 10; ++i) {
      if (c[i] != 0.0) {
        if (c[i] < 0.0) c = -c;
        break;
      }
    }
    return Quadric(c);
  }

  double eval(const Vec3& x) const {
    return c_[0] * x[0] * x[0] + c_[1] * x[1] * x[1] + c_[2] * x[2] * x[2] +
           c_[3] * x[0] * x[1] + c_[4] * x[1] * x[2] + c_[5] * x[0] * x[2] +
           c_[6] * x[0] + c_[7] * x[1] + c_[8] * x[2] + c_[9];
  }

  Vec3 gradient(const Vec3& x) const {
    return Vec3(2.0 * c_[0] * x[0] + c_[3] * x[1] + c_[5] * x[2] + c_[6],
                2.0 * c_[1] * x[1] + c_[3] * x[0] + c_[4] * x[2] + c_[7],
                2.0 * c_[2] * x[2] + c_[4] * x[1] + c_[5] * x[0] + c_[8]);
  }

  // Hessian of f; constant over space.
  Mat3 hessian() const {
    Mat3 h;
    h << 2.0 * c_[0], c_[3], c_[5],  //
        c_[3], 2.0 * c_[1], c_[4],   //
        c_[5], c_[4], 2.0 * c_[2];
    return h;
  }

  // Scale-aware floor below which the gradient is treated as vanishing.
  double gradient_epsilon(const Vec3& x) const {
    return 1e-10 * (1.0 + c_.norm() * std::max(1.0, x.squaredNorm()));
  }

  // Unit outward field N(x) = grad f / ||grad f||. Throws DegenerateGradient
  // at singular points of the quadric.
  Vec3 normal(const Vec3& x) const {
    const Vec3 g = gradient(x);
    const double n = g.norm();
    if (n <= gradient_epsilon(x)) throw DegenerateGradient();
    return g / n;
  }

  // Shape operator eigenstructure at x. The operator is assembled directly in
  // an explicit tangent basis, S_ij = t_i^T H t_j / ||grad f||, which avoids
  // the spurious zero eigenvalue of the 3x3 projected form.
  PrincipalCurvature principal_curvatures(const Vec3& x) const {
    const Vec3 g = gradient(x);
    const double gn = g.norm();
    if (gn <= gradient_epsilon(x)) throw DegenerateGradient();
    const Vec3 n = g / gn;
    const auto [t1, t2] = plane_basis(n);
    const Mat3 h = hessian();

    Eigen::Matrix2d s;
    s(0, 0) = t1.dot(h * t1);
    s(1, 1) = t2.dot(h * t2);
    const double s01 = t1.dot(h * t2);
    const double s10 = t2.dot(h * t1);
    s(0, 1) = s(1, 0) = 0.5 * (s01 + s10);
    s /= gn;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(s);
    const Eigen::Vector2d vals = eig.eigenvalues();
    const Eigen::Matrix2d vecs = eig.eigenvectors();

    const int imax = std::abs(vals[1]) >= std::abs(vals[0]) ? 1 : 0;
    PrincipalCurvature out;
    out.kappa_max = vals[imax];
    out.kappa_min = vals[1 - imax];
    out.normal = n;
    out.dir_max =
        sign_normalized((vecs(0, imax) * t1 + vecs(1, imax) * t2).normalized());
    out.dir_min = n.cross(out.dir_max);
    return out;
  }

 private:
  QuadricCoeffs c_;
};

}  // namespace ega
