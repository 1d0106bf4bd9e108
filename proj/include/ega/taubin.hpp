#pragma once

// Gradient-normalized algebraic quadric fitting, solved as the 10x10
// generalized eigenproblem (M - lambda N) c = 0, plus the median-curvature
// candidate test that feeds the shell search.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ega/common.hpp"
#include "ega/errors.hpp"
#include "ega/quadric.hpp"

namespace ega {

using Mat10 = Eigen::Matrix<double, 10, 10>;
using Vec10 = Eigen::Matrix<double, 10, 1>;

// Moment matrices of the fit objective, accumulated in a conditioned frame
// (centered at the point centroid, scaled by the mean centroid distance).
// M = sum l l^T and N = sum lx lx^T + ly ly^T + lz lz^T, where l(x) is the
// monomial vector in the quadric coefficient order and lx, ly, lz are its
// coordinate derivatives.
struct MomentMatrices {
  Mat10 M = Mat10::Zero();
  Mat10 N = Mat10::Zero();
  int count = 0;
  Vec3 centroid = Vec3::Zero();
  double scale = 1.0;
};

inline Vec10 quadric_monomials(const Vec3& x) {
  Vec10 l;
  l << x[0] * x[0], x[1] * x[1], x[2] * x[2], x[0] * x[1], x[1] * x[2],
      x[0] * x[2], x[0], x[1], x[2], 1.0;
  return l;
}

inline MomentMatrices accumulate_moments(const std::vector<Vec3>& points) {
  MomentMatrices mm;
  mm.count = static_cast<int>(points.size());
  if (points.empty()) return mm;
  for (const Vec3& p : points) mm.centroid += p;
  mm.centroid /= static_cast<double>(points.size());
  double mean_dist = 0.0;
  for (const Vec3& p : points) mean_dist += (p - mm.centroid).norm();
  mean_dist /= static_cast<double>(points.size());
  mm.scale = mean_dist > 0.0 ? mean_dist : 1.0;

  Vec10 lx = Vec10::Zero(), ly = Vec10::Zero(), lz = Vec10::Zero();
  lx[6] = ly[7] = lz[8] = 1.0;
  for (const Vec3& p : points) {
    const Vec3 y = (p - mm.centroid) / mm.scale;
    const Vec10 l = quadric_monomials(y);
    lx[0] = 2.0 * y[0];
    lx[3] = y[1];
    lx[5] = y[2];
    ly[1] = 2.0 * y[1];
    ly[3] = y[0];
    ly[4] = y[2];
    lz[2] = 2.0 * y[2];
    lz[4] = y[1];
    lz[5] = y[0];
    mm.M.noalias() += l * l.transpose();
    mm.N.noalias() += lx * lx.transpose() + ly * ly.transpose() + lz * lz.transpose();
  }
  return mm;
}

// Coefficients of the same surface expressed in the conditioned frame
// y = (x - centroid) / scale.
inline Vec10 to_conditioned(const Quadric& q, const Vec3& centroid, double scale) {
  const Mat3 aw = q.quadratic_form();
  const Vec3 bw = q.linear_form();
  const double dw = q.constant_term();
  const Mat3 ac = scale * scale * aw;
  const Vec3 bc = scale * (bw + 2.0 * (aw * centroid));
  const double dc = dw + bw.dot(centroid) + centroid.dot(aw * centroid);
  return Quadric::from_quadratic_form(ac, bc, dc).coeffs();
}

// Inverse of to_conditioned: world-frame surface from conditioned coefficients.
inline Quadric to_world(const Vec10& c, const Vec3& centroid, double scale) {
  const Quadric qc{c};
  const Mat3 ac = qc.quadratic_form();
  const Vec3 bc = qc.linear_form();
  const double dc = qc.constant_term();
  const double s2 = scale * scale;
  const Mat3 aw = ac / s2;
  const Vec3 bw = bc / scale - 2.0 * (ac * centroid) / s2;
  const double dw = centroid.dot(ac * centroid) / s2 - bc.dot(centroid) / scale + dc;
  return Quadric::from_quadratic_form(aw, bw, dw);
}

// Smallest-eigenvalue solution of (M - lambda N) c = 0 on precomputed
// moments. Returns the world-frame quadric in canonical form; the optional
// out-parameter receives the smallest generalized eigenvalue.
//
// N is positive semidefinite and always singular (the constant monomial has
// zero gradient, and degenerate data add further null directions), so the
// pencil is deflated instead of regularized: split c into range and null
// components of N, minimize out the null part through the Schur complement
// of M, and solve the reduced symmetric problem in N-whitened coordinates.
inline Quadric fit_taubin(const MomentMatrices& mm, double* smallest_eigenvalue = nullptr) {
  if (mm.count < 10) throw InsufficientPoints("quadric fit needs at least 10 points");

  const Eigen::SelfAdjointEigenSolver<Mat10> eign(mm.N);
  const Vec10 d = eign.eigenvalues();
  if (!(d[9] > 0.0)) throw DegenerateFit("no gradient energy in the data");
  const double tau = 1e-10 * d[9];
  int k = 0;
  while (k < 10 && d[9 - k] > tau) ++k;
  if (k < 2) throw DegenerateFit("gradient constraint has rank < 2");
  const int n0 = 10 - k;

  const Eigen::MatrixXd vr = eign.eigenvectors().rightCols(k);
  const Eigen::VectorXd dk = d.tail(k);
  Eigen::MatrixXd mt = vr.transpose() * mm.M * vr;  // k x k

  Eigen::MatrixXd null_to_range;  // recovers the null-space component
  if (n0 > 0) {
    const Eigen::MatrixXd v0 = eign.eigenvectors().leftCols(n0);
    const Eigen::MatrixXd m00 = v0.transpose() * mm.M * v0;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e00(m00, Eigen::EigenvaluesOnly);
    if (!(e00.eigenvalues()[0] > 1e-12 * mm.M.trace())) {
      // a zero-gradient polynomial interpolates the data (e.g. coplanar points)
      throw DegenerateFit("zero-gradient polynomial fits the data");
    }
    const Eigen::MatrixXd c0r = v0.transpose() * mm.M * vr;  // n0 x k
    null_to_range = -m00.ldlt().solve(c0r);
    mt.noalias() += c0r.transpose() * null_to_range;
  }

  // whiten the constraint: c_R = D^-1/2 v, A = D^-1/2 Mt D^-1/2
  const Eigen::VectorXd w = dk.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd a = w.asDiagonal() * mt * w.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eiga(
      0.5 * (a + a.transpose()));
  if (eiga.info() != Eigen::Success) throw DegenerateFit("eigensolver failed");
  const Eigen::VectorXd lam = eiga.eigenvalues();
  if (!lam.allFinite()) throw DegenerateFit("non-finite eigenvalues");

  const Eigen::SelfAdjointEigenSolver<Mat10> mscale(mm.M, Eigen::EigenvaluesOnly);
  if (lam[1] - lam[0] < 1e-12 * mscale.eigenvalues()[9]) {
    throw DegenerateFit("smallest eigenvalue is not isolated");
  }

  const Eigen::VectorXd cr = w.asDiagonal() * eiga.eigenvectors().col(0);
  Vec10 c = vr * cr;
  if (n0 > 0) {
    c += eign.eigenvectors().leftCols(n0) * (null_to_range * cr);
  }
  if (!c.allFinite() || !(c.norm() > 0.0)) throw DegenerateFit("invalid eigenvector");
  if (smallest_eigenvalue) *smallest_eigenvalue = lam[0];
  return to_world(c, mm.centroid, mm.scale).canonicalized();
}

inline Quadric fit_taubin(const std::vector<Vec3>& points,
                          double* smallest_eigenvalue = nullptr) {
  if (points.size() < 10) {
    throw InsufficientPoints("quadric fit needs at least 10 points");
  }
  return fit_taubin(accumulate_moments(points), smallest_eigenvalue);
}

// Fit objective value (c^T M c) / (c^T N c) of a world-frame quadric against
// the given moments, evaluated in their conditioned frame. For the fit result
// this equals the smallest generalized eigenvalue (up to the ridge).
inline double rayleigh_residual(const Quadric& q, const MomentMatrices& mm) {
  const Vec10 c = to_conditioned(q, mm.centroid, mm.scale);
  const double den = c.dot(mm.N * c);
  if (!(den > 0.0)) throw ZeroGradientConstraint();
  return c.dot(mm.M * c) / den;
}

// Median maximum-curvature statistic of a fitted quadric over a neighborhood,
// with the local axis the shell search will use.
struct CurvatureEstimate {
  double median_kappa_max = 0.0;  // magnitude, 1/m
  Vec3 axis = Vec3::UnitZ();      // minimum-curvature principal direction
  Vec3 anchor = Vec3::Zero();     // surface point realizing the median
  int sample_count = 0;
};

namespace detail {

// First-order algebraic-to-geometric projection x <- x - f grad f/||grad f||^2.
inline bool project_to_surface(const Quadric& q, Vec3& x, int max_steps = 10,
                               double tol = 1e-10) {
  for (int i = 0; i < max_steps; ++i) {
    const double f = q.eval(x);
    if (std::abs(f) < tol) return true;
    const Vec3 g = q.gradient(x);
    const double g2 = g.squaredNorm();
    if (g2 <= 1e-30) return false;
    x -= (f / g2) * g;
  }
  return std::abs(q.eval(x)) < tol;
}

}  // namespace detail

// Projects a random subset of the neighborhood onto the fitted surface,
// evaluates |kappa_max| at each projected point and takes the median. The
// axis is the minimum-magnitude principal direction at the median point; for
// a cylinder this is the central axis.
inline CurvatureEstimate estimate_curvature(const Quadric& q,
                                            const std::vector<Vec3>& points,
                                            int n_curvature_samples,
                                            std::mt19937_64& rng) {
  if (n_curvature_samples < 3) {
    throw InsufficientPoints("need at least 3 curvature samples");
  }
  std::vector<Vec3> chosen;
  if (static_cast<int>(points.size()) <= n_curvature_samples) {
    chosen = points;
  } else {
    chosen.reserve(n_curvature_samples);
    std::sample(points.begin(), points.end(), std::back_inserter(chosen),
                n_curvature_samples, rng);
  }

  struct Sample {
    double kappa;
    Vec3 point;
    Vec3 dir_min;
  };
  std::vector<Sample> ok;
  ok.reserve(chosen.size());
  int failures = 0;
  for (Vec3 x : chosen) {
    if (!detail::project_to_surface(q, x)) {
      ++failures;
      continue;
    }
    try {
      const PrincipalCurvature pc = q.principal_curvatures(x);
      ok.push_back({std::abs(pc.kappa_max), x, pc.dir_min});
    } catch (const DegenerateGradient&) {
      ++failures;
    }
  }
  if (failures * 2 > static_cast<int>(chosen.size()) || ok.empty()) {
    throw ProjectionFailure("fitted quadric does not pass near the data");
  }

  const auto mid = ok.begin() + (ok.size() - 1) / 2;
  std::nth_element(ok.begin(), mid, ok.end(),
                   [](const Sample& a, const Sample& b) { return a.kappa < b.kappa; });
  CurvatureEstimate est;
  est.median_kappa_max = mid->kappa;
  est.anchor = mid->point;
  est.axis = sign_normalized(mid->dir_min);
  est.sample_count = static_cast<int>(ok.size());
  return est;
}

struct HandParams {
  double capture_radius = 0.026;   // m
  double finger_thickness = 0.008;  // m
};

// Candidate test: the neighborhood can fit inside the capture radius only if
// its median maximum curvature is at least 1/capture_radius.
inline bool passes_curvature_gate(const CurvatureEstimate& est, const HandParams& hand) {
  return est.median_kappa_max >= 1.0 / hand.capture_radius;
}

}  // namespace ega
