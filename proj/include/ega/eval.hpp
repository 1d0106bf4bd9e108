#pragma once

// Precision/recall matching of detections against labeled affordances, run
// aggregation with 95% confidence intervals, and the wall-clock benchmark
// across detector variants.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "ega/pipeline.hpp"
#include "ega/scene.hpp"

namespace ega {

struct MatchTolerance {
  double position = 0.01;   // m, closest axis-to-axis distance
  double angle_deg = 20.0;  // axes compared up to sign
  double radius = 0.01;     // m, |inner_radius - truth radius|
};

// Closest distance between two segments (exact closest-point computation).
inline double segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                               const Vec3& b1) {
  constexpr double eps = 1e-18;
  const Vec3 d1 = a1 - a0, d2 = b1 - b0, r = a0 - b0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= eps && e <= eps) {
    return r.norm();
  }
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > eps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((a0 + s * d1) - (b0 + t * d2)).norm();
}

inline bool detection_matches(const Detection& det, const TruthAffordance& aff,
                              const MatchTolerance& tol) {
  const Vec3 half = (det.shell.extent / 2.0) * det.shell.axis;
  const Vec3 d0 = det.shell.centroid - half, d1 = det.shell.centroid + half;
  if (std::abs(det.shell.inner_radius - aff.radius) >= tol.radius) return false;
  for (const TruthSegment& seg : aff.segments) {
    if (segment_distance(d0, d1, seg.p0, seg.p1) >= tol.position) continue;
    const Vec3 axis = (seg.p1 - seg.p0).normalized();
    if (rad2deg(axis_angle(det.shell.axis, axis)) < tol.angle_deg) return true;
  }
  return false;
}

struct MatchReport {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_vacuous = false;  // no detections at all
  bool recall_vacuous = false;     // no graspable truth in the scene
  int detections = 0;
  int matched = 0;
  std::vector<std::string> affordance_ids;  // graspable truths
  std::vector<int> per_affordance_hits;     // aligned with affordance_ids
  std::vector<int> false_positive_ordinals;
};

// precision = matched detections / all detections, recall = found affordances
// / graspable affordances. Zero detections report precision 1.0 with the
// vacuous flag set rather than dividing by zero.
inline MatchReport match_detections(const std::vector<Detection>& dets,
                                    const std::vector<TruthAffordance>& truth,
                                    const MatchTolerance& tol = {}) {
  MatchReport rep;
  rep.detections = static_cast<int>(dets.size());
  for (const TruthAffordance& aff : truth) {
    if (!aff.graspable) continue;
    rep.affordance_ids.push_back(aff.id);
    rep.per_affordance_hits.push_back(0);
  }

  for (const Detection& det : dets) {
    bool any = false;
    int slot = 0;
    for (const TruthAffordance& aff : truth) {
      if (!aff.graspable) continue;
      if (detection_matches(det, aff, tol)) {
        ++rep.per_affordance_hits[slot];
        any = true;
      }
      ++slot;
    }
    if (any) {
      ++rep.matched;
    } else {
      rep.false_positive_ordinals.push_back(det.sample_ordinal);
    }
  }

  if (rep.detections == 0) {
    rep.precision_vacuous = true;
    rep.precision = 1.0;
  } else {
    rep.precision = static_cast<double>(rep.matched) / rep.detections;
  }
  if (rep.affordance_ids.empty()) {
    rep.recall_vacuous = true;
    rep.recall = 1.0;
  } else {
    int found = 0;
    for (int h : rep.per_affordance_hits) found += h > 0 ? 1 : 0;
    rep.recall = static_cast<double>(found) / rep.affordance_ids.size();
  }
  return rep;
}

// Detections that land on a known hard negative (used by the wall fixture).
inline int count_matches_to(const std::vector<Detection>& dets,
                            const TruthAffordance& aff, const MatchTolerance& tol = {}) {
  int n = 0;
  for (const Detection& det : dets) {
    if (detection_matches(det, aff, tol)) ++n;
  }
  return n;
}

// Mean and 95% confidence half-width over repeated runs (Student t).
struct Summary {
  double mean = 0.0;
  double ci_half = 0.0;
  int runs = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
  // two-sided 97.5% t quantiles for df = 1..30
  static constexpr double kT[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                  2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                  2.131,  2.120, 2.110, 2.101, 2.093, 2.086, 2.080,
                                  2.074,  2.069, 2.064, 2.060, 2.056, 2.052, 2.048,
                                  2.045,  2.042};
  Summary s;
  s.runs = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= xs.size();
  if (xs.size() < 2) return s;
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  var /= (xs.size() - 1);
  const int df = static_cast<int>(xs.size()) - 1;
  const double t = df <= 30 ? kT[df - 1] : 1.96;
  s.ci_half = t * std::sqrt(var / xs.size());
  return s;
}

// Aggregated evaluation of one scene over repeated detector runs.
struct EvalReport {
  std::string scene;
  Variant variant = Variant::Taubin;
  Summary precision;
  Summary recall;
  std::vector<MatchReport> per_run;
  std::vector<double> run_seconds;
};

inline EvalReport evaluate_runs(const PointCloud& cloud, const KdTree& index,
                                const std::vector<TruthAffordance>& truth,
                                DetectorConfig cfg, int runs,
                                const MatchTolerance& tol = {},
                                const std::string& scene_name = "") {
  EvalReport rep;
  rep.scene = scene_name;
  rep.variant = cfg.variant;
  std::vector<double> precisions, recalls;
  const std::uint64_t base_seed = cfg.seed;
  for (int r = 0; r < runs; ++r) {
    cfg.seed = splitmix64(base_seed + 0x9e37u * r);
    const auto t0 = std::chrono::steady_clock::now();
    const auto dets = detect_affordances(cloud, index, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    rep.run_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    rep.per_run.push_back(match_detections(dets, truth, tol));
    precisions.push_back(rep.per_run.back().precision);
    recalls.push_back(rep.per_run.back().recall);
  }
  rep.precision = summarize(precisions);
  rep.recall = summarize(recalls);
  return rep;
}

// ---------------------------------------------------------------------------
// Runtime comparison across variants and sample counts.

struct BenchRow {
  Variant variant = Variant::Taubin;
  int n_samples = 0;
  int run = 0;
  double seconds = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchRow> rows;
  // means at the largest sample count, per requested variant
  std::vector<std::pair<Variant, Summary>> variant_means;
  bool ordering_holds = false;    // PCA < Taubin < Normals where present
  double taubin_r2 = 0.0;         // linearity of Taubin time vs n_samples
};

inline double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-30) return 0.0;
  const double slope = (n * sxy - sx * sy) / den;
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (size_t i = 0; i < n; ++i) {
    const double fit = slope * x[i] + intercept;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  return ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

inline BenchmarkReport run_benchmark(const PointCloud& cloud, const KdTree& index,
                                     DetectorConfig base,
                                     const std::vector<Variant>& variants,
                                     const std::vector<int>& samples_grid,
                                     int repetitions) {
  BenchmarkReport rep;
  const std::uint64_t base_seed = base.seed;
  const int n_top = *std::max_element(samples_grid.begin(), samples_grid.end());

  for (const Variant variant : variants) {
    for (const int n : samples_grid) {
      // only the Taubin variant is swept across the grid; the others are
      // timed at the top sample count for the ordering comparison
      if (variant != Variant::Taubin && n != n_top) continue;
      for (int r = 0; r < repetitions; ++r) {
        DetectorConfig cfg = base;
        cfg.variant = variant;
        cfg.n_samples = n;
        cfg.seed = splitmix64(base_seed + 131 * r);
        const auto t0 = std::chrono::steady_clock::now();
        (void)detect_affordances(cloud, index, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        rep.rows.push_back({variant, n, r, std::chrono::duration<double>(t1 - t0).count()});
      }
    }
  }

  auto mean_of = [&](Variant v, int n) {
    std::vector<double> xs;
    for (const BenchRow& row : rep.rows) {
      if (row.variant == v && row.n_samples == n) xs.push_back(row.seconds);
    }
    return summarize(xs);
  };
  for (const Variant v : variants) {
    rep.variant_means.emplace_back(v, mean_of(v, n_top));
  }

  auto mean_lookup = [&](Variant v) -> const Summary* {
    for (const auto& [variant, s] : rep.variant_means) {
      if (variant == v) return &s;
    }
    return nullptr;
  };
  const Summary* pca = mean_lookup(Variant::PCA);
  const Summary* taubin = mean_lookup(Variant::Taubin);
  const Summary* normals = mean_lookup(Variant::Normals);
  rep.ordering_holds = true;
  if (pca && taubin) rep.ordering_holds &= pca->mean < taubin->mean;
  if (taubin && normals) rep.ordering_holds &= taubin->mean < normals->mean;

  if (taubin) {
    std::vector<double> xs, ys;
    for (const int n : samples_grid) {
      const Summary s = mean_of(Variant::Taubin, n);
      if (s.runs > 0) {
        xs.push_back(n);
        ys.push_back(s.mean);
      }
    }
    rep.taubin_r2 = linear_fit_r2(xs, ys);
  }
  return rep;
}

}  // namespace ega
