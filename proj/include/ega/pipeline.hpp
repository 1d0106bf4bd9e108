#pragma once

// End-to-end affordance detection: sample neighborhoods, filter occlusions,
// estimate a curvature axis (quadric fit, point PCA, or normal covariance),
// then search for an empty cylindrical shell. The sampling loop is
// data-parallel over sample ordinals with per-ordinal generator streams, so
// concurrent runs reproduce the serial detection list exactly.

#include <atomic>
#include <cstdint>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

#include "ega/cloud.hpp"
#include "ega/common.hpp"
#include "ega/errors.hpp"
#include "ega/kdtree.hpp"
#include "ega/shell.hpp"
#include "ega/taubin.hpp"

namespace ega {

enum class Variant { Taubin, PCA, Normals };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Taubin: return "taubin";
    case Variant::PCA: return "pca";
    case Variant::Normals: return "normals";
  }
  return "?";
}

struct DetectorConfig {
  int n_samples = 4000;
  HandParams hand{};
  Variant variant = Variant::Taubin;
  // Neighborhood mode; in radius mode the query radius is the capture radius.
  bool use_knn = false;
  int knn_k = 500;
  bool occlusion_filtering = true;
  int occluder_threshold = 20;
  ShellSearchConfig shell{};
  std::uint64_t seed = 0;
  int curvature_samples = 50;
  int min_neighborhood = 30;
  double normals_radius = 0.03;  // Normals variant preprocessing radius
  int threads = 0;               // 0 = hardware concurrency

  NeighborhoodQuery neighborhood_query() const {
    return use_knn ? NeighborhoodQuery::nearest(knn_k)
                   : NeighborhoodQuery::ball(hand.capture_radius);
  }
};

struct Detection {
  CylindricalShell shell;
  int seed_index = -1;
  int sample_ordinal = -1;
  Variant variant = Variant::Taubin;
  std::optional<CurvatureEstimate> curvature;
  int gap_allowance = 0;  // annulus occupancy tolerated by this detection
};

struct RunStats {
  long sampled = 0;
  long too_small = 0;
  long occlusion_rejected = 0;
  long fit_failed = 0;
  long gate_rejected = 0;
  long shell_searches = 0;
  long shells_found = 0;
};

// Principal direction of a point set: eigenvector of the largest eigenvalue
// of the centered covariance. No curvature gate applies in this variant.
inline Vec3 pca_axis(const std::vector<Vec3>& pts) {
  if (pts.size() < 3) throw InsufficientPoints("PCA axis needs 3 points");
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts) {
    const Vec3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  if (!(cov.trace() > 1e-30)) throw DegenerateCovariance();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  return sign_normalized(eig.eigenvectors().col(2));
}

struct NormalField {
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> valid;
};

// Per-point surface normals: smallest-eigenvalue eigenvector of the neighbor
// covariance within `radius`, oriented toward the viewpoint. Points with
// fewer than 3 neighbors get an invalid marker.
inline NormalField estimate_normals(const PointCloud& cloud, const KdTree& index,
                                    double radius, int threads = 0) {
  if (cloud.points.empty()) throw EmptyCloud();
  const int n = cloud.size();
  NormalField field;
  field.normals.assign(n, Vec3::Zero());
  field.valid.assign(n, 0);

  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const auto nbrs = index.radius_search(cloud.points[i], radius);
      if (nbrs.size() < 3) continue;
      Vec3 mean = Vec3::Zero();
      for (int j : nbrs) mean += cloud.points[j];
      mean /= static_cast<double>(nbrs.size());
      Mat3 cov = Mat3::Zero();
      for (int j : nbrs) {
        const Vec3 d = cloud.points[j] - mean;
        cov.noalias() += d * d.transpose();
      }
      const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
      Vec3 nrm = eig.eigenvectors().col(0);
      if (nrm.dot(cloud.viewpoint - cloud.points[i]) < 0.0) nrm = -nrm;
      field.normals[i] = nrm;
      field.valid[i] = 1;
    }
  };

  int nt = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  nt = std::max(1, std::min(nt, n));
  if (nt == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back(work, t * chunk, std::min(n, (t + 1) * chunk));
    }
    for (auto& th : pool) th.join();
  }
  return field;
}

// Axis from the uncentered second-moment matrix of the neighborhood normals:
// the eigenvector of the smallest eigenvalue (for a cylinder patch all
// normals are orthogonal to the central axis).
inline Vec3 normals_axis(const std::vector<int>& indices, const NormalField& field) {
  Mat3 m = Mat3::Zero();
  int used = 0;
  for (int i : indices) {
    if (!field.valid[i]) continue;
    m.noalias() += field.normals[i] * field.normals[i].transpose();
    ++used;
  }
  if (used < 3) throw TooFewValidNormals();
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(m);
  return sign_normalized(eig.eigenvectors().col(0));
}

// Runs the sampling loop. Detections come back ordered by sample ordinal and
// are identical for any thread count. Per-neighborhood failures are skips.
inline std::vector<Detection> detect_affordances(const PointCloud& cloud,
                                                 const KdTree& index,
                                                 const DetectorConfig& cfg,
                                                 RunStats* stats = nullptr) {
  if (cloud.points.empty()) throw EmptyCloud();
  const bool organized = cloud.organized.has_value();
  const bool filter_on = cfg.occlusion_filtering && organized;
  if (cfg.occlusion_filtering && !organized) {
    std::cerr << "ega: cloud is not organized; occlusion filter skipped\n";
  }

  NormalField normals;
  if (cfg.variant == Variant::Normals) {
    normals = estimate_normals(cloud, index, cfg.normals_radius, cfg.threads);
  }

  const NeighborhoodQuery query = cfg.neighborhood_query();
  std::vector<std::optional<Detection>> slots(cfg.n_samples);
  std::vector<RunStats> partial;

  auto work = [&](int begin, int end, RunStats& st) {
    for (int ord = begin; ord < end; ++ord) {
      auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(ord));
      Neighborhood nb = sample_neighborhood(cloud, index, rng, query);
      ++st.sampled;
      if (static_cast<int>(nb.indices.size()) < cfg.min_neighborhood) {
        ++st.too_small;
        continue;
      }
      if (filter_on && occlusion_filter(cloud, nb, cfg.occluder_threshold)) {
        ++st.occlusion_rejected;
        continue;
      }

      Vec3 axis;
      std::optional<CurvatureEstimate> est;
      try {
        switch (cfg.variant) {
          case Variant::Taubin: {
            const Quadric q = fit_taubin(nb.gather(cloud));
            est = estimate_curvature(q, nb.gather(cloud), cfg.curvature_samples, rng);
            if (!passes_curvature_gate(*est, cfg.hand)) {
              ++st.gate_rejected;
              continue;
            }
            axis = est->axis;
            break;
          }
          case Variant::PCA:
            axis = pca_axis(nb.gather(cloud));
            break;
          case Variant::Normals:
            axis = normals_axis(nb.indices, normals);
            break;
        }
      } catch (const Error&) {
        ++st.fit_failed;
        continue;
      }

      ++st.shell_searches;
      auto shell = find_shell(nb, axis, cloud, index, cfg.hand, cfg.shell);
      if (!shell) continue;
      ++st.shells_found;
      Detection det;
      det.shell = *shell;
      det.seed_index = nb.seed_index;
      det.sample_ordinal = ord;
      det.variant = cfg.variant;
      det.curvature = est;
      det.gap_allowance = cfg.shell.resolve_gap(nb.indices.size());
      slots[ord] = std::move(det);
    }
  };

  int nt = cfg.threads > 0 ? cfg.threads
                           : static_cast<int>(std::thread::hardware_concurrency());
  nt = std::max(1, std::min(nt, std::max(1, cfg.n_samples)));
  partial.resize(nt);
  if (nt == 1) {
    work(0, cfg.n_samples, partial[0]);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (cfg.n_samples + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back(work, t * chunk, std::min(cfg.n_samples, (t + 1) * chunk),
                        std::ref(partial[t]));
    }
    for (auto& th : pool) th.join();
  }

  std::vector<Detection> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  if (stats) {
    RunStats total;
    for (const RunStats& p : partial) {
      total.sampled += p.sampled;
      total.too_small += p.too_small;
      total.occlusion_rejected += p.occlusion_rejected;
      total.fit_failed += p.fit_failed;
      total.gate_rejected += p.gate_rejected;
      total.shell_searches += p.shell_searches;
      total.shells_found += p.shells_found;
    }
    *stats = total;
  }
  return out;
}

// Convenience entry that builds the index itself.
inline std::vector<Detection> detect_affordances(const PointCloud& cloud,
                                                 const DetectorConfig& cfg,
                                                 RunStats* stats = nullptr) {
  const KdTree index(cloud.points);
  return detect_affordances(cloud, index, cfg, stats);
}

}  // namespace ega
