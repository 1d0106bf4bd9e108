#pragma once

// Synthetic labeled scenes: primitive shapes with analytic ray intersection
// and signed distance, a single-viewpoint range-image renderer with Gaussian
// depth noise, and programmatic ground-truth labeling of graspable
// geometries. Stands in for real sensor captures.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "ega/cloud.hpp"
#include "ega/common.hpp"
#include "ega/errors.hpp"

namespace ega {

struct Camera {
  int width = 640, height = 480;
  double fx = 525.0, fy = 525.0;
  Vec3 position = Vec3::Zero();
  Vec3 look_at = Vec3::UnitZ();
  Vec3 up = Vec3::UnitY();
  double max_range = 10.0;

  double cx() const { return (width - 1) / 2.0; }
  double cy() const { return (height - 1) / 2.0; }
  // rows of the world-to-camera rotation
  Mat3 rotation() const {
    const Vec3 f = (look_at - position).normalized();
    const Vec3 x = up.cross(f).normalized();
    const Vec3 y = f.cross(x);
    Mat3 r;
    r.row(0) = x;
    r.row(1) = y;
    r.row(2) = f;
    return r;
  }
};

struct CylinderPrim {
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double radius = 0.02;
  double length = 0.1;
};

struct BoxPrim {
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3(0.05, 0.05, 0.05);
  Vec3 rot_axis = Vec3::UnitZ();
  double rot_deg = 0.0;

  Mat3 rotation() const {  // local -> world
    return Eigen::AngleAxisd(deg2rad(rot_deg), rot_axis.normalized()).toRotationMatrix();
  }
};

struct PlanePrim {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double half_u = 0.5, half_v = 0.5;
};

struct SpherePrim {
  Vec3 center = Vec3::Zero();
  double radius = 0.05;
};

// Torus arc: tube of tube_radius around the circle of ring_radius in the
// plane orthogonal to `normal`, spanning [arc_start_deg, arc_end_deg]
// measured from the plane basis w1. Rendered and labeled as a chain of
// capsule chords.
struct HandlePrim {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double ring_radius = 0.05;
  double tube_radius = 0.01;
  double arc_start_deg = 0.0;
  double arc_end_deg = 180.0;

  Vec3 arc_point(double deg) const {
    const auto [w1, w2] = plane_basis(normal.normalized());
    return center + ring_radius * (std::cos(deg2rad(deg)) * w1 + std::sin(deg2rad(deg)) * w2);
  }
  // chord step that keeps the tessellation error well under the tube radius
  double step_deg() const {
    const double by_chord = rad2deg(2.0 * std::asin(std::min(1.0, tube_radius / (2.0 * ring_radius))));
    return std::clamp(by_chord, 2.0, 10.0);
  }
  int segment_count() const {
    return std::max(1, static_cast<int>(std::ceil((arc_end_deg - arc_start_deg) / step_deg())));
  }
};

struct Primitive {
  std::variant<CylinderPrim, BoxPrim, PlanePrim, SpherePrim, HandlePrim> shape;
  std::string name;
  int graspable_override = -1;  // -1 auto, 0 force no, 1 force yes
};

// Mirrors the manual labeling rule: graspable iff the cross-section radius is
// within the capture radius, the surrounding shell of `clearance` thickness
// is free of other objects, and the clear run is at least min_length long.
struct LabelingParams {
  double capture_radius = 0.026;
  double clearance = 0.008;
  double min_length = 0.03;
};

struct SceneSpec {
  Camera camera;
  double noise_sigma = 0.0;
  std::vector<Primitive> primitives;
  LabelingParams labeling;
};

struct TruthSegment {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
};

struct TruthAffordance {
  std::string id;
  double radius = 0.0;
  bool graspable = false;  // negatives are kept for hard-negative checks
  std::vector<TruthSegment> segments;
};

namespace detail {

constexpr double kRayMin = 1e-6;

inline std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c,
                                        double r) {
  const Vec3 oc = o - c;
  const double b = 2.0 * oc.dot(d);
  const double cc = oc.squaredNorm() - r * r;
  const double disc = b * b - 4.0 * cc;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t1 = (-b - sq) / 2.0, t2 = (-b + sq) / 2.0;
  if (t1 > kRayMin) return t1;
  if (t2 > kRayMin) return t2;
  return std::nullopt;
}

// Finite cylinder, optionally with end caps.
inline std::optional<double> ray_cylinder(const Vec3& o, const Vec3& d, const Vec3& c,
                                          const Vec3& axis, double r, double half_len,
                                          bool caps) {
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > kRayMin && (!best || t < *best)) best = t;
  };
  const Vec3 oc = o - c;
  const Vec3 dp = d - d.dot(axis) * axis;
  const Vec3 op = oc - oc.dot(axis) * axis;
  const double a = dp.squaredNorm();
  if (a > 1e-16) {
    const double b = 2.0 * op.dot(dp);
    const double cc = op.squaredNorm() - r * r;
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (const double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (t <= kRayMin) continue;
        const double h = (oc + t * d).dot(axis);
        if (std::abs(h) <= half_len) consider(t);
      }
    }
  }
  if (caps) {
    const double dn = d.dot(axis);
    if (std::abs(dn) > 1e-16) {
      for (const double s : {-1.0, 1.0}) {
        const double t = (s * half_len - oc.dot(axis)) / dn;
        if (t <= kRayMin) continue;
        const Vec3 q = oc + t * d - (s * half_len) * axis;
        if (q.squaredNorm() <= r * r) consider(t);
      }
    }
  }
  return best;
}

inline std::optional<double> ray_box(const Vec3& o, const Vec3& d, const BoxPrim& b) {
  const Mat3 r = b.rotation();
  const Vec3 ro = r.transpose() * (o - b.center);
  const Vec3 rd = r.transpose() * d;
  double tlo = -1e30, thi = 1e30;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(rd[a]) < 1e-16) {
      if (std::abs(ro[a]) > b.half[a]) return std::nullopt;
      continue;
    }
    double t0 = (-b.half[a] - ro[a]) / rd[a];
    double t1 = (b.half[a] - ro[a]) / rd[a];
    if (t0 > t1) std::swap(t0, t1);
    tlo = std::max(tlo, t0);
    thi = std::min(thi, t1);
  }
  if (tlo > thi || tlo <= kRayMin) return std::nullopt;
  return tlo;
}

inline std::optional<double> ray_rect(const Vec3& o, const Vec3& d, const PlanePrim& p) {
  const Vec3 n = p.normal.normalized();
  const double dn = d.dot(n);
  if (std::abs(dn) < 1e-16) return std::nullopt;
  const double t = (p.center - o).dot(n) / dn;
  if (t <= kRayMin) return std::nullopt;
  const auto [w1, w2] = plane_basis(n);
  const Vec3 q = o + t * d - p.center;
  if (std::abs(q.dot(w1)) > p.half_u || std::abs(q.dot(w2)) > p.half_v) {
    return std::nullopt;
  }
  return t;
}

inline std::optional<double> ray_capsule(const Vec3& o, const Vec3& d, const Vec3& p0,
                                         const Vec3& p1, double r) {
  const Vec3 mid = (p0 + p1) / 2.0;
  const double half = (p1 - p0).norm() / 2.0;
  const Vec3 axis = half > 0.0 ? Vec3((p1 - p0) / (2.0 * half)) : Vec3::UnitZ();
  std::optional<double> best = ray_cylinder(o, d, mid, axis, r, half, false);
  for (const Vec3& cap : {p0, p1}) {
    const auto t = ray_sphere(o, d, cap, r);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

// Signed distances, negative inside the solid.
inline double sdf_sphere(const Vec3& p, const SpherePrim& s) {
  return (p - s.center).norm() - s.radius;
}

inline double sdf_cylinder(const Vec3& p, const CylinderPrim& c) {
  const Vec3 d = p - c.center;
  const double h = d.dot(c.axis);
  const double radial = (d - h * c.axis).norm();
  const double dr = radial - c.radius;
  const double dh = std::abs(h) - c.length / 2.0;
  const double outside = std::hypot(std::max(dr, 0.0), std::max(dh, 0.0));
  return outside + std::min(std::max(dr, dh), 0.0);
}

inline double sdf_box(const Vec3& p, const BoxPrim& b) {
  const Vec3 q = (b.rotation().transpose() * (p - b.center)).cwiseAbs() - b.half;
  const Vec3 qpos = q.cwiseMax(0.0);
  return qpos.norm() + std::min(q.maxCoeff(), 0.0);
}

inline double sdf_rect(const Vec3& p, const PlanePrim& pl) {
  // thin slab so clearance tests treat the sheet as solid
  const Vec3 n = pl.normal.normalized();
  const auto [w1, w2] = plane_basis(n);
  const Vec3 d = p - pl.center;
  const Vec3 q(std::abs(d.dot(w1)) - pl.half_u, std::abs(d.dot(w2)) - pl.half_v,
               std::abs(d.dot(n)) - 0.001);
  const Vec3 qpos = q.cwiseMax(0.0);
  return qpos.norm() + std::min(q.maxCoeff(), 0.0);
}

inline double sdf_handle(const Vec3& p, const HandlePrim& h) {
  const double step = h.step_deg();
  const int n = h.segment_count();
  double best = 1e30;
  for (int i = 0; i < n; ++i) {
    const double a0 = h.arc_start_deg + i * step;
    const double a1 = std::min(h.arc_end_deg, a0 + step);
    best = std::min(best, point_segment_distance(p, h.arc_point(a0), h.arc_point(a1)));
  }
  return best - h.tube_radius;
}

}  // namespace detail

inline std::optional<double> ray_primitive(const Vec3& o, const Vec3& d,
                                           const Primitive& prim) {
  using namespace detail;
  return std::visit(
      [&](const auto& s) -> std::optional<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CylinderPrim>) {
          return ray_cylinder(o, d, s.center, s.axis.normalized(), s.radius,
                              s.length / 2.0, true);
        } else if constexpr (std::is_same_v<T, BoxPrim>) {
          return ray_box(o, d, s);
        } else if constexpr (std::is_same_v<T, PlanePrim>) {
          return ray_rect(o, d, s);
        } else if constexpr (std::is_same_v<T, SpherePrim>) {
          return ray_sphere(o, d, s.center, s.radius);
        } else {
          const HandlePrim& h = s;
          const double step = h.step_deg();
          const int n = h.segment_count();
          std::optional<double> best;
          for (int i = 0; i < n; ++i) {
            const double a0 = h.arc_start_deg + i * step;
            const double a1 = std::min(h.arc_end_deg, a0 + step);
            const auto t = ray_capsule(o, d, h.arc_point(a0), h.arc_point(a1), h.tube_radius);
            if (t && (!best || *t < *best)) best = t;
          }
          return best;
        }
      },
      prim.shape);
}

inline double sdf_primitive(const Vec3& p, const Primitive& prim) {
  using namespace detail;
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CylinderPrim>) {
          return sdf_cylinder(p, s);
        } else if constexpr (std::is_same_v<T, BoxPrim>) {
          return sdf_box(p, s);
        } else if constexpr (std::is_same_v<T, PlanePrim>) {
          return sdf_rect(p, s);
        } else if constexpr (std::is_same_v<T, SpherePrim>) {
          return sdf_sphere(p, s);
        } else {
          return sdf_handle(p, s);
        }
      },
      prim.shape);
}

// Distance from p to everything except primitive `skip`.
inline double scene_clearance(const SceneSpec& spec, const Vec3& p, size_t skip) {
  double best = 1e30;
  for (size_t i = 0; i < spec.primitives.size(); ++i) {
    if (i == skip) continue;
    best = std::min(best, sdf_primitive(p, spec.primitives[i]));
  }
  return best;
}

namespace detail {

// True when the annulus [radius, radius + clearance] around the chord
// (p0, p1) is free of all primitives other than `skip`.
inline bool annulus_clear(const SceneSpec& spec, const Vec3& p0, const Vec3& p1,
                          double radius, size_t skip) {
  const Vec3 axis = (p1 - p0).normalized();
  const auto [w1, w2] = plane_basis(axis);
  const double len = (p1 - p0).norm();
  const int nt = std::max(2, static_cast<int>(std::ceil(len / 0.005)));
  const double radial[3] = {radius + 0.001, radius + spec.labeling.clearance / 2.0,
                            radius + spec.labeling.clearance - 0.0005};
  for (int it = 0; it <= nt; ++it) {
    const Vec3 on_axis = p0 + (static_cast<double>(it) / nt) * (p1 - p0);
    for (int ia = 0; ia < 24; ++ia) {
      const double th = 2.0 * kPi * ia / 24.0;
      const Vec3 dir = std::cos(th) * w1 + std::sin(th) * w2;
      for (const double rr : radial) {
        if (scene_clearance(spec, on_axis + rr * dir, skip) <= 0.0) return false;
      }
    }
  }
  return true;
}

// Splits [0, n_slices) into runs of clear slices, trims the run ends by
// `trim` slices, and keeps runs of at least min_len.
inline std::vector<std::pair<int, int>> clear_runs(const std::vector<bool>& clear,
                                                   int trim, double slice_len,
                                                   double min_len) {
  std::vector<std::pair<int, int>> runs;
  const int n = static_cast<int>(clear.size());
  int i = 0;
  while (i < n) {
    if (!clear[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && clear[j]) ++j;
    const int lo = i + trim, hi = j - trim;  // [lo, hi)
    if (hi > lo && (hi - lo) * slice_len >= min_len) runs.emplace_back(lo, hi);
    i = j;
  }
  return runs;
}

}  // namespace detail

// Programmatic ground truth: cylinders and handle arcs of graspable size are
// labeled by slicing them along the axis, testing the surrounding annulus for
// clearance against the rest of the scene, and keeping trimmed clear runs of
// sufficient length. Undersized or blocked geometry of graspable radius is
// reported as a non-graspable negative.
inline std::vector<TruthAffordance> label_scene(const SceneSpec& spec) {
  std::vector<TruthAffordance> out;
  const LabelingParams& lp = spec.labeling;
  const double slice = 0.005;
  const int trim = 2;  // 1 cm margin at run ends

  for (size_t i = 0; i < spec.primitives.size(); ++i) {
    const Primitive& prim = spec.primitives[i];
    TruthAffordance aff;
    aff.id = prim.name.empty() ? "prim" + std::to_string(i) : prim.name;

    if (const auto* cyl = std::get_if<CylinderPrim>(&prim.shape)) {
      if (cyl->radius > lp.capture_radius) continue;  // not of graspable size
      aff.radius = cyl->radius;
      const Vec3 axis = cyl->axis.normalized();
      const Vec3 base = cyl->center - (cyl->length / 2.0) * axis;
      if (prim.graspable_override == 0) {
        aff.graspable = false;
        aff.segments.push_back({base, base + cyl->length * axis});
        out.push_back(std::move(aff));
        continue;
      }
      const int n = std::max(1, static_cast<int>(std::floor(cyl->length / slice)));
      std::vector<bool> clear(n);
      for (int s = 0; s < n; ++s) {
        const Vec3 p0 = base + (s * slice) * axis;
        const Vec3 p1 = base + std::min((s + 1) * slice, cyl->length) * axis;
        clear[s] = detail::annulus_clear(spec, p0, p1, cyl->radius, i);
      }
      const auto runs =
          prim.graspable_override == 1
              ? std::vector<std::pair<int, int>>{{0, n}}
              : detail::clear_runs(clear, trim, slice, lp.min_length);
      for (const auto& [lo, hi] : runs) {
        aff.segments.push_back(
            {base + (lo * slice) * axis, base + std::min(hi * slice, cyl->length) * axis});
      }
      aff.graspable = !aff.segments.empty();
      if (!aff.graspable) {
        aff.segments.push_back({base, base + cyl->length * axis});
      }
      out.push_back(std::move(aff));
    } else if (const auto* h = std::get_if<HandlePrim>(&prim.shape)) {
      if (h->tube_radius > lp.capture_radius) continue;
      aff.radius = h->tube_radius;
      const double step = h->step_deg();
      const int n = h->segment_count();
      std::vector<bool> clear(n);
      std::vector<TruthSegment> chords(n);
      for (int s = 0; s < n; ++s) {
        const double a0 = h->arc_start_deg + s * step;
        const double a1 = std::min(h->arc_end_deg, a0 + step);
        chords[s] = {h->arc_point(a0), h->arc_point(a1)};
        clear[s] = detail::annulus_clear(spec, chords[s].p0, chords[s].p1, h->tube_radius, i);
      }
      const double chord_len = (chords[0].p1 - chords[0].p0).norm();
      const auto runs =
          prim.graspable_override == 1
              ? std::vector<std::pair<int, int>>{{0, n}}
              : detail::clear_runs(clear, 1, chord_len, lp.min_length);
      for (const auto& [lo, hi] : runs) {
        for (int s = lo; s < hi; ++s) aff.segments.push_back(chords[s]);
      }
      aff.graspable = !aff.segments.empty();
      if (!aff.graspable) {
        aff.segments = chords;
      }
      if (prim.graspable_override == 0) aff.graspable = false;
      out.push_back(std::move(aff));
    }
  }
  return out;
}

// Transforms world-frame truth into the sensor frame of a rendered cloud.
inline std::vector<TruthAffordance> truth_in_camera_frame(
    const std::vector<TruthAffordance>& world, const Camera& cam) {
  const Mat3 r = cam.rotation();
  std::vector<TruthAffordance> out = world;
  for (auto& aff : out) {
    for (auto& seg : aff.segments) {
      seg.p0 = r * (seg.p0 - cam.position);
      seg.p1 = r * (seg.p1 - cam.position);
    }
  }
  return out;
}

// Per-pixel ray casting against all primitives; the nearest hit wins, which
// produces genuine occlusion shadows. Gaussian depth noise (along the ray) is
// drawn from per-row generator streams so renders are reproducible. The
// returned cloud is in the sensor frame with recorded intrinsics.
inline PointCloud render_range_image(const SceneSpec& spec, std::uint64_t seed,
                                     int threads = 0) {
  const Camera& cam = spec.camera;
  PointCloud cloud;
  RangeImageLayout im;
  im.width = cam.width;
  im.height = cam.height;
  im.fx = cam.fx;
  im.fy = cam.fy;
  im.cx = cam.cx();
  im.cy = cam.cy();
  im.pixel_to_point.assign(static_cast<size_t>(cam.width) * cam.height, -1);

  const Mat3 rot = cam.rotation();        // world -> cam
  const Mat3 rot_t = rot.transpose();     // cam -> world
  std::vector<std::vector<Vec3>> row_pts(cam.height);

  auto work = [&](int v0, int v1) {
    for (int v = v0; v < v1; ++v) {
      auto rng = make_stream(seed, static_cast<std::uint64_t>(v));
      std::normal_distribution<double> depth_noise(0.0, spec.noise_sigma);
      auto& pts = row_pts[v];
      for (int u = 0; u < cam.width; ++u) {
        const Vec3 dir_cam =
            Vec3((u - im.cx) / cam.fx, (v - im.cy) / cam.fy, 1.0).normalized();
        const Vec3 dir_world = rot_t * dir_cam;
        double best = cam.max_range;
        bool hit = false;
        for (const Primitive& prim : spec.primitives) {
          const auto t = ray_primitive(cam.position, dir_world, prim);
          if (t && *t < best) {
            best = *t;
            hit = true;
          }
        }
        // every pixel consumes one noise draw so the row stream is stable
        double range = best;
        if (spec.noise_sigma > 0.0) range += depth_noise(rng);
        if (!hit || range <= 0.0 || range > cam.max_range) {
          continue;  // cell stays invalid
        }
        im.pixel_to_point[static_cast<size_t>(v) * cam.width + u] =
            static_cast<int>(pts.size());
        pts.push_back(range * dir_cam);
      }
    }
  };

  int nt = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  nt = std::max(1, std::min(nt, cam.height));
  if (nt == 1) {
    work(0, cam.height);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (cam.height + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
      pool.emplace_back(work, t * chunk, std::min(cam.height, (t + 1) * chunk));
    }
    for (auto& th : pool) th.join();
  }

  // stitch rows into one cloud, fixing up pixel indices
  int base = 0;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      int& cell = im.pixel_to_point[static_cast<size_t>(v) * cam.width + u];
      if (cell >= 0) cell += base;
    }
    base += static_cast<int>(row_pts[v].size());
    cloud.points.insert(cloud.points.end(), row_pts[v].begin(), row_pts[v].end());
  }
  if (cloud.points.empty()) throw NoVisibleGeometry();
  cloud.organized = std::move(im);
  cloud.viewpoint = Vec3::Zero();
  return cloud;
}

// ---------------------------------------------------------------------------
// Declarative scene files: one block per camera/primitive, `key value...`
// lines inside a block, lengths in meters and angles in degrees. See the
// fixtures for examples.

inline SceneSpec parse_scene(std::istream& in, const std::string& name = "<scene>") {
  SceneSpec spec;
  std::string line;
  int lineno = 0;
  Primitive* open = nullptr;
  bool camera_open = false;

  auto fail = [&](const std::string& what) -> void {
    throw ParseError(name + ":" + std::to_string(lineno) + ": " + what);
  };
  auto need = [&](std::istringstream& ls, double* out, int n) {
    for (int i = 0; i < n; ++i) {
      if (!(ls >> out[i])) fail("expected " + std::to_string(n) + " numeric values");
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;

    if (key == "camera") {
      camera_open = true;
      open = nullptr;
      continue;
    }
    if (key == "cylinder" || key == "box" || key == "plane" || key == "sphere" ||
        key == "handle") {
      camera_open = false;
      std::string pname;
      ls >> pname;
      Primitive prim;
      prim.name = pname;
      if (key == "cylinder") prim.shape = CylinderPrim{};
      if (key == "box") prim.shape = BoxPrim{};
      if (key == "plane") prim.shape = PlanePrim{};
      if (key == "sphere") prim.shape = SpherePrim{};
      if (key == "handle") prim.shape = HandlePrim{};
      spec.primitives.push_back(std::move(prim));
      open = &spec.primitives.back();
      continue;
    }
    if (key == "noise") {
      double v[1];
      need(ls, v, 1);
      spec.noise_sigma = v[0];
      continue;
    }
    if (key == "label") {
      double v[3];
      need(ls, v, 3);
      spec.labeling = {v[0], v[1], v[2]};
      continue;
    }

    if (camera_open) {
      Camera& c = spec.camera;
      double v[3];
      if (key == "position") {
        need(ls, v, 3);
        c.position = Vec3(v[0], v[1], v[2]);
      } else if (key == "look_at") {
        need(ls, v, 3);
        c.look_at = Vec3(v[0], v[1], v[2]);
      } else if (key == "up") {
        need(ls, v, 3);
        c.up = Vec3(v[0], v[1], v[2]);
      } else if (key == "resolution") {
        need(ls, v, 2);
        c.width = static_cast<int>(v[0]);
        c.height = static_cast<int>(v[1]);
        if (c.width <= 0 || c.height <= 0) fail("resolution must be positive");
      } else if (key == "focal") {
        need(ls, v, 1);
        c.fx = c.fy = v[0];
      } else if (key == "max_range") {
        need(ls, v, 1);
        c.max_range = v[0];
      } else {
        fail("unknown camera field '" + key + "'");
      }
      continue;
    }

    if (!open) fail("'" + key + "' outside of any block");
    double v[3];
    if (key == "graspable") {
      std::string flag;
      ls >> flag;
      if (flag == "auto") {
        open->graspable_override = -1;
      } else if (flag == "yes") {
        open->graspable_override = 1;
      } else if (flag == "no") {
        open->graspable_override = 0;
      } else {
        fail("graspable must be auto|yes|no");
      }
      continue;
    }
    bool handled = std::visit(
        [&](auto& s) -> bool {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, CylinderPrim>) {
            if (key == "center") { need(ls, v, 3); s.center = Vec3(v[0], v[1], v[2]); return true; }
            if (key == "axis") { need(ls, v, 3); s.axis = Vec3(v[0], v[1], v[2]).normalized(); return true; }
            if (key == "radius") { need(ls, v, 1); s.radius = v[0]; return true; }
            if (key == "length") { need(ls, v, 1); s.length = v[0]; return true; }
          } else if constexpr (std::is_same_v<T, BoxPrim>) {
            if (key == "center") { need(ls, v, 3); s.center = Vec3(v[0], v[1], v[2]); return true; }
            if (key == "half") { need(ls, v, 3); s.half = Vec3(v[0], v[1], v[2]); return true; }
            if (key == "rot_axis") { need(ls, v, 3); s.rot_axis = Vec3(v[0], v[1], v[2]); return true; }
            if (key == "rot_deg") { need(ls, v, 1); s.rot_deg = v[0]; return true; }
          } else if constexpr (std::is_same_v<T, PlanePrim>) {
            if (key == "center") { need(ls, v, 3); s.center = Vec3(v[0], v[1], v[2]); return true; }
            if (key == "normal") { need(ls, v, 3); s.normal = Vec3(v[0], v[1], v[2]).normalized(); return true; }
            if (key == "extent") { need(ls, v, 2); s.half_u = v[0]; s.half_v = v[1]; return true; }
          } else if constexpr (std::is_same_v<T, SpherePrim>) {
            if (key == "center") { need(ls, v, 3); s.center = Vec3(v[0], v[1], v[2]); return true; }
            if (key == "radius") { need(ls, v, 1); s.radius = v[0]; return true; }
          } else {
            if (key == "center") { need(ls, v, 3); s.center = Vec3(v[0], v[1], v[2]); return true; }
            if (key == "normal") { need(ls, v, 3); s.normal = Vec3(v[0], v[1], v[2]).normalized(); return true; }
            if (key == "ring_radius") { need(ls, v, 1); s.ring_radius = v[0]; return true; }
            if (key == "tube_radius") { need(ls, v, 1); s.tube_radius = v[0]; return true; }
            if (key == "arc") { need(ls, v, 2); s.arc_start_deg = v[0]; s.arc_end_deg = v[1]; return true; }
          }
          return false;
        },
        open->shape);
    if (!handled) fail("unknown field '" + key + "' for this primitive");
  }
  if (spec.primitives.empty()) throw ParseError(name + ": scene has no primitives");
  return spec;
}

inline SceneSpec parse_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return parse_scene(in, path);
}

}  // namespace ega
