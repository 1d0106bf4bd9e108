#pragma once

// Colored ASCII PLY export for eyeballing detections: the cloud in gray,
// per-detection support points in a palette color, and each shell drawn as a
// wireframe (two rings plus axial struts) in the edge element.

#include <array>
#include <fstream>
#include <string>
#include <vector>

#include "ega/cloud.hpp"
#include "ega/pipeline.hpp"

namespace ega {

inline void write_detections_ply(std::ostream& out, const PointCloud& cloud,
                                 const std::vector<Detection>& dets) {
  static constexpr std::array<std::array<int, 3>, 8> kPalette = {{{230, 60, 60},
                                                                  {60, 180, 75},
                                                                  {60, 100, 230},
                                                                  {240, 160, 40},
                                                                  {170, 60, 230},
                                                                  {70, 210, 210},
                                                                  {240, 220, 60},
                                                                  {245, 120, 180}}};
  struct V {
    Vec3 p;
    std::array<int, 3> c;
  };
  std::vector<V> verts;
  verts.reserve(cloud.points.size() + dets.size() * 64);
  std::vector<std::array<int, 3>> colors(cloud.points.size(), {128, 128, 128});

  for (size_t k = 0; k < dets.size(); ++k) {
    const CylindricalShell& s = dets[k].shell;
    const auto& col = kPalette[k % kPalette.size()];
    for (size_t i = 0; i < cloud.points.size(); ++i) {
      const Vec3 d = cloud.points[i] - s.centroid;
      const double t = s.axis.dot(d);
      if (std::abs(t) > s.extent / 2.0) continue;
      if ((d - t * s.axis).norm() < s.inner_radius) colors[i] = col;
    }
  }
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    verts.push_back({cloud.points[i], colors[i]});
  }

  std::vector<std::array<int, 2>> edges;
  constexpr int kRingSegments = 24;
  for (size_t k = 0; k < dets.size(); ++k) {
    const CylindricalShell& s = dets[k].shell;
    const auto& col = kPalette[k % kPalette.size()];
    const auto [w1, w2] = plane_basis(s.axis);
    const int base = static_cast<int>(verts.size());
    for (const double side : {-1.0, 1.0}) {
      const Vec3 ring_center = s.centroid + side * (s.extent / 2.0) * s.axis;
      for (int i = 0; i < kRingSegments; ++i) {
        const double th = 2.0 * kPi * i / kRingSegments;
        verts.push_back(
            {ring_center + s.inner_radius * (std::cos(th) * w1 + std::sin(th) * w2), col});
      }
    }
    for (int i = 0; i < kRingSegments; ++i) {
      const int lo = base + i, hi = base + kRingSegments + i;
      edges.push_back({lo, base + (i + 1) % kRingSegments});
      edges.push_back({hi, base + kRingSegments + (i + 1) % kRingSegments});
      if (i % 6 == 0) edges.push_back({lo, hi});  // axial struts
    }
  }

  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << verts.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element edge " << edges.size() << "\n"
      << "property int vertex1\nproperty int vertex2\n"
      << "end_header\n";
  char buf[128];
  for (const V& v : verts) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %d %d %d\n", v.p.x(), v.p.y(),
                  v.p.z(), v.c[0], v.c[1], v.c[2]);
    out << buf;
  }
  for (const auto& e : edges) {
    out << e[0] << " " << e[1] << "\n";
  }
}

inline void write_detections_ply(const std::string& path, const PointCloud& cloud,
                                 const std::vector<Detection>& dets) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  write_detections_ply(out, cloud, dets);
}

}  // namespace ega
