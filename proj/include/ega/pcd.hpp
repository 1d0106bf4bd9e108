#pragma once

// ASCII PCD v0.7 reader/writer. FIELDS must contain x y z; extra fields are
// ignored. HEIGHT > 1 marks an organized cloud: NaN rows become invalid
// pixels and are excluded from the point array, and pinhole intrinsics are
// recovered from the pixel/point correspondences.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ega/cloud.hpp"
#include "ega/errors.hpp"

namespace ega {

inline PointCloud load_pcd(std::istream& in, const std::string& name = "<pcd>") {
  std::string line;
  int width = -1, height = -1;
  long points_declared = -1;
  int ix = -1, iy = -1, iz = -1, nfields = 0;
  Vec3 viewpoint = Vec3::Zero();
  bool data_seen = false;
  int lineno = 0;

  auto fail = [&](const std::string& what) -> void {
    throw ParseError(name + ":" + std::to_string(lineno) + ": " + what);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "FIELDS") {
      std::string f;
      for (int i = 0; ls >> f; ++i) {
        if (f == "x") ix = i;
        if (f == "y") iy = i;
        if (f == "z") iz = i;
        ++nfields;
      }
      if (ix < 0 || iy < 0 || iz < 0) fail("FIELDS must include x y z");
    } else if (key == "WIDTH") {
      if (!(ls >> width) || width <= 0) fail("bad WIDTH");
    } else if (key == "HEIGHT") {
      if (!(ls >> height) || height <= 0) fail("bad HEIGHT");
    } else if (key == "POINTS") {
      if (!(ls >> points_declared) || points_declared < 0) fail("bad POINTS");
    } else if (key == "VIEWPOINT") {
      if (!(ls >> viewpoint.x() >> viewpoint.y() >> viewpoint.z())) {
        fail("bad VIEWPOINT");
      }
    } else if (key == "DATA") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") fail("only DATA ascii is supported, got '" + fmt + "'");
      data_seen = true;
      break;
    }
    // VERSION / SIZE / TYPE / COUNT carry nothing we need.
  }
  if (!data_seen) fail("missing DATA header");
  if (width < 0 || height < 0) fail("missing WIDTH or HEIGHT");
  if (points_declared < 0) points_declared = static_cast<long>(width) * height;
  if (points_declared != static_cast<long>(width) * height) {
    fail("POINTS does not match WIDTH*HEIGHT");
  }

  PointCloud cloud;
  cloud.viewpoint = viewpoint;
  const bool organized = height > 1;
  RangeImageLayout im;
  if (organized) {
    im.width = width;
    im.height = height;
    im.pixel_to_point.assign(static_cast<size_t>(width) * height, -1);
  }

  std::vector<double> vals(nfields);
  for (long r = 0; r < points_declared; ++r) {
    if (!std::getline(in, line)) fail("unexpected end of data after " + std::to_string(r) + " rows");
    ++lineno;
    const char* cur = line.c_str();
    for (int f = 0; f < nfields; ++f) {
      char* end = nullptr;
      vals[f] = std::strtod(cur, &end);  // accepts nan for invalid returns
      if (end == cur) fail("bad value in field " + std::to_string(f));
      cur = end;
    }
    const Vec3 p(vals[ix], vals[iy], vals[iz]);
    if (!p.allFinite()) continue;  // invalid return
    if (organized) im.pixel_to_point[r] = static_cast<int>(cloud.points.size());
    cloud.points.push_back(p);
  }

  if (organized && estimate_intrinsics(cloud.points, im)) {
    cloud.organized = std::move(im);
  }
  return cloud;
}

inline PointCloud load_pcd(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return load_pcd(in, path);
}

inline void save_pcd(std::ostream& out, const PointCloud& cloud) {
  int width = cloud.size(), height = 1;
  if (cloud.organized) {
    width = cloud.organized->width;
    height = cloud.organized->height;
  }
  const long cells = static_cast<long>(width) * height;
  out << "# .PCD v0.7 - Point Cloud Data file format\n"
      << "VERSION 0.7\n"
      << "FIELDS x y z\n"
      << "SIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
      << "WIDTH " << width << "\nHEIGHT " << height << "\n"
      << "VIEWPOINT " << cloud.viewpoint.x() << " " << cloud.viewpoint.y() << " "
      << cloud.viewpoint.z() << " 1 0 0 0\n"
      << "POINTS " << cells << "\nDATA ascii\n";

  char buf[96];
  auto emit = [&](const Vec3& p) {
    std::snprintf(buf, sizeof(buf), "%.8g %.8g %.8g\n", p.x(), p.y(), p.z());
    out << buf;
  };
  if (cloud.organized) {
    for (long c = 0; c < cells; ++c) {
      const int pi = cloud.organized->pixel_to_point[c];
      if (pi < 0) {
        out << "nan nan nan\n";
      } else {
        emit(cloud.points[pi]);
      }
    }
  } else {
    for (const Vec3& p : cloud.points) emit(p);
  }
}

inline void save_pcd(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  save_pcd(out, cloud);
}

}  // namespace ega
