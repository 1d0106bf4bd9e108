#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace ega {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// SplitMix64 mixer, used to whiten seeds for derived generator streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for stream `ordinal` under a run seed. Streams with
// different ordinals never interact, so work split across threads reproduces
// the serial result.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t ordinal) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ ordinal));
}

// Deterministic orthonormal basis (w1, w2) of the plane orthogonal to `axis`
// (unit); (w1, w2, axis) is right-handed. w1 is built by Gram-Schmidt from
// the coordinate axis least aligned with `axis`.
inline std::pair<Vec3, Vec3> plane_basis(const Vec3& axis) {
  int least = 0;
  double best = std::abs(axis.x());
  if (std::abs(axis.y()) < best) {
    best = std::abs(axis.y());
    least = 1;
  }
  if (std::abs(axis.z()) < best) {
    least = 2;
  }
  Vec3 e = Vec3::Zero();
  e[least] = 1.0;
  const Vec3 w1 = (e - e.dot(axis) * axis).normalized();
  const Vec3 w2 = axis.cross(w1);
  return {w1, w2};
}

// Canonical sign for directions that are only defined up to sign: flip so the
// largest-magnitude component is positive.
inline Vec3 sign_normalized(const Vec3& v) {
  int imax = 0;
  double best = std::abs(v[0]);
  for (int i = 1; i < 3; ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      imax = i;
    }
  }
  return v[imax] < 0.0 ? Vec3(-v) : v;
}

// Angle between two directions ignoring sign, in radians.
inline double axis_angle(const Vec3& a, const Vec3& b) {
  double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c));
}

}  // namespace ega
