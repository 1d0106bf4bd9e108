#pragma once

#include <stdexcept>
#include <string>

namespace ega {

// Base class for all library failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyCloud : Error {
  explicit EmptyCloud(const std::string& m = "point cloud is empty") : Error(m) {}
};

struct InsufficientPoints : Error {
  explicit InsufficientPoints(const std::string& m = "not enough points") : Error(m) {}
};

// The smallest generalized eigenvalue of the fit is not isolated; the data do
// not determine a single quadric.
struct DegenerateFit : Error {
  explicit DegenerateFit(const std::string& m = "ambiguous quadric fit") : Error(m) {}
};

// The quadric gradient vanishes at the query point (singular point).
struct DegenerateGradient : Error {
  explicit DegenerateGradient(const std::string& m = "degenerate quadric gradient") : Error(m) {}
};

// Too many curvature samples failed to project onto the fitted surface.
struct ProjectionFailure : Error {
  explicit ProjectionFailure(const std::string& m = "surface projection failed") : Error(m) {}
};

struct ZeroGradientConstraint : Error {
  explicit ZeroGradientConstraint(const std::string& m = "c^T N c is not positive") : Error(m) {}
};

struct CollinearPoints : Error {
  explicit CollinearPoints(const std::string& m = "points are collinear") : Error(m) {}
};

struct ImaginaryRadius : Error {
  explicit ImaginaryRadius(const std::string& m = "circle fit produced imaginary radius") : Error(m) {}
};

struct NotOrganized : Error {
  explicit NotOrganized(const std::string& m = "cloud has no range image layout") : Error(m) {}
};

struct DegenerateCovariance : Error {
  explicit DegenerateCovariance(const std::string& m = "degenerate point covariance") : Error(m) {}
};

struct TooFewValidNormals : Error {
  explicit TooFewValidNormals(const std::string& m = "fewer than 3 valid normals") : Error(m) {}
};

struct NoVisibleGeometry : Error {
  explicit NoVisibleGeometry(const std::string& m = "camera sees no geometry") : Error(m) {}
};

// Malformed input file; message names the offending line or field.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace ega
