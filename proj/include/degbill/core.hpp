#pragma once

// Shared scalar/vector aliases, error types and small numeric helpers used
// across the toolkit.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace degbill {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DomainError : Error {
  using Error::Error;
};

/// A trajectory approached the scatterer closer than the handoff radius
/// while being integrated in physical coordinates.
struct NeedsRegularization : Error {
  Vec state;   // phase state (q,p) at the moment the monitor fired
  double time; // integration time of that state
  NeedsRegularization(const std::string& what, Vec s, double t)
      : Error(what), state(std::move(s)), time(t) {}
};

struct ConvergenceError : Error {
  using Error::Error;
};

/// Shooting Jacobian became numerically singular (conjugate endpoints).
struct ConjugatePointsError : ConvergenceError {
  using ConvergenceError::ConvergenceError;
};

struct GaugeError : Error {
  using Error::Error;
};

inline double sqr(double x) { return x * x; }

/// Relative spread max/min of a positive sample set.
inline double spread(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi / lo;
}

/// Least-squares slope of log|err| against log|mu| (Richardson exponent).
inline double loglog_slope(const std::vector<double>& mu,
                           const std::vector<double>& err) {
  const int n = static_cast<int>(mu.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(std::abs(mu[i]));
    const double y = std::log(std::abs(err[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Operator infinity-norm (max absolute row sum).
inline double opnorm_inf(const Mat& m) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    best = std::max(best, m.row(i).cwiseAbs().sum());
  return best;
}

/// 64-bit FNV-1a, used to fingerprint configurations in run manifests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

} // namespace degbill
