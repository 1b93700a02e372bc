#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace herd {

using Vec = std::vector<double>;

// Caller mistakes: bad dimensions, infeasible targets, non-enumerable space
// where enumeration is required.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contract breaks detected while a run is in progress.
struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PctViolationError : RunError {
  using RunError::RunError;
};

struct MonotonicityError : RunError {
  using RunError::RunError;
};

struct NonFiniteWeightError : RunError {
  using RunError::RunError;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Accumulation order is part of the determinism contract: plain left-to-right
// loops, no pairwise or vectorized reductions.
inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double dot(const Vec& a, const double* b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline bool all_finite(const Vec& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Slack for the perceptron-cycling condition w.v <= 0. Scaled by the operand
// norms so the check is invariant under rescaling weights or features.
inline double pct_tolerance(double w_norm, double v_norm) {
  return 1e-12 * w_norm * v_norm;
}

}  // namespace herd
