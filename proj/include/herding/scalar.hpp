#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <utility>

#include "herding/common.hpp"

namespace herd::scalar {

// (sqrt(5) - 1) / 2, the golden mean.
inline constexpr double kGoldenMean = 0.61803398874989484820458683436563811772;

/// Scalar herding: s_t = [w_{t-1} > 0] (strictly; w = 0 does not fire),
/// w_t = w_{t-1} + pi - s_t. For w0 in (pi - 1, pi] the interval is invariant
/// and every window's count of ones stays within 1 of len * pi.
struct NeuronConfig {
  double pi = kGoldenMean;
  double w0 = 2.0 * kGoldenMean - 1.0;

  void validate() const {
    if (!(pi >= 0.0 && pi <= 1.0)) throw ConfigError("NeuronConfig: pi must lie in [0, 1]");
    if (!std::isfinite(w0)) throw ConfigError("NeuronConfig: w0 must be finite");
  }
};

struct NeuronTrace {
  std::vector<std::uint8_t> bits;  // s_t for t = 1..steps
  std::vector<double> weights;     // w_t for t = 0..steps
};

inline NeuronTrace neuron_run(const NeuronConfig& cfg, long long steps) {
  cfg.validate();
  if (steps < 0) throw ConfigError("neuron_run: steps must be >= 0");
  NeuronTrace tr;
  tr.bits.reserve(std::size_t(steps));
  tr.weights.reserve(std::size_t(steps) + 1);
  double w = cfg.w0;
  tr.weights.push_back(w);
  for (long long t = 0; t < steps; ++t) {
    std::uint8_t s = w > 0.0 ? 1 : 0;
    w += cfg.pi - double(s);
    tr.bits.push_back(s);
    tr.weights.push_back(w);
  }
  return tr;
}

/// | count of ones in bits[offset, offset+len) - len * pi |.
inline double neuron_discrepancy(const std::vector<std::uint8_t>& bits, double pi,
                                 long long offset, long long len) {
  if (offset < 0 || len < 0 || offset + len > (long long)bits.size()) {
    throw ConfigError("neuron_discrepancy: window out of range");
  }
  long long ones = 0;
  for (long long i = offset; i < offset + len; ++i) ones += bits[std::size_t(i)];
  return std::abs(double(ones) - double(len) * pi);
}

/// First n symbols of the Rabbit sequence, the fixed point of 1 -> 10, 0 -> 1
/// started from "1". Matches the golden-mean neuron run from w0 = 2 pi - 1.
inline std::vector<std::uint8_t> rabbit_sequence(long long n) {
  if (n < 0) throw ConfigError("rabbit_sequence: n must be >= 0");
  std::vector<std::uint8_t> s{1};
  while ((long long)s.size() < n) {
    std::vector<std::uint8_t> next;
    next.reserve(s.size() * 2);
    for (std::uint8_t b : s) {
      if (b == 1) {
        next.push_back(1);
        next.push_back(0);
      } else {
        next.push_back(1);
      }
    }
    s = std::move(next);
  }
  s.resize(std::size_t(n));
  return s;
}

/// Full-distribution herding on a discrete variable with 1-of-D features:
/// s_t = argmax_d w_d (lowest index on ties), w_t = w_{t-1} + pi - e_{s_t}.
/// Bit for bit the same run as the general engine on the same features.
struct MultinomialConfig {
  Vec pi;
  Vec w0;  // empty means start at pi

  void validate() const {
    if (pi.empty()) throw ConfigError("MultinomialConfig: pi must be non-empty");
    double sum = 0.0;
    for (double p : pi) {
      if (!(p >= 0.0)) throw ConfigError("MultinomialConfig: pi entries must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("MultinomialConfig: pi must sum to 1");
    if (!w0.empty() && w0.size() != pi.size()) {
      throw ConfigError("MultinomialConfig: w0 dimension mismatch");
    }
  }
};

struct MultinomialTrace {
  std::vector<int> states;
  Vec w_final;
  double max_weight_norm_inf = 0.0;
};

inline MultinomialTrace multinomial_run(const MultinomialConfig& cfg, long long steps) {
  cfg.validate();
  if (steps < 0) throw ConfigError("multinomial_run: steps must be >= 0");
  const int d = int(cfg.pi.size());
  MultinomialTrace tr;
  tr.states.reserve(std::size_t(steps));
  Vec w = cfg.w0.empty() ? cfg.pi : cfg.w0;
  tr.max_weight_norm_inf = norm_inf(w);
  for (long long t = 0; t < steps; ++t) {
    int s = 0;
    for (int k = 1; k < d; ++k) {
      if (w[k] > w[s]) s = k;
    }
    for (int k = 0; k < d; ++k) w[k] += cfg.pi[k] - (k == s ? 1.0 : 0.0);
    if (!all_finite(w)) throw NonFiniteWeightError("multinomial_run: weight became non-finite");
    tr.states.push_back(s);
    tr.max_weight_norm_inf = std::max(tr.max_weight_norm_inf, norm_inf(w));
  }
  tr.w_final = std::move(w);
  return tr;
}

}  // namespace herd::scalar
