#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <utility>

#include <Eigen/Dense>

#include "herding/engine.hpp"

namespace herd::diag {

struct MomentErrorPoint {
  long long prefix = 0;   // number of samples averaged
  double l2 = 0.0;        // ||phi_bar - mean phi||_2
  double linf = 0.0;      // max_k |phi_bar_k - mean phi_k|
  double bound = 0.0;     // 2 max_{t<=prefix} ||w_t||_inf / prefix
};

/// Moment error at log-spaced prefixes (always including the full run). The
/// bound column is the telescoping bound that must dominate linf whenever the
/// cycling condition held at every step.
inline std::vector<MomentErrorPoint> moment_error(const HerdingTrace& tr, const MomentVector& moments,
                                                  const FeatureTable& tab, int points_per_decade = 8) {
  if (tr.sample_indices.empty()) throw ConfigError("moment_error: trace has no indexed samples");
  if (tr.weight_norm_inf.empty()) throw ConfigError("moment_error: trace has no norm curve");
  if (points_per_decade < 1) throw ConfigError("moment_error: points_per_decade must be >= 1");
  const long long steps = (long long)tr.sample_indices.size();
  std::vector<long long> marks;
  for (long long j = 0;; ++j) {
    long long t = (long long)std::llround(std::pow(10.0, double(j) / points_per_decade));
    if (t >= steps) break;
    if (marks.empty() || t > marks.back()) marks.push_back(t);
  }
  marks.push_back(steps);

  std::vector<MomentErrorPoint> out;
  out.reserve(marks.size());
  Vec sum(std::size_t(tab.dim()), 0.0);
  double max_inf = tr.weight_norm_inf[0];
  std::size_t mark_pos = 0;
  for (long long t = 1; t <= steps; ++t) {
    const double* row = tab.row(tr.sample_indices[std::size_t(t - 1)]);
    for (int k = 0; k < tab.dim(); ++k) sum[k] += row[k];
    max_inf = std::max(max_inf, tr.weight_norm_inf[std::size_t(t)]);
    if (mark_pos < marks.size() && t == marks[mark_pos]) {
      MomentErrorPoint p;
      p.prefix = t;
      double sq = 0.0;
      for (int k = 0; k < tab.dim(); ++k) {
        double d = moments.values[std::size_t(k)] - sum[k] / double(t);
        sq += d * d;
        p.linf = std::max(p.linf, std::abs(d));
      }
      p.l2 = std::sqrt(sq);
      p.bound = 2.0 * max_inf / double(t);
      out.push_back(p);
      ++mark_pos;
    }
  }
  return out;
}

/// Least-squares slope of log10(l2) against log10(prefix) over the points with
/// prefix in [lo, hi]. O(1/T) matching shows up as a slope near -1.
inline double moment_error_slope(const std::vector<MomentErrorPoint>& pts, long long lo, long long hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long long n = 0;
  for (const auto& p : pts) {
    if (p.prefix < lo || p.prefix > hi || p.l2 <= 0.0) continue;
    double x = std::log10(double(p.prefix));
    double y = std::log10(p.l2);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  if (n < 2) throw ConfigError("moment_error_slope: not enough points in range");
  double denom = double(n) * sxx - sx * sx;
  if (denom == 0.0) throw ConfigError("moment_error_slope: degenerate abscissae");
  return (double(n) * sxy - sx * sy) / denom;
}

/// Sample autocorrelation of a discrete sequence, indicator-overlap form
/// normalized so an i.i.d. draw from the empirical marginal gives 0 and lag 0
/// gives exactly 1. A constant sequence has no scale; every entry is then the
/// explicit undefined marker (nullopt), never NaN.
template <class T>
std::vector<std::optional<double>> autocorrelation(const std::vector<T>& seq, int max_lag) {
  const long long n = (long long)seq.size();
  if (max_lag < 0 || max_lag >= n) throw ConfigError("autocorrelation: max_lag out of range");
  std::map<T, long long> counts;
  for (const T& s : seq) ++counts[s];
  double sum_p2 = 0.0;
  for (const auto& [value, c] : counts) {
    (void)value;
    double p = double(c) / double(n);
    sum_p2 += p * p;
  }
  const double denom = 1.0 - sum_p2;
  std::vector<std::optional<double>> out(std::size_t(max_lag) + 1);
  if (denom == 0.0) return out;  // constant sequence, undefined at every lag
  for (int lag = 0; lag <= max_lag; ++lag) {
    long long match = 0;
    for (long long t = 0; t + lag < n; ++t) {
      if (seq[std::size_t(t)] == seq[std::size_t(t + lag)]) ++match;
    }
    double frac = double(match) / double(n - lag);
    out[std::size_t(lag)] = (frac - sum_p2) / denom;
  }
  return out;
}

namespace detail {

// Distinct windows of length len in a 0/1 sequence, exact two-word packing.
inline long long binary_window_count(const std::vector<int>& seq, int len) {
  std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
  std::uint64_t lo = 0, hi = 0;
  const int hi_bits = len > 64 ? len - 64 : 0;
  const std::uint64_t lo_mask = len >= 64 ? ~0ULL : ((1ULL << len) - 1);
  const std::uint64_t hi_mask = hi_bits >= 64 ? ~0ULL : ((1ULL << hi_bits) - 1);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    std::uint64_t carry = lo >> 63;
    lo = ((lo << 1) | std::uint64_t(seq[t])) & lo_mask;
    hi = ((hi << 1) | carry) & hi_mask;
    if ((long long)t >= len - 1) seen.emplace(hi, lo);
  }
  return (long long)seen.size();
}

inline long long general_window_count(const std::vector<int>& seq, int len) {
  std::set<std::vector<int>> seen;
  for (std::size_t t = 0; t + len <= seq.size(); ++t) {
    seen.emplace(seq.begin() + long(t), seq.begin() + long(t) + len);
  }
  return (long long)seen.size();
}

}  // namespace detail

/// M(L) for L = 1..max_len: the number of distinct length-L windows. Counted
/// with a sorted set per length; exact bit packing covers binary sequences up
/// to L = 128, everything else stores the windows directly.
inline std::vector<long long> subsequence_complexity(const std::vector<int>& seq, int max_len) {
  if (max_len < 1 || max_len > (long long)seq.size()) {
    throw ConfigError("subsequence_complexity: max_len out of range");
  }
  bool binary = true;
  for (int s : seq) {
    if (s < 0) throw ConfigError("subsequence_complexity: negative symbol");
    if (s > 1) binary = false;
  }
  std::vector<long long> out;
  out.reserve(std::size_t(max_len));
  for (int len = 1; len <= max_len; ++len) {
    out.push_back(binary && len <= 128 ? detail::binary_window_count(seq, len)
                                       : detail::general_window_count(seq, len));
  }
  return out;
}

/// Least-squares exponent of M(L) ~ c L^k over L in [lo, hi].
inline double complexity_growth_exponent(const std::vector<long long>& m, int lo, int hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long long n = 0;
  for (int len = lo; len <= hi && len <= (int)m.size(); ++len) {
    double x = std::log10(double(len));
    double y = std::log10(double(m[std::size_t(len - 1)]));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  if (n < 2) throw ConfigError("complexity_growth_exponent: not enough points");
  double denom = double(n) * sxx - sx * sx;
  if (denom == 0.0) throw ConfigError("complexity_growth_exponent: degenerate abscissae");
  return (double(n) * sxy - sx * sy) / denom;
}

/// Standalone cycling-condition monitor for callers driving their own updates.
struct PctStats {
  long long checked = 0;
  long long violations = 0;
  double worst_margin = 0.0;  // most positive w.v seen
  std::vector<long long> violation_steps;

  // Returns true when this step violated w.v <= 0 beyond tolerance.
  bool check(long long step, const Vec& w, const Vec& v) {
    ++checked;
    double margin = dot(w, v);
    worst_margin = std::max(worst_margin, margin);
    if (margin > pct_tolerance(norm2(w), norm2(v))) {
      violations++;
      violation_steps.push_back(step);
      return true;
    }
    return false;
  }
};

struct TorusCheck {
  double max_deviation = 0.0;  // distance to the nearest lattice translate, inf norm
  Vec rotation;                // step increment in lattice coordinates
};

/// For models with D = K + 1 states and independent feature differences, the
/// weight trajectory projects to a constant rotation on the torus R^K modulo
/// the lattice spanned by phi(x_d) - phi(x_0). Verifies that the snapshot at
/// step t sits at w_0 + t * rotation up to a lattice translate; the basis is
/// factorized once and reused across snapshots.
inline TorusCheck torus_rotation_check(const std::vector<std::pair<long long, Vec>>& snapshots,
                                       const MomentVector& moments, const FeatureTable& tab) {
  const int k = tab.dim();
  if (tab.rows() != k + 1) throw ConfigError("torus_rotation_check: needs D = K + 1 states");
  if (snapshots.empty() || snapshots.front().first != 0) {
    throw ConfigError("torus_rotation_check: snapshots must start at step 0");
  }
  Eigen::MatrixXd basis(k, k);
  for (int d = 1; d <= k; ++d) {
    for (int i = 0; i < k; ++i) basis(i, d - 1) = tab.row(d)[i] - tab.row(0)[i];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
  if (!lu.isInvertible()) throw ConfigError("torus_rotation_check: lattice basis is singular");

  Eigen::VectorXd shift(k);
  for (int i = 0; i < k; ++i) shift(i) = moments.values[std::size_t(i)] - tab.row(0)[i];
  Eigen::VectorXd rot = lu.solve(shift);

  const Vec& w0 = snapshots.front().second;
  TorusCheck out;
  out.rotation.assign(rot.data(), rot.data() + k);
  Eigen::VectorXd diff(k);
  for (const auto& [step, w] : snapshots) {
    for (int i = 0; i < k; ++i) diff(i) = w[std::size_t(i)] - w0[std::size_t(i)];
    Eigen::VectorXd c = lu.solve(diff) - double(step) * rot;
    for (int i = 0; i < k; ++i) {
      double dev = std::abs(c(i) - std::round(c(i)));
      out.max_deviation = std::max(out.max_deviation, dev);
    }
  }
  return out;
}

/// Residual of w_t - w_0 against span{phi(x_d) - phi(x_0)}; the trajectory
/// never leaves that affine subspace.
inline double subspace_residual(const std::vector<std::pair<long long, Vec>>& snapshots,
                                const FeatureTable& tab) {
  const int k = tab.dim();
  if (snapshots.empty()) throw ConfigError("subspace_residual: no snapshots");
  const long long d_states = tab.rows();
  Eigen::MatrixXd basis(k, d_states - 1);
  for (long long d = 1; d < d_states; ++d) {
    for (int i = 0; i < k; ++i) basis(i, d - 1) = tab.row(d)[i] - tab.row(0)[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  const long long rank = qr.rank();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, rank);

  const Vec& w0 = snapshots.front().second;
  double worst = 0.0;
  Eigen::VectorXd u(k);
  for (const auto& [step, w] : snapshots) {
    (void)step;
    for (int i = 0; i < k; ++i) u(i) = w[std::size_t(i)] - w0[std::size_t(i)];
    Eigen::VectorXd r = u - q * (q.transpose() * u);
    worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

struct AttractorRecord {
  std::vector<Vec> points;        // cluster representatives, discovery order
  std::vector<long long> counts;  // visits per representative
};

/// Clusters post-burn-in snapshots by first fit within tol (inf norm). A
/// period-p orbit shows up as exactly p representatives.
inline AttractorRecord attractor_record(const std::vector<std::pair<long long, Vec>>& snapshots,
                                        long long burn_in, double tol = 1e-8) {
  AttractorRecord rec;
  for (const auto& [step, w] : snapshots) {
    if (step < burn_in) continue;
    bool placed = false;
    for (std::size_t c = 0; c < rec.points.size() && !placed; ++c) {
      double d = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        d = std::max(d, std::abs(w[i] - rec.points[c][i]));
      }
      if (d <= tol) {
        ++rec.counts[c];
        placed = true;
      }
    }
    if (!placed) {
      rec.points.push_back(w);
      rec.counts.push_back(1);
    }
  }
  return rec;
}

/// Aggregate emitted by the diagnose path; optional pieces stay empty when the
/// inputs for them were not supplied.
struct DiagReport {
  std::vector<MomentErrorPoint> moment_error;
  std::optional<double> moment_error_slope;
  std::vector<std::optional<double>> autocorrelation;
  std::vector<long long> complexity;
  long long pct_checked = 0;
  long long pct_violations = 0;
  double max_weight_norm2 = 0.0;
  double max_weight_norm_inf = 0.0;
  int period = 0;  // 0 = none detected at the scanned horizon
};

}  // namespace herd::diag
