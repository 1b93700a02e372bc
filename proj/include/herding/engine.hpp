#pragma once

#include <limits>
#include <optional>
#include <utility>

#include "herding/maximizer.hpp"

namespace herd {

struct HerdOptions {
  double learning_rate = 1.0;        // eta; scaling it together with w0 leaves samples unchanged
  std::optional<Vec> per_dim_rates;  // advanced knob, default uniform
  int snapshot_stride = 100;
  std::optional<bool> verify_pct;    // default: on unless the maximizer is exact
  bool strict_pct = false;           // violations throw instead of being counted
  bool record_samples = true;
  bool record_norms = true;
};

/// Everything a run leaves behind. Norm curves are per step (entry 0 is w0);
/// snapshots carry (step, w) at the stride plus step 0 and the final step.
struct HerdingTrace {
  std::vector<long long> sample_indices;   // enumerable spaces
  std::vector<Assignment> sample_values;   // non-enumerable spaces
  Vec running_feature_sum;                 // sum of phi(s_t), fixed accumulation order
  std::vector<std::pair<long long, Vec>> weight_snapshots;
  std::vector<long long> pct_violations;   // step indices, 1-based
  long long pct_checked = 0;
  std::vector<double> weight_norm2;
  std::vector<double> weight_norm_inf;
  double max_weight_norm2 = 0.0;
  double max_weight_norm_inf = 0.0;
  long long steps = 0;
  Vec w0;
  Vec w_final;

  // max over t <= prefix of ||w_t||_inf; prefix counts update steps.
  double prefix_max_norm_inf(long long prefix) const {
    double m = 0.0;
    for (long long t = 0; t <= prefix && t < (long long)weight_norm_inf.size(); ++t) {
      m = std::max(m, weight_norm_inf[t]);
    }
    return m;
  }
};

struct StepResult {
  State state;
  Vec features;
  double score = 0.0;
  bool pct_violation = false;
};

namespace detail {

inline bool resolve_verify(const HerdOptions& opt, const Maximizer& maxer) {
  if (opt.verify_pct.has_value()) return *opt.verify_pct;
  return !maxer.is_exact();
}

inline void apply_update(Vec& w, const Vec& target, const Vec& feats, const HerdOptions& opt) {
  if (opt.per_dim_rates) {
    const Vec& r = *opt.per_dim_rates;
    if (r.size() != w.size()) throw ConfigError("per_dim_rates: dimension mismatch");
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += r[k] * (target[k] - feats[k]);
  } else {
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] += opt.learning_rate * (target[k] - feats[k]);
    }
  }
}

}  // namespace detail

/// One herding step: pick s = argmax w.phi, then w += eta (phi_bar - phi(s)).
/// The cycling condition w.(phi_bar - phi(s)) <= 0 is checked when enabled;
/// violations are reported, and fatal under strict_pct.
inline StepResult herd_step(Vec& w, const MomentVector& moments, Maximizer& maxer,
                            const HerdOptions& opt = {}) {
  if (w.size() != moments.values.size()) throw ConfigError("herd_step: dimension mismatch");
  Maximizer::Result r = maxer.maximize(w);
  StepResult out;
  if (detail::resolve_verify(opt, maxer)) {
    double margin = dot(w, moments.values) - r.score;  // w.v with v = phi_bar - phi(s)
    Vec v(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) v[k] = moments.values[k] - r.features[k];
    if (margin > pct_tolerance(norm2(w), norm2(v))) {
      out.pct_violation = true;
      if (opt.strict_pct) throw PctViolationError("herd_step: w.v > 0 under strict verification");
    }
  }
  detail::apply_update(w, moments.values, r.features, opt);
  if (!all_finite(w)) throw NonFiniteWeightError("herd_step: weight became non-finite");
  out.state = std::move(r.state);
  out.features = std::move(r.features);
  out.score = r.score;
  return out;
}

inline HerdingTrace herd_run(Vec w0, const MomentVector& moments, Maximizer& maxer,
                             long long steps, const HerdOptions& opt = {}) {
  if (steps < 0) throw ConfigError("herd_run: steps must be >= 0");
  if (opt.snapshot_stride < 1) throw ConfigError("herd_run: snapshot_stride must be >= 1");
  if (!all_finite(w0)) throw NonFiniteWeightError("herd_run: w0 not finite");
  const bool enumerable = maxer.feature_map().space.enumerable();
  HerdingTrace tr;
  tr.w0 = w0;
  tr.steps = steps;
  tr.running_feature_sum.assign(w0.size(), 0.0);
  if (opt.record_samples) {
    if (enumerable) tr.sample_indices.reserve(std::size_t(steps));
    else tr.sample_values.reserve(std::size_t(steps));
  }

  Vec w = std::move(w0);
  auto note_norms = [&](const Vec& cur) {
    double n2 = norm2(cur), ni = norm_inf(cur);
    tr.max_weight_norm2 = std::max(tr.max_weight_norm2, n2);
    tr.max_weight_norm_inf = std::max(tr.max_weight_norm_inf, ni);
    if (opt.record_norms) {
      tr.weight_norm2.push_back(n2);
      tr.weight_norm_inf.push_back(ni);
    }
  };
  note_norms(w);
  tr.weight_snapshots.emplace_back(0, w);

  for (long long t = 1; t <= steps; ++t) {
    StepResult sr = herd_step(w, moments, maxer, opt);
    if (detail::resolve_verify(opt, maxer)) {
      ++tr.pct_checked;
      if (sr.pct_violation) tr.pct_violations.push_back(t);
    }
    for (std::size_t k = 0; k < sr.features.size(); ++k) {
      tr.running_feature_sum[k] += sr.features[k];
    }
    if (opt.record_samples) {
      if (enumerable) tr.sample_indices.push_back(sr.state.index);
      else tr.sample_values.push_back(std::move(sr.state.values));
    }
    note_norms(w);
    if (t % opt.snapshot_stride == 0 || t == steps) {
      tr.weight_snapshots.emplace_back(t, w);
    }
  }
  tr.w_final = std::move(w);
  return tr;
}

/// The tipi function: l0(w) = w.phi_bar - max_x w.phi(x). Piecewise linear,
/// concave, nonpositive when phi_bar is in the feature hull, and positively
/// homogeneous of degree one.
inline double tipi_value(const Vec& w, const MomentVector& moments, const FeatureTable& tab) {
  if (int(w.size()) != tab.dim()) throw ConfigError("tipi_value: dimension mismatch");
  double best = dot(w, tab.row(0));
  for (long long r = 1; r < tab.rows(); ++r) best = std::max(best, dot(w, tab.row(r)));
  return dot(w, moments.values) - best;
}

/// E_{P(x; w/T)}[phi(x)] by exact enumeration, log-sum-exp stabilized.
inline Vec expected_features_at_temperature(const Vec& w, const FeatureTable& tab, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("expected_features_at_temperature: T must be > 0");
  if (int(w.size()) != tab.dim()) throw ConfigError("expected_features_at_temperature: dimension mismatch");
  const long long n = tab.rows();
  std::vector<double> logit((std::size_t)n);
  double m = -std::numeric_limits<double>::infinity();
  for (long long r = 0; r < n; ++r) {
    logit[std::size_t(r)] = dot(w, tab.row(r)) / temperature;
    m = std::max(m, logit[std::size_t(r)]);
  }
  double z = 0.0;
  for (long long r = 0; r < n; ++r) {
    logit[std::size_t(r)] = std::exp(logit[std::size_t(r)] - m);
    z += logit[std::size_t(r)];
  }
  Vec out(tab.dim(), 0.0);
  for (long long r = 0; r < n; ++r) {
    double p = logit[std::size_t(r)] / z;
    const double* row = tab.row(r);
    for (int k = 0; k < tab.dim(); ++k) out[k] += p * row[k];
  }
  return out;
}

/// Finite-temperature relative of the herding step: gradient ascent on the
/// tempered dual, w' = w + phi_bar - E_{P(x; w/T)}[phi]. Recovers herd_step as
/// T -> 0 and converges to the moment-matching fixed point for large T.
inline Vec temperature_map_step(const Vec& w, const MomentVector& moments, const FeatureTable& tab,
                                double temperature) {
  Vec e = expected_features_at_temperature(w, tab, temperature);
  Vec out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) out[k] = w[k] + moments.values[k] - e[k];
  return out;
}

/// Smallest p <= max_period with ||w_{t+p} - w_t||_inf < tol for `confirm`
/// consecutive t inside the window; 0 when none qualifies.
inline int detect_period_window(const std::vector<Vec>& window, int max_period = 1024,
                                int confirm = 100, double tol = 1e-8) {
  if ((long long)window.size() < (long long)max_period + confirm + 1) {
    throw ConfigError("detect_period_window: window too short for requested scan");
  }
  for (int p = 1; p <= max_period; ++p) {
    bool ok = true;
    for (int t = 0; t < confirm && ok; ++t) {
      const Vec& a = window[std::size_t(t)];
      const Vec& b = window[std::size_t(t + p)];
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a[k] - b[k]) >= tol) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return p;
  }
  return 0;
}

/// Runs the temperature map past a burn-in, then scans the tail for a period.
inline int detect_period_temperature_map(Vec w0, const MomentVector& moments, const FeatureTable& tab,
                                         double temperature, long long burn_in,
                                         int max_period = 1024, int confirm = 100, double tol = 1e-8) {
  Vec w = std::move(w0);
  for (long long t = 0; t < burn_in; ++t) w = temperature_map_step(w, moments, tab, temperature);
  std::vector<Vec> window;
  window.reserve(std::size_t(max_period + confirm + 1));
  for (int t = 0; t < max_period + confirm + 1; ++t) {
    window.push_back(w);
    w = temperature_map_step(w, moments, tab, temperature);
  }
  return detect_period_window(window, max_period, confirm, tol);
}

}  // namespace herd
