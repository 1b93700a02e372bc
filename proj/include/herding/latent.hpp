#pragma once

#include <utility>

#include "herding/engine.hpp"

namespace herd::latent {

/// Herding with hidden variables. Joint states are (visible, hidden) with the
/// visible block in the low digits; `joint` is the feature map over that
/// concatenation. Hidden imputations persist across steps per data case and
/// warm-start the clamped maximizations.
struct PomrfProblem {
  StateSpace visible_space;
  StateSpace hidden_space;
  FeatureMap joint;
  std::vector<Assignment> data;         // visible assignments, one per case
  std::vector<Assignment> imputations;  // persistent hidden state per case
  Assignment prev_joint;                // warm start for the full-variant joint search

  // lazy caches
  std::vector<FeatureTable> clamped_tables;  // per case, rows indexed by hidden state
  std::shared_ptr<FeatureTable> joint_table;

  int cases() const { return (int)data.size(); }

  Assignment joined(int case_idx, const Assignment& hidden) const {
    Assignment a = data[std::size_t(case_idx)];
    a.insert(a.end(), hidden.begin(), hidden.end());
    return a;
  }
};

inline PomrfProblem make_pomrf(StateSpace visible, StateSpace hidden, FeatureMap joint,
                               std::vector<Assignment> data) {
  if (!(joint.space == visible.joined(hidden))) {
    throw ConfigError("make_pomrf: joint feature map space must be visible + hidden");
  }
  if (data.empty()) throw ConfigError("make_pomrf: no data cases");
  for (const auto& x : data) visible.index_of(x);  // validates arity and range
  PomrfProblem p;
  p.visible_space = std::move(visible);
  p.hidden_space = std::move(hidden);
  p.joint = std::move(joint);
  p.data = std::move(data);
  p.imputations.assign(p.data.size(), Assignment(std::size_t(p.hidden_space.num_vars()), 0));
  p.prev_joint.assign(std::size_t(p.joint.space.num_vars()), 0);
  return p;
}

enum class PomrfVariant {
  Full,      // joint maximization over everything, warm-started from the last sample
  Tractable  // joint maximization seeded at the lowest-energy data case
};

struct PomrfOptions {
  PomrfVariant variant = PomrfVariant::Full;
  bool exact_clamped = true;  // enumerate the hidden block per case
  bool exact_joint = true;    // enumerate the joint space
  int max_sweeps = 100;
  int minibatch = 0;          // 0 means full batch; batches cycle in fixed order
  bool verify_pct = true;
  bool strict_pct = false;
  int snapshot_stride = 100;
};

/// Negative-phase free energies of the data cases under the current
/// imputations: energy_i = -w.phi(x_i, z_i). argmin breaks ties to the lowest
/// case index.
struct EnergyRecord {
  std::vector<double> energies;
  int argmin_case = 0;
};

struct PomrfStepInfo {
  State joint_sample;
  Vec joint_features;
  Vec positive_mean;  // batch average of phi(x_i, z_i*)
  EnergyRecord energies;
  bool pct_violation = false;
};

struct PomrfTrace {
  std::vector<long long> joint_samples;               // indices when enumerable
  std::vector<Assignment> joint_sample_values;        // otherwise
  std::vector<std::vector<long long>> imputation_log; // per step, hidden index per case
  Vec positive_sum;  // running sum of batch-averaged clamped features
  Vec negative_sum;  // running sum of phi(s*)
  std::vector<double> weight_norm_inf;  // entry 0 is w0
  std::vector<std::pair<long long, Vec>> weight_snapshots;
  long long pct_checked = 0;
  std::vector<long long> pct_violations;
  Vec w0, w_final;
  long long steps = 0;
};

namespace detail {

inline void ensure_caches(PomrfProblem& p, const PomrfOptions& opt) {
  if (opt.exact_clamped && p.clamped_tables.empty()) {
    if (!p.hidden_space.enumerable()) {
      throw ConfigError("pomrf: hidden space not enumerable, disable exact_clamped");
    }
    p.clamped_tables.reserve(p.data.size());
    for (int i = 0; i < p.cases(); ++i) {
      FeatureMap fm;
      fm.space = p.hidden_space;
      fm.dim = p.joint.dim;
      const PomrfProblem* pp = &p;
      fm.eval = [pp, i](const Assignment& h) { return pp->joint.eval(pp->joined(i, h)); };
      p.clamped_tables.emplace_back(fm);
    }
  }
  if (opt.exact_joint && !p.joint_table) {
    if (!p.joint.space.enumerable()) {
      throw ConfigError("pomrf: joint space not enumerable, disable exact_joint");
    }
    p.joint_table = std::make_shared<FeatureTable>(p.joint);
  }
}

// Coordinate ascent over only the hidden block, visible side clamped to case i.
inline std::pair<Assignment, double> ascend_hidden(const PomrfProblem& p, const Vec& w, int case_i,
                                                   Assignment z, int max_sweeps) {
  double score = dot(w, p.joint.eval(p.joined(case_i, z)));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (int v = 0; v < p.hidden_space.num_vars(); ++v) {
      const int prev = z[std::size_t(v)];
      int best_val = 0;
      double best_score = 0.0;
      for (int val = 0; val < p.hidden_space.cards[std::size_t(v)]; ++val) {
        z[std::size_t(v)] = val;
        double s = dot(w, p.joint.eval(p.joined(case_i, z)));
        if (val == 0 || s > best_score) {
          best_score = s;
          best_val = val;
        }
      }
      z[std::size_t(v)] = best_val;
      score = best_score;
      if (best_val != prev) changed = true;
    }
    if (!changed) break;
  }
  return {std::move(z), score};
}

}  // namespace detail

/// One herding step over the given batch (default: all cases). Clamped
/// maximizations refresh the batch's imputations; the joint maximization and
/// weight update follow. Returns what the step saw so callers can log it.
inline PomrfStepInfo pomrf_step(PomrfProblem& p, Vec& w, const PomrfOptions& opt = {},
                                const std::vector<int>* batch = nullptr) {
  if (int(w.size()) != p.joint.dim) throw ConfigError("pomrf_step: weight dimension mismatch");
  detail::ensure_caches(p, opt);
  std::vector<int> all;
  if (batch == nullptr) {
    all.resize(p.data.size());
    for (int i = 0; i < p.cases(); ++i) all[std::size_t(i)] = i;
    batch = &all;
  }
  if (batch->empty()) throw ConfigError("pomrf_step: empty batch");

  PomrfStepInfo info;
  info.positive_mean.assign(std::size_t(p.joint.dim), 0.0);
  std::vector<double> scores(batch->size());
  for (std::size_t bi = 0; bi < batch->size(); ++bi) {
    const int i = (*batch)[bi];
    double score;
    if (opt.exact_clamped) {
      const FeatureTable& tab = p.clamped_tables[std::size_t(i)];
      long long best = 0;
      score = dot(w, tab.row(0));
      for (long long r = 1; r < tab.rows(); ++r) {
        double s = dot(w, tab.row(r));
        if (s > score) {
          score = s;
          best = r;
        }
      }
      p.imputations[std::size_t(i)] = p.hidden_space.assignment_of(best);
      const double* row = tab.row(best);
      for (int k = 0; k < p.joint.dim; ++k) info.positive_mean[std::size_t(k)] += row[k];
    } else {
      auto [z, sc] = detail::ascend_hidden(p, w, i, p.imputations[std::size_t(i)], opt.max_sweeps);
      p.imputations[std::size_t(i)] = std::move(z);
      score = sc;
      Vec f = p.joint.eval(p.joined(i, p.imputations[std::size_t(i)]));
      for (int k = 0; k < p.joint.dim; ++k) info.positive_mean[std::size_t(k)] += f[std::size_t(k)];
    }
    scores[bi] = score;
  }
  for (double& v : info.positive_mean) v /= double(batch->size());

  info.energies.energies.resize(batch->size());
  int argmin = 0;
  for (std::size_t bi = 0; bi < batch->size(); ++bi) {
    info.energies.energies[bi] = -scores[bi];
    if (info.energies.energies[bi] < info.energies.energies[std::size_t(argmin)]) argmin = int(bi);
  }
  info.energies.argmin_case = (*batch)[std::size_t(argmin)];

  // Joint (negative-phase) maximization.
  if (opt.exact_joint) {
    const FeatureTable& tab = *p.joint_table;
    long long best = 0;
    double best_score = dot(w, tab.row(0));
    for (long long r = 1; r < tab.rows(); ++r) {
      double s = dot(w, tab.row(r));
      if (s > best_score) {
        best_score = s;
        best = r;
      }
    }
    info.joint_sample = make_state(p.joint.space, best);
    info.joint_features = tab.row_vec(best);
  } else {
    Maximizer ca = Maximizer::coordinate_ascent(p.joint, p.prev_joint, opt.max_sweeps);
    Assignment start;
    double start_score = 0.0;
    if (opt.variant == PomrfVariant::Tractable) {
      start = p.joined(info.energies.argmin_case, p.imputations[std::size_t(info.energies.argmin_case)]);
      start_score = scores[std::size_t(argmin)];
    } else {
      start = p.prev_joint;
      start_score = dot(w, p.joint.eval(start));
    }
    Maximizer::Result r = ca.ascend(w, start);
    if (r.score < start_score - pct_tolerance(norm2(w), 1.0)) {
      throw MonotonicityError("pomrf_step: local maximizer decreased the score");
    }
    info.joint_sample = std::move(r.state);
    info.joint_features = std::move(r.features);
  }
  p.prev_joint = info.joint_sample.values;

  if (opt.verify_pct) {
    Vec v(std::size_t(p.joint.dim));
    for (int k = 0; k < p.joint.dim; ++k) {
      v[std::size_t(k)] = info.positive_mean[std::size_t(k)] - info.joint_features[std::size_t(k)];
    }
    if (dot(w, v) > pct_tolerance(norm2(w), norm2(v))) {
      info.pct_violation = true;
      if (opt.strict_pct) throw PctViolationError("pomrf_step: cycling condition violated");
    }
  }

  for (int k = 0; k < p.joint.dim; ++k) {
    w[std::size_t(k)] += info.positive_mean[std::size_t(k)] - info.joint_features[std::size_t(k)];
  }
  if (!all_finite(w)) throw NonFiniteWeightError("pomrf_step: weight became non-finite");
  return info;
}

/// The tractable variant: identical except the joint search may only be local
/// and is seeded at the lowest-energy data case.
inline PomrfStepInfo tractable_pomrf_step(PomrfProblem& p, Vec& w, PomrfOptions opt = {},
                                          const std::vector<int>* batch = nullptr) {
  opt.variant = PomrfVariant::Tractable;
  return pomrf_step(p, w, opt, batch);
}

inline PomrfTrace pomrf_run(PomrfProblem& p, Vec w0, long long steps, const PomrfOptions& opt = {}) {
  if (steps < 0) throw ConfigError("pomrf_run: steps must be >= 0");
  if (opt.snapshot_stride < 1) throw ConfigError("pomrf_run: snapshot_stride must be >= 1");
  if (opt.minibatch < 0 || opt.minibatch > p.cases()) {
    throw ConfigError("pomrf_run: minibatch out of range");
  }
  PomrfTrace tr;
  tr.w0 = w0;
  tr.steps = steps;
  tr.positive_sum.assign(std::size_t(p.joint.dim), 0.0);
  tr.negative_sum.assign(std::size_t(p.joint.dim), 0.0);
  const bool joint_enumerable = p.joint.space.enumerable();
  const bool hidden_enumerable = p.hidden_space.enumerable();

  std::vector<std::vector<int>> batches;
  if (opt.minibatch == 0 || opt.minibatch == p.cases()) {
    batches.emplace_back();
    for (int i = 0; i < p.cases(); ++i) batches.back().push_back(i);
  } else {
    for (int at = 0; at < p.cases(); at += opt.minibatch) {
      batches.emplace_back();
      for (int i = at; i < std::min(at + opt.minibatch, p.cases()); ++i) batches.back().push_back(i);
    }
  }

  Vec w = std::move(w0);
  tr.weight_norm_inf.push_back(norm_inf(w));
  tr.weight_snapshots.emplace_back(0, w);
  for (long long t = 1; t <= steps; ++t) {
    const std::vector<int>& batch = batches[std::size_t((t - 1) % (long long)batches.size())];
    PomrfStepInfo info = pomrf_step(p, w, opt, &batch);
    if (opt.verify_pct) {
      ++tr.pct_checked;
      if (info.pct_violation) tr.pct_violations.push_back(t);
    }
    for (int k = 0; k < p.joint.dim; ++k) {
      tr.positive_sum[std::size_t(k)] += info.positive_mean[std::size_t(k)];
      tr.negative_sum[std::size_t(k)] += info.joint_features[std::size_t(k)];
    }
    if (joint_enumerable) tr.joint_samples.push_back(info.joint_sample.index);
    else tr.joint_sample_values.push_back(info.joint_sample.values);
    if (hidden_enumerable) {
      std::vector<long long> row(p.data.size());
      for (int i = 0; i < p.cases(); ++i) {
        row[std::size_t(i)] = p.hidden_space.index_of(p.imputations[std::size_t(i)]);
      }
      tr.imputation_log.push_back(std::move(row));
    }
    tr.weight_norm_inf.push_back(norm_inf(w));
    if (t % opt.snapshot_stride == 0 || t == steps) tr.weight_snapshots.emplace_back(t, w);
  }
  tr.w_final = std::move(w);
  return tr;
}

/// Marginal entropy of each hidden unit over the joint samples, in bits,
/// averaged across units. High values mean the dynamics kept the hidden layer
/// exploring rather than collapsing.
inline double hidden_marginal_entropy_bits(const PomrfProblem& p, const PomrfTrace& tr) {
  if (tr.joint_samples.empty()) throw ConfigError("hidden_marginal_entropy_bits: no indexed samples");
  const int nh = p.hidden_space.num_vars();
  if (nh == 0) return 0.0;
  const int nv = p.visible_space.num_vars();
  std::vector<std::vector<long long>> counts((std::size_t)nh);
  for (int v = 0; v < nh; ++v) counts[std::size_t(v)].assign(std::size_t(p.hidden_space.cards[std::size_t(v)]), 0);
  for (long long idx : tr.joint_samples) {
    Assignment a = p.joint.space.assignment_of(idx);
    for (int v = 0; v < nh; ++v) ++counts[std::size_t(v)][std::size_t(a[std::size_t(nv + v)])];
  }
  double total = 0.0;
  const double n = double(tr.joint_samples.size());
  for (int v = 0; v < nh; ++v) {
    double h = 0.0;
    for (long long c : counts[std::size_t(v)]) {
      if (c > 0) {
        double pr = double(c) / n;
        h -= pr * std::log2(pr);
      }
    }
    total += h;
  }
  return total / double(nh);
}

}  // namespace herd::latent
