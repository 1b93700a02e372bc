#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <utility>

#include "herding/common.hpp"
#include "herding/rng.hpp"

namespace herd::cond {

/// Classification data. Labels are class indices; on the wire they are 1-of-K
/// sign vectors (+1 at the class, -1 elsewhere), and the scalar +-1 view used
/// by binary herders maps index 1 to +1 and index 0 to -1.
struct LabeledDataset {
  std::vector<Vec> inputs;
  std::vector<int> labels;
  int num_classes = 0;

  int cases() const { return (int)inputs.size(); }
  int input_dim() const { return inputs.empty() ? 0 : (int)inputs.front().size(); }

  void validate() const {
    if (inputs.size() != labels.size()) throw ConfigError("LabeledDataset: size mismatch");
    if (num_classes < 2) throw ConfigError("LabeledDataset: needs at least two classes");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if ((int)inputs[i].size() != input_dim()) throw ConfigError("LabeledDataset: ragged inputs");
      if (!all_finite(inputs[i])) throw ConfigError("LabeledDataset: non-finite input");
      if (labels[i] < 0 || labels[i] >= num_classes) throw ConfigError("LabeledDataset: label out of range");
    }
  }
};

/// Appends the normalization feature phi0(x) = sqrt(R^2 - ||x||^2) with R the
/// maximum input norm of this dataset, making every augmented input the same
/// length. Returns R for augmenting held-out data against the training radius.
inline double augment_normalization_feature(LabeledDataset& ds) {
  double r_sq = 0.0;
  for (const Vec& x : ds.inputs) r_sq = std::max(r_sq, dot(x, x));
  for (Vec& x : ds.inputs) x.push_back(std::sqrt(std::max(0.0, r_sq - dot(x, x))));
  return std::sqrt(r_sq);
}

/// Same, against a fixed radius; inputs longer than it get phi0 = 0.
inline void augment_normalization_feature(LabeledDataset& ds, double r_max) {
  for (Vec& x : ds.inputs) {
    x.push_back(std::sqrt(std::max(0.0, r_max * r_max - dot(x, x))));
  }
}

/// Two interleaved half-circle clusters in the plane, the classic benchmark
/// for classifiers that need a curved boundary. Not linearly separable for
/// small noise, which is the point: a plain perceptron caps out well above
/// the error a hidden-unit model reaches.
inline LabeledDataset two_moons(int per_class, double noise, std::uint64_t seed) {
  if (per_class < 1) throw ConfigError("two_moons: per_class must be >= 1");
  Rng rng(seed);
  LabeledDataset ds;
  ds.num_classes = 2;
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < per_class; ++i) {
    double t = pi * rng.uniform();
    ds.inputs.push_back({std::cos(t) + noise * rng.normal(), std::sin(t) + noise * rng.normal()});
    ds.labels.push_back(0);
  }
  for (int i = 0; i < per_class; ++i) {
    double t = pi * rng.uniform();
    ds.inputs.push_back({1.0 - std::cos(t) + noise * rng.normal(),
                         0.5 - std::sin(t) + noise * rng.normal()});
    ds.labels.push_back(1);
  }
  return ds;
}

enum class CondProcedure {
  Joint,     // one model, label block shared, labels maximized over 1-of-K configurations
  OneVsAll,  // independent binary +-1 herders, one per class
  Perceptron // no hidden units, scalar label, features x * y
};

struct CondConfig {
  CondProcedure procedure = CondProcedure::Joint;
  int hidden = 0;
  long long max_steps = 10000;
  int minibatch = 1;
  long long burn_in = 1000;  // votes cast before this step are discarded
  std::uint64_t seed = 1;
  // Initial parameters are N(0, sigma_T) per tensor; with per_tensor_scaling
  // both sigma_T and the rate eta_T are the knobs below divided by the
  // tensor's element count, keeping updates on the scale of the init.
  double sigma = 1.0;
  double eta = 1.0;
  bool per_tensor_scaling = true;
  bool entropy_schedule = false;
  double lambda0 = 1.0;
  long long lambda_halve_every = 500;
  bool verify_pct = true;
  bool strict_pct = false;
};

// lambda after a number of completed updates: halves every halve_every.
inline double entropy_lambda(double lambda0, long long updates_done, long long halve_every) {
  if (halve_every < 1) throw ConfigError("entropy_lambda: halve_every must be >= 1");
  return lambda0 * std::pow(0.5, double(updates_done / halve_every));
}

/// The hidden-bias update with the exploration term: at lambda = 1 the data
/// mean of the hidden units is ignored entirely (pure entropy encouragement),
/// at lambda = 0 this is the ordinary herding update for theta.
inline void entropy_bias_update(Vec& theta, const Vec& pos_z_mean, const Vec& neg_z_mean,
                                double lambda, double eta) {
  if (theta.size() != pos_z_mean.size() || theta.size() != neg_z_mean.size()) {
    throw ConfigError("entropy_bias_update: dimension mismatch");
  }
  for (std::size_t k = 0; k < theta.size(); ++k) {
    theta[k] += eta * ((1.0 - lambda) * pos_z_mean[k] - neg_z_mean[k]);
  }
}

struct VoteAccumulator {
  std::vector<std::vector<long long>> counts;  // case x label

  void init(int cases, int labels) {
    counts.assign(std::size_t(cases), std::vector<long long>(std::size_t(labels), 0));
  }
  void add(int case_idx, int label) { ++counts[std::size_t(case_idx)][std::size_t(label)]; }

  // Lowest label index wins ties.
  std::vector<int> winners() const {
    std::vector<int> out(counts.size(), 0);
    for (std::size_t j = 0; j < counts.size(); ++j) {
      for (std::size_t c = 1; c < counts[j].size(); ++c) {
        if (counts[j][c] > counts[j][std::size_t(out[j])]) out[j] = int(c);
      }
    }
    return out;
  }
};

namespace detail {

/// Label-conditioned binary-hidden model with weights kept flat in the order
/// [input x hidden | label x hidden | hidden | label]. Hidden maximization is
/// closed-form (the energy is linear in each z_k); a zero activation resolves
/// to z_k = -1, the lower state. Label ties resolve to the lowest index, and
/// for scalar labels -1 precedes +1.
class DrbmHerder {
 public:
  // classes == 0 selects the scalar +-1 label parameterization.
  DrbmHerder(int input_dim, int classes, const CondConfig& cfg, Rng& rng)
      : input_dim_(input_dim), hidden_(cfg.hidden), classes_(classes) {
    const int lr = label_rows();
    const int ld = label_dim();
    sizes_ = {input_dim_ * hidden_, lr * hidden_, hidden_, ld};
    offs_ = {0, sizes_[0], sizes_[0] + sizes_[1], sizes_[0] + sizes_[1] + sizes_[2]};
    w_.assign(std::size_t(flat_dim()), 0.0);
    rates_.assign(std::size_t(flat_dim()), cfg.eta);
    for (int t = 0; t < 4; ++t) {
      if (sizes_[std::size_t(t)] == 0) continue;
      double scale = cfg.per_tensor_scaling ? 1.0 / double(sizes_[std::size_t(t)]) : 1.0;
      for (int d = offs_[std::size_t(t)]; d < offs_[std::size_t(t)] + sizes_[std::size_t(t)]; ++d) {
        w_[std::size_t(d)] = rng.normal() * (cfg.sigma * scale);
        rates_[std::size_t(d)] = cfg.eta * scale;
      }
    }
  }

  int label_rows() const { return classes_ == 0 ? 1 : classes_; }
  int label_dim() const { return classes_ == 0 ? 1 : classes_; }
  int flat_dim() const {
    return input_dim_ * hidden_ + label_rows() * hidden_ + hidden_ + label_dim();
  }
  int num_label_options() const { return classes_ == 0 ? 2 : classes_; }

  const Vec& weights() const { return w_; }
  Vec& weights() { return w_; }
  const Vec& rates() const { return rates_; }

  // option: class index for 1-of-K, or 0 -> y=-1, 1 -> y=+1 for scalar.
  double label_sign(int option, int row) const {
    if (classes_ == 0) return option == 1 ? 1.0 : -1.0;
    return row == option ? 1.0 : -1.0;
  }

  void activations(const Vec& x, int option, Vec& a) const {
    a.assign(std::size_t(hidden_), 0.0);
    for (int k = 0; k < hidden_; ++k) {
      double s = 0.0;
      for (int j = 0; j < input_dim_; ++j) s += x[std::size_t(j)] * w_at(0, j * hidden_ + k);
      for (int c = 0; c < label_rows(); ++c) s += label_sign(option, c) * w_at(1, c * hidden_ + k);
      s += w_at(2, k);
      a[std::size_t(k)] = s;
    }
  }

  double label_bias(int option) const {
    double s = 0.0;
    for (int c = 0; c < label_dim(); ++c) s += label_sign(option, c) * w_at(3, c);
    return s;
  }

  // score of (x, option) with the hidden block at its conditional optimum
  double best_score(const Vec& x, int option, Vec& a, std::vector<double>& z) const {
    activations(x, option, a);
    z.resize(std::size_t(hidden_));
    double s = 0.0;
    for (int k = 0; k < hidden_; ++k) {
      z[std::size_t(k)] = a[std::size_t(k)] > 0.0 ? 1.0 : -1.0;
      s += a[std::size_t(k)] * z[std::size_t(k)];
    }
    return s + label_bias(option);
  }

  int best_label(const Vec& x, Vec& a, std::vector<double>& z_out) const {
    int best = 0;
    double best_score_v = best_score(x, 0, a, z_out);
    Vec a2;
    std::vector<double> z2;
    for (int opt = 1; opt < num_label_options(); ++opt) {
      double s = best_score(x, opt, a2, z2);
      if (s > best_score_v) {
        best_score_v = s;
        best = opt;
        z_out = z2;
      }
    }
    return best;
  }

  int predict(const Vec& x) const {
    Vec a;
    std::vector<double> z;
    return best_label(x, a, z);
  }

  // flat feature vector of (x, label option, z)
  void features(const Vec& x, int option, const std::vector<double>& z, Vec& f) const {
    f.assign(std::size_t(flat_dim()), 0.0);
    for (int j = 0; j < input_dim_; ++j) {
      for (int k = 0; k < hidden_; ++k) {
        f[std::size_t(offs_[0] + j * hidden_ + k)] = x[std::size_t(j)] * z[std::size_t(k)];
      }
    }
    for (int c = 0; c < label_rows(); ++c) {
      for (int k = 0; k < hidden_; ++k) {
        f[std::size_t(offs_[1] + c * hidden_ + k)] = label_sign(option, c) * z[std::size_t(k)];
      }
    }
    for (int k = 0; k < hidden_; ++k) f[std::size_t(offs_[2] + k)] = z[std::size_t(k)];
    for (int c = 0; c < label_dim(); ++c) f[std::size_t(offs_[3] + c)] = label_sign(option, c);
  }

  int theta_offset() const { return offs_[2]; }
  int hidden_units() const { return hidden_; }

 private:
  double w_at(int tensor, int idx) const { return w_[std::size_t(offs_[std::size_t(tensor)] + idx)]; }

  int input_dim_, hidden_, classes_;
  std::array<int, 4> sizes_{};
  std::array<int, 4> offs_{};
  Vec w_;
  Vec rates_;
};

}  // namespace detail

struct CondStepInfo {
  Vec positive_mean;  // flat batch average, data phase
  Vec negative_mean;  // flat batch average, free phase
  int batch_errors = 0;
  bool pct_violation = false;
};

struct CondRunResult {
  long long steps_run = 0;
  bool converged = false;  // hit the zero-training-error stop
  VoteAccumulator votes;
  long long vote_steps = 0;
  std::vector<int> predictions;  // class indices
  double test_error = 0.0;
  Vec positive_sum, negative_sum;  // running sums of per-step batch means (joint and perceptron)
  std::vector<double> weight_norm_inf;  // per step, entry 0 is the init
  long long pct_checked = 0;
  std::vector<long long> pct_violations;
  Vec w0, w_final;
  Vec per_dim_rates;
  std::vector<Vec> weight_history;  // perceptron only: weights after every update
};

namespace detail {

// One dRBM update on a batch; lambda only matters when the schedule is on.
inline CondStepInfo drbm_step(DrbmHerder& h, const LabeledDataset& train,
                              const std::vector<int>& batch, const CondConfig& cfg, double lambda,
                              int class_of_interest = -1) {
  CondStepInfo info;
  info.positive_mean.assign(std::size_t(h.flat_dim()), 0.0);
  info.negative_mean.assign(std::size_t(h.flat_dim()), 0.0);
  Vec a, f;
  std::vector<double> z;
  for (int i : batch) {
    const Vec& x = train.inputs[std::size_t(i)];
    // scalar herders see +1 for their class, -1 for the rest
    int truth = class_of_interest < 0 ? train.labels[std::size_t(i)]
                                      : (train.labels[std::size_t(i)] == class_of_interest ? 1 : 0);
    h.best_score(x, truth, a, z);  // clamped phase: label fixed, hidden maximized
    h.features(x, truth, z, f);
    for (std::size_t d = 0; d < f.size(); ++d) info.positive_mean[d] += f[d];

    int guess = h.best_label(x, a, z);
    if (guess != truth) ++info.batch_errors;
    h.features(x, guess, z, f);
    for (std::size_t d = 0; d < f.size(); ++d) info.negative_mean[d] += f[d];
  }
  for (std::size_t d = 0; d < info.positive_mean.size(); ++d) {
    info.positive_mean[d] /= double(batch.size());
    info.negative_mean[d] /= double(batch.size());
  }

  // actual update direction, entropy term included
  Vec v(std::size_t(h.flat_dim()));
  for (std::size_t d = 0; d < v.size(); ++d) v[d] = info.positive_mean[d] - info.negative_mean[d];
  if (cfg.entropy_schedule) {
    const int t0 = h.theta_offset();
    for (int k = 0; k < h.hidden_units(); ++k) {
      v[std::size_t(t0 + k)] = (1.0 - lambda) * info.positive_mean[std::size_t(t0 + k)] -
                               info.negative_mean[std::size_t(t0 + k)];
    }
  }
  if (cfg.verify_pct) {
    if (dot(h.weights(), v) > pct_tolerance(norm2(h.weights()), norm2(v))) {
      info.pct_violation = true;
      if (cfg.strict_pct) throw PctViolationError("drbm_step: cycling condition violated");
    }
  }
  for (std::size_t d = 0; d < v.size(); ++d) h.weights()[d] += h.rates()[d] * v[d];
  if (!all_finite(h.weights())) throw NonFiniteWeightError("drbm_step: weight became non-finite");
  return info;
}

inline std::vector<std::vector<int>> fixed_batches(int cases, int minibatch) {
  std::vector<std::vector<int>> batches;
  if (minibatch <= 0 || minibatch >= cases) {
    batches.emplace_back();
    for (int i = 0; i < cases; ++i) batches.back().push_back(i);
  } else {
    for (int at = 0; at < cases; at += minibatch) {
      batches.emplace_back();
      for (int i = at; i < std::min(at + minibatch, cases); ++i) batches.back().push_back(i);
    }
  }
  return batches;
}

}  // namespace detail

/// Voted linear perceptron as the degenerate conditional herder: no hidden
/// units, scalar label, features x * y, zero init. Weight history is kept so
/// the run can be compared update for update against the textbook rule
/// w += x (y - y*).
inline CondRunResult perceptron_run(const LabeledDataset& train, const LabeledDataset& test,
                                    const CondConfig& cfg) {
  train.validate();
  if (train.num_classes != 2) throw ConfigError("perceptron_run: needs exactly two classes");
  const int dim = train.input_dim();
  auto batches = detail::fixed_batches(train.cases(), cfg.minibatch);
  const long long patience = (long long)batches.size();

  CondRunResult out;
  Vec w(std::size_t(dim), 0.0);
  out.w0 = w;
  out.per_dim_rates.assign(std::size_t(dim), cfg.eta);
  out.positive_sum.assign(std::size_t(dim), 0.0);
  out.negative_sum.assign(std::size_t(dim), 0.0);
  out.votes.init(test.cases(), 2);
  out.weight_norm_inf.push_back(norm_inf(w));
  out.weight_history.push_back(w);

  auto sign_of = [](int label) { return label == 1 ? 1.0 : -1.0; };
  long long calm = 0;
  for (long long t = 1; t <= cfg.max_steps; ++t) {
    const auto& batch = batches[std::size_t((t - 1) % batches.size())];
    Vec pos(std::size_t(dim), 0.0), neg(std::size_t(dim), 0.0);
    int errors = 0;
    for (int i : batch) {
      const Vec& x = train.inputs[std::size_t(i)];
      double y = sign_of(train.labels[std::size_t(i)]);
      double act = dot(w, x);
      double y_star = act > 0.0 ? 1.0 : -1.0;  // tie goes to -1, the lower label
      if (y_star != y) ++errors;
      for (int j = 0; j < dim; ++j) {
        pos[std::size_t(j)] += x[std::size_t(j)] * y;
        neg[std::size_t(j)] += x[std::size_t(j)] * y_star;
      }
    }
    Vec v((std::size_t)dim);
    for (int j = 0; j < dim; ++j) {
      pos[std::size_t(j)] /= double(batch.size());
      neg[std::size_t(j)] /= double(batch.size());
      v[std::size_t(j)] = pos[std::size_t(j)] - neg[std::size_t(j)];
      out.positive_sum[std::size_t(j)] += pos[std::size_t(j)];
      out.negative_sum[std::size_t(j)] += neg[std::size_t(j)];
    }
    if (cfg.verify_pct) {
      ++out.pct_checked;
      if (dot(w, v) > pct_tolerance(norm2(w), norm2(v))) {
        out.pct_violations.push_back(t);
        if (cfg.strict_pct) throw PctViolationError("perceptron_run: cycling condition violated");
      }
    }
    for (int j = 0; j < dim; ++j) w[std::size_t(j)] += cfg.eta * v[std::size_t(j)];
    out.weight_norm_inf.push_back(norm_inf(w));
    out.weight_history.push_back(w);
    out.steps_run = t;

    if (t > cfg.burn_in) {
      ++out.vote_steps;
      for (int j = 0; j < test.cases(); ++j) {
        double act = dot(w, test.inputs[std::size_t(j)]);
        out.votes.add(j, act > 0.0 ? 1 : 0);
      }
    }
    calm = errors == 0 ? calm + 1 : 0;
    if (calm >= patience) {
      out.converged = true;
      break;
    }
  }
  out.w_final = w;
  out.predictions = out.vote_steps > 0 ? out.votes.winners() : std::vector<int>();
  if (out.predictions.empty()) {
    out.predictions.resize(std::size_t(test.cases()));
    for (int j = 0; j < test.cases(); ++j) {
      out.predictions[std::size_t(j)] = dot(w, test.inputs[std::size_t(j)]) > 0.0 ? 1 : 0;
    }
  }
  int wrong = 0;
  for (int j = 0; j < test.cases(); ++j) {
    if (out.predictions[std::size_t(j)] != test.labels[std::size_t(j)]) ++wrong;
  }
  out.test_error = test.cases() > 0 ? double(wrong) / test.cases() : 0.0;
  return out;
}

/// Conditional herding proper. Joint shares one model across classes and
/// maximizes labels over 1-of-K configurations; one-vs-all runs independent
/// scalar herders (seeded seed + class) and votes on each herder's running
/// +-1 average. Stops early once the training error has been zero for a full
/// pass of consecutive minibatches.
inline CondRunResult cond_run(const LabeledDataset& train, const LabeledDataset& test,
                              const CondConfig& cfg) {
  train.validate();
  if (test.cases() > 0) {
    if (test.input_dim() != train.input_dim()) throw ConfigError("cond_run: test dimension mismatch");
  }
  if (cfg.procedure == CondProcedure::Perceptron) return perceptron_run(train, test, cfg);
  if (cfg.max_steps < 1) throw ConfigError("cond_run: max_steps must be >= 1");

  auto batches = detail::fixed_batches(train.cases(), cfg.minibatch);
  const long long patience = (long long)batches.size();
  const int k_classes = train.num_classes;

  CondRunResult out;
  out.votes.init(test.cases(), k_classes);

  if (cfg.procedure == CondProcedure::Joint) {
    Rng rng(cfg.seed);
    detail::DrbmHerder h(train.input_dim(), k_classes, cfg, rng);
    out.w0 = h.weights();
    out.per_dim_rates = h.rates();
    out.positive_sum.assign(std::size_t(h.flat_dim()), 0.0);
    out.negative_sum.assign(std::size_t(h.flat_dim()), 0.0);
    out.weight_norm_inf.push_back(norm_inf(h.weights()));
    long long calm = 0;
    for (long long t = 1; t <= cfg.max_steps; ++t) {
      double lambda = entropy_lambda(cfg.lambda0, t - 1, cfg.lambda_halve_every);
      const auto& batch = batches[std::size_t((t - 1) % batches.size())];
      CondStepInfo info = detail::drbm_step(h, train, batch, cfg, lambda);
      if (cfg.verify_pct) {
        ++out.pct_checked;
        if (info.pct_violation) out.pct_violations.push_back(t);
      }
      for (std::size_t d = 0; d < info.positive_mean.size(); ++d) {
        out.positive_sum[d] += info.positive_mean[d];
        out.negative_sum[d] += info.negative_mean[d];
      }
      out.weight_norm_inf.push_back(norm_inf(h.weights()));
      out.steps_run = t;
      if (t > cfg.burn_in) {
        ++out.vote_steps;
        for (int j = 0; j < test.cases(); ++j) out.votes.add(j, h.predict(test.inputs[std::size_t(j)]));
      }
      calm = info.batch_errors == 0 ? calm + 1 : 0;
      if (calm >= patience) {
        out.converged = true;
        break;
      }
    }
    out.w_final = h.weights();
    out.predictions = out.vote_steps > 0 ? out.votes.winners() : std::vector<int>();
    if (out.predictions.empty()) {
      out.predictions.resize(std::size_t(test.cases()));
      for (int j = 0; j < test.cases(); ++j) {
        out.predictions[std::size_t(j)] = h.predict(test.inputs[std::size_t(j)]);
      }
    }
  } else {  // OneVsAll
    std::vector<detail::DrbmHerder> herders;
    herders.reserve(std::size_t(k_classes));
    for (int c = 0; c < k_classes; ++c) {
      Rng rng(cfg.seed + std::uint64_t(c));
      herders.emplace_back(train.input_dim(), 0, cfg, rng);
    }
    out.weight_norm_inf.push_back(0.0);  // combined curve: max over herders
    {
      double m = 0.0;
      for (const auto& h : herders) m = std::max(m, norm_inf(h.weights()));
      out.weight_norm_inf.back() = m;
    }
    long long calm = 0;
    for (long long t = 1; t <= cfg.max_steps; ++t) {
      double lambda = entropy_lambda(cfg.lambda0, t - 1, cfg.lambda_halve_every);
      const auto& batch = batches[std::size_t((t - 1) % batches.size())];
      int errors = 0;
      for (int c = 0; c < k_classes; ++c) {
        CondStepInfo info = detail::drbm_step(herders[std::size_t(c)], train, batch, cfg, lambda, c);
        errors += info.batch_errors;
        if (cfg.verify_pct) {
          ++out.pct_checked;
          if (info.pct_violation) out.pct_violations.push_back(t);
        }
      }
      double m = 0.0;
      for (const auto& h : herders) m = std::max(m, norm_inf(h.weights()));
      out.weight_norm_inf.push_back(m);
      out.steps_run = t;
      if (t > cfg.burn_in) {
        ++out.vote_steps;
        for (int j = 0; j < test.cases(); ++j) {
          for (int c = 0; c < k_classes; ++c) {
            if (herders[std::size_t(c)].predict(test.inputs[std::size_t(j)]) == 1) out.votes.add(j, c);
          }
        }
      }
      calm = errors == 0 ? calm + 1 : 0;
      if (calm >= patience) {
        out.converged = true;
        break;
      }
    }
    out.predictions = out.vote_steps > 0 ? out.votes.winners() : std::vector<int>();
    if (out.predictions.empty()) {
      out.predictions.resize(std::size_t(test.cases()));
      for (int j = 0; j < test.cases(); ++j) {
        int best = 0;
        // no votes collected: fall back to the final models' raw scores
        double best_s = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < k_classes; ++c) {
          Vec a;
          std::vector<double> z;
          double s_pos = herders[std::size_t(c)].best_score(test.inputs[std::size_t(j)], 1, a, z);
          double s_neg = herders[std::size_t(c)].best_score(test.inputs[std::size_t(j)], 0, a, z);
          double s = s_pos - s_neg;
          if (s > best_s) {
            best_s = s;
            best = c;
          }
        }
        out.predictions[std::size_t(j)] = best;
      }
    }
  }

  int wrong = 0;
  for (int j = 0; j < test.cases(); ++j) {
    if (out.predictions[std::size_t(j)] != test.labels[std::size_t(j)]) ++wrong;
  }
  out.test_error = test.cases() > 0 ? double(wrong) / test.cases() : 0.0;
  return out;
}

}  // namespace herd::cond
