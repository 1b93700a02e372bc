#pragma once

#include <cstdint>
#include <memory>
#include <utility>

#include "herding/engine.hpp"
#include "herding/rng.hpp"

namespace herd::models {

/// Fully random discrete MRF: one variable with num_states values, each state
/// carrying dim independent N(0, 1) features, plus N(0, 1) * weight_scale true
/// parameters. Moments are the exact expectation under those parameters at
/// temperature 1. Frozen by seed; the draw order (features state-major, then
/// weights) is part of the contract.
struct RandomModelSpec {
  int num_states = 4;
  int dim = 2;
  std::uint64_t seed = 1;
  double weight_scale = 1.0;
};

struct RandomModel {
  FeatureMap fmap;
  FeatureTable table;
  Vec true_weights;
  MomentVector moments;
};

inline RandomModel random_mrf(const RandomModelSpec& spec) {
  if (spec.num_states < 1) throw ConfigError("random_mrf: num_states must be >= 1");
  if (spec.dim < 1) throw ConfigError("random_mrf: dim must be >= 1");
  Rng rng(spec.seed);
  auto feats = std::make_shared<std::vector<double>>(std::size_t(spec.num_states) * spec.dim);
  for (double& f : *feats) f = rng.normal();
  Vec w_true(std::size_t(spec.dim));
  for (double& w : w_true) w = rng.normal() * spec.weight_scale;

  RandomModel m;
  const int dim = spec.dim;
  m.fmap.space = StateSpace::single(spec.num_states);
  m.fmap.dim = dim;
  m.fmap.eval = [feats, dim](const Assignment& a) {
    const double* row = feats->data() + std::size_t(a[0]) * dim;
    return Vec(row, row + dim);
  };
  m.table = FeatureTable(m.fmap);
  m.true_weights = std::move(w_true);
  Vec mom = expected_features_at_temperature(m.true_weights, m.table, 1.0);
  m.moments = make_moments(std::move(mom), MomentProvenance::Analytic, m.fmap);
  return m;
}

/// Features of a binary pairwise model in +-1 encoding over visible then
/// hidden units: the visible values, optionally the hidden values, then all
/// visible x hidden products (visible-major). Every feature vector has the
/// same norm, which the greedy two-norm view of herding relies on.
inline FeatureMap rbm_features(int visible, int hidden, bool hidden_bias = true) {
  if (visible < 1 || hidden < 0) throw ConfigError("rbm_features: bad unit counts");
  FeatureMap fm;
  fm.space = StateSpace::binary(visible + hidden);
  fm.dim = visible + (hidden_bias ? hidden : 0) + visible * hidden;
  fm.norm_bound = std::sqrt(double(fm.dim));
  fm.eval = [visible, hidden, hidden_bias](const Assignment& a) {
    Vec f;
    f.reserve(std::size_t(visible + (hidden_bias ? hidden : 0) + visible * hidden));
    auto spin = [&a](int v) { return 2.0 * a[std::size_t(v)] - 1.0; };
    for (int j = 0; j < visible; ++j) f.push_back(spin(j));
    if (hidden_bias) {
      for (int k = 0; k < hidden; ++k) f.push_back(spin(visible + k));
    }
    for (int j = 0; j < visible; ++j) {
      for (int k = 0; k < hidden; ++k) f.push_back(spin(j) * spin(visible + k));
    }
    return f;
  };
  return fm;
}

/// Square-lattice Ising geometry. Site (r, c) is index r * cols + c; edges are
/// listed right-then-down per site in raster order. Periodic wrap needs at
/// least 3 sites per wrapped direction so no edge duplicates.
struct IsingLattice {
  int rows = 0;
  int cols = 0;
  bool periodic = false;

  struct Edge {
    int a = 0, b = 0;
  };

  IsingLattice() = default;
  IsingLattice(int r, int c, bool wrap) : rows(r), cols(c), periodic(wrap) {
    if (rows < 1 || cols < 1) throw ConfigError("IsingLattice: degenerate size");
    if (periodic && (rows < 3 || cols < 3)) {
      throw ConfigError("IsingLattice: periodic wrap needs at least 3x3");
    }
  }

  int sites() const { return rows * cols; }
  int site(int r, int c) const { return r * cols + c; }

  std::vector<Edge> edges() const {
    std::vector<Edge> e;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (c + 1 < cols) e.push_back({site(r, c), site(r, c + 1)});
        else if (periodic) e.push_back({site(r, c), site(r, 0)});
        if (r + 1 < rows) e.push_back({site(r, c), site(r + 1, c)});
        else if (periodic) e.push_back({site(r, c), site(0, c)});
      }
    }
    return e;
  }
};

// Critical coupling of the infinite square lattice, log(1 + sqrt 2) / 2.
inline constexpr double kIsingCriticalBeta = 0.44068679350977147;

struct SwResult {
  double edge_moment = 0.0;   // grand average of s_a s_b over edges and kept steps
  double node_moment = 0.0;
  double edge_moment_se = 0.0;  // batch-means standard error
  long long measured_steps = 0;
  std::vector<std::int8_t> final_spins;
};

/// Swendsen-Wang cluster sampler at coupling beta (J = 1, no field): bonds
/// open on aligned edges with probability 1 - exp(-2 beta), clusters flip by
/// fair coins. Spins start from seeded coins; all draws come from the one Rng
/// in a fixed order, so a seed pins the whole chain.
inline SwResult swendsen_wang_sample(const IsingLattice& lat, double beta, long long steps,
                                     std::uint64_t seed, long long burn_in = -1) {
  if (steps < 1) throw ConfigError("swendsen_wang_sample: steps must be >= 1");
  if (burn_in < 0) burn_in = steps / 10;
  if (burn_in >= steps) throw ConfigError("swendsen_wang_sample: burn_in swallows the chain");
  const auto edges = lat.edges();
  const int n = lat.sites();
  const double p_bond = 1.0 - std::exp(-2.0 * beta);
  Rng rng(seed);

  std::vector<std::int8_t> s((std::size_t)n);
  for (auto& v : s) v = rng.coin() ? 1 : -1;

  std::vector<int> parent((std::size_t)n);
  std::vector<std::int8_t> flip((std::size_t)n);
  std::vector<std::int8_t> decided((std::size_t)n);
  auto find = [&parent](int x) {
    while (parent[std::size_t(x)] != x) {
      parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
      x = parent[std::size_t(x)];
    }
    return x;
  };

  std::vector<double> kept;
  kept.reserve(std::size_t(steps - burn_in));
  double node_sum = 0.0;
  for (long long t = 0; t < steps; ++t) {
    for (int i = 0; i < n; ++i) parent[std::size_t(i)] = i;
    for (const auto& e : edges) {
      if (s[std::size_t(e.a)] == s[std::size_t(e.b)] && rng.uniform() < p_bond) {
        int ra = find(e.a), rb = find(e.b);
        if (ra != rb) parent[std::size_t(std::max(ra, rb))] = std::min(ra, rb);
      }
    }
    // One coin per cluster, drawn at the first site of the cluster in site
    // order so the stream does not depend on union internals.
    std::fill(decided.begin(), decided.end(), std::int8_t(0));
    for (int i = 0; i < n; ++i) {
      int r = find(i);
      if (!decided[std::size_t(r)]) {
        decided[std::size_t(r)] = 1;
        flip[std::size_t(r)] = rng.coin() ? 1 : 0;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (flip[std::size_t(find(i))]) s[std::size_t(i)] = -s[std::size_t(i)];
    }
    if (t >= burn_in) {
      double acc = 0.0;
      for (const auto& e : edges) acc += double(s[std::size_t(e.a)]) * s[std::size_t(e.b)];
      kept.push_back(acc / double(edges.size()));
      double ns = 0.0;
      for (auto v : s) ns += v;
      node_sum += ns / double(n);
    }
  }

  SwResult out;
  out.measured_steps = (long long)kept.size();
  for (double v : kept) out.edge_moment += v;
  out.edge_moment /= double(kept.size());
  out.node_moment = node_sum / double(kept.size());
  // Batch means absorb chain autocorrelation into the error estimate.
  const int batches = out.measured_steps >= 64 ? 32 : 1;
  if (batches > 1) {
    const long long per = out.measured_steps / batches;
    double mean_sq = 0.0;
    for (int b = 0; b < batches; ++b) {
      double m = 0.0;
      for (long long i = b * per; i < (b + 1) * per; ++i) m += kept[std::size_t(i)];
      m /= double(per);
      mean_sq += (m - out.edge_moment) * (m - out.edge_moment);
    }
    out.edge_moment_se = std::sqrt(mean_sq / double(batches - 1) / double(batches));
  }
  out.final_spins = std::move(s);
  return out;
}

struct IsingHerdConfig {
  double node_target = 0.0;    // zero field unless stated
  double edge_target = 0.0;
  long long steps = 10000;
  int max_sweeps = 50;
  bool strict_pct = false;
  int spin_sample_stride = 0;  // 0 keeps no configurations
};

struct IsingHerdTrace {
  Vec edge_mean;               // per-edge time averages of s_a s_b
  Vec node_mean;
  double grand_edge_mean = 0.0;
  double grand_node_mean = 0.0;
  double max_weight_norm_inf = 0.0;
  long long pct_checked = 0;
  long long pct_violations = 0;
  std::vector<long long> violation_steps;
  std::vector<std::vector<std::int8_t>> sampled_spins;
  long long steps = 0;
  long long total_sweeps = 0;
};

/// Herding on the lattice with per-node and per-edge weights, maximized by
/// warm-started raster coordinate descent on spin flips. The cycling
/// condition is verified every step because the maximizer is local; weights
/// start at the targets and spins start all up, so runs are reproducible
/// without any random source.
inline IsingHerdTrace ising_herd_run(const IsingLattice& lat, const IsingHerdConfig& cfg) {
  if (cfg.steps < 1) throw ConfigError("ising_herd_run: steps must be >= 1");
  if (cfg.max_sweeps < 1) throw ConfigError("ising_herd_run: max_sweeps must be >= 1");
  const auto edges = lat.edges();
  const int n = lat.sites();
  const int m = (int)edges.size();

  // adjacency: per site, (edge index, neighbor)
  std::vector<std::vector<std::pair<int, int>>> adj((std::size_t)n);
  for (int e = 0; e < m; ++e) {
    adj[std::size_t(edges[std::size_t(e)].a)].push_back({e, edges[std::size_t(e)].b});
    adj[std::size_t(edges[std::size_t(e)].b)].push_back({e, edges[std::size_t(e)].a});
  }

  Vec w_node(std::size_t(n), cfg.node_target);
  Vec w_edge(std::size_t(m), cfg.edge_target);
  std::vector<std::int8_t> s(std::size_t(n), 1);
  std::vector<double> field((std::size_t)n);

  IsingHerdTrace tr;
  tr.steps = cfg.steps;
  tr.edge_mean.assign(std::size_t(m), 0.0);
  tr.node_mean.assign(std::size_t(n), 0.0);
  tr.max_weight_norm_inf = std::max(std::abs(cfg.node_target), std::abs(cfg.edge_target));

  for (long long t = 1; t <= cfg.steps; ++t) {
    for (int i = 0; i < n; ++i) {
      double f = w_node[std::size_t(i)];
      for (const auto& [e, j] : adj[std::size_t(i)]) f += w_edge[std::size_t(e)] * s[std::size_t(j)];
      field[std::size_t(i)] = f;
    }
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      ++tr.total_sweeps;
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        if (double(s[std::size_t(i)]) * field[std::size_t(i)] < 0.0) {
          s[std::size_t(i)] = -s[std::size_t(i)];
          changed = true;
          for (const auto& [e, j] : adj[std::size_t(i)]) {
            field[std::size_t(j)] += 2.0 * w_edge[std::size_t(e)] * s[std::size_t(i)];
          }
        }
      }
      if (!changed) break;
    }

    // cycling condition w.(phi_bar - phi(s)) <= 0 over the stacked weights
    double margin = 0.0;
    double v_sq = 0.0, w_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = cfg.node_target - double(s[std::size_t(i)]);
      margin += w_node[std::size_t(i)] * v;
      v_sq += v * v;
      w_sq += w_node[std::size_t(i)] * w_node[std::size_t(i)];
    }
    for (int e = 0; e < m; ++e) {
      double prod = double(s[std::size_t(edges[std::size_t(e)].a)]) * s[std::size_t(edges[std::size_t(e)].b)];
      double v = cfg.edge_target - prod;
      margin += w_edge[std::size_t(e)] * v;
      v_sq += v * v;
      w_sq += w_edge[std::size_t(e)] * w_edge[std::size_t(e)];
    }
    ++tr.pct_checked;
    if (margin > pct_tolerance(std::sqrt(w_sq), std::sqrt(v_sq))) {
      ++tr.pct_violations;
      tr.violation_steps.push_back(t);
      if (cfg.strict_pct) throw PctViolationError("ising_herd_run: cycling condition violated");
    }

    double wmax = 0.0;
    for (int i = 0; i < n; ++i) {
      double spin = s[std::size_t(i)];
      tr.node_mean[std::size_t(i)] += spin;
      w_node[std::size_t(i)] += cfg.node_target - spin;
      wmax = std::max(wmax, std::abs(w_node[std::size_t(i)]));
    }
    for (int e = 0; e < m; ++e) {
      double prod = double(s[std::size_t(edges[std::size_t(e)].a)]) * s[std::size_t(edges[std::size_t(e)].b)];
      tr.edge_mean[std::size_t(e)] += prod;
      w_edge[std::size_t(e)] += cfg.edge_target - prod;
      wmax = std::max(wmax, std::abs(w_edge[std::size_t(e)]));
    }
    tr.max_weight_norm_inf = std::max(tr.max_weight_norm_inf, wmax);

    if (cfg.spin_sample_stride > 0 && t % cfg.spin_sample_stride == 0) {
      tr.sampled_spins.push_back(s);
    }
  }

  for (double& v : tr.edge_mean) {
    v /= double(cfg.steps);
    tr.grand_edge_mean += v;
  }
  tr.grand_edge_mean /= double(m);
  for (double& v : tr.node_mean) {
    v /= double(cfg.steps);
    tr.grand_node_mean += v;
  }
  tr.grand_node_mean /= double(n);
  return tr;
}

/// Sizes of the maximal aligned-spin components of one configuration.
inline std::vector<long long> component_sizes(const IsingLattice& lat,
                                              const std::vector<std::int8_t>& spins) {
  const int n = lat.sites();
  if ((int)spins.size() != n) throw ConfigError("component_sizes: spin count mismatch");
  std::vector<int> parent((std::size_t)n);
  for (int i = 0; i < n; ++i) parent[std::size_t(i)] = i;
  auto find = [&parent](int x) {
    while (parent[std::size_t(x)] != x) {
      parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
      x = parent[std::size_t(x)];
    }
    return x;
  };
  for (const auto& e : lat.edges()) {
    if (spins[std::size_t(e.a)] == spins[std::size_t(e.b)]) {
      int ra = find(e.a), rb = find(e.b);
      if (ra != rb) parent[std::size_t(std::max(ra, rb))] = std::min(ra, rb);
    }
  }
  std::vector<long long> size(std::size_t(n), 0);
  for (int i = 0; i < n; ++i) ++size[std::size_t(find(i))];
  std::vector<long long> out;
  for (int i = 0; i < n; ++i) {
    if (size[std::size_t(i)] > 0) out.push_back(size[std::size_t(i)]);
  }
  return out;
}

/// Log-binned least-squares slope of the component-size density. Qualitative:
/// heavy-tailed distributions come out clearly negative but shallow.
inline double component_histogram_slope(const std::vector<long long>& sizes) {
  if (sizes.empty()) throw ConfigError("component_histogram_slope: no sizes");
  long long max_size = 0;
  for (long long v : sizes) max_size = std::max(max_size, v);
  std::vector<double> xs, ys;
  for (long long lo = 1; lo <= max_size; lo *= 2) {
    long long hi = lo * 2;  // bin [lo, hi)
    long long count = 0;
    for (long long v : sizes) {
      if (v >= lo && v < hi) ++count;
    }
    if (count > 0) {
      xs.push_back(std::log10(std::sqrt(double(lo) * double(hi))));
      ys.push_back(std::log10(double(count) / double(hi - lo)));
    }
  }
  if (xs.size() < 2) throw ConfigError("component_histogram_slope: degenerate histogram");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i], sy += ys[i], sxx += xs[i] * xs[i], sxy += xs[i] * ys[i];
  }
  double n = double(xs.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace herd::models
