// herd: deterministic herding runs from the command line.
//
// Subcommands map one to one onto the library modules. Every run prints a
// single summary line; --out / --report write machine-readable files that
// embed the fully resolved configuration, so a file is enough to reproduce
// the run that made it. Nothing here consults the clock or the environment.
//
// Exit codes: 0 success, 1 bad configuration or unparsable input,
// 2 a run that started but broke its contract (strict cycling check,
// non-finite weights, maximizer monotonicity).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "herding.hpp"

namespace {

using herd::ConfigError;
using herd::ParseError;
using herd::Vec;
using nlohmann::json;

// Trace meta records the run config, not where the bytes landed; keeping the
// path out makes reruns byte-identical regardless of destination.
herd::io::json meta_of(herd::io::json cfg) {
  cfg.erase("out");
  return cfg;
}

// "random:D=4,K=2,seed=7,scale=1" and friends
struct TaggedSpec {
  std::string head;
  std::map<std::string, std::string> kv;
  std::vector<std::string> positional;
};

TaggedSpec parse_tagged(const std::string& s) {
  TaggedSpec out;
  auto colon = s.find(':');
  out.head = s.substr(0, colon);
  if (colon == std::string::npos) return out;
  std::string rest = s.substr(colon + 1);
  std::size_t at = 0;
  while (at <= rest.size()) {
    auto comma = rest.find(',', at);
    std::string tok = rest.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
    if (!tok.empty()) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) {
        out.positional.push_back(tok);
      } else {
        out.kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
    }
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return out;
}

herd::models::RandomModelSpec parse_model(const std::string& s) {
  TaggedSpec t = parse_tagged(s);
  if (t.head != "random") throw ConfigError("unknown model family '" + t.head + "', expected random:...");
  herd::models::RandomModelSpec spec;
  for (const auto& [k, v] : t.kv) {
    if (k == "D") {
      spec.num_states = (int)herd::io::parse_int(v, "model D");
    } else if (k == "K") {
      spec.dim = (int)herd::io::parse_int(v, "model K");
    } else if (k == "seed") {
      spec.seed = (std::uint64_t)herd::io::parse_int(v, "model seed");
    } else if (k == "scale") {
      spec.weight_scale = herd::io::parse_double(v, "model scale");
    } else {
      throw ConfigError("unknown model key '" + k + "'");
    }
  }
  return spec;
}

// "lo:hi:n", n points, endpoints included
std::vector<double> parse_grid(const std::string& s) {
  auto c1 = s.find(':');
  auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw ConfigError("grid must be lo:hi:count, got '" + s + "'");
  }
  double lo = herd::io::parse_double(s.substr(0, c1), "grid lo");
  double hi = herd::io::parse_double(s.substr(c1 + 1, c2 - c1 - 1), "grid hi");
  long long n = herd::io::parse_int(s.substr(c2 + 1), "grid count");
  if (n < 1 || lo <= 0.0 || hi <= 0.0) throw ConfigError("grid needs positive temperatures and count");
  std::vector<double> out;
  for (long long i = 0; i < n; ++i) {
    out.push_back(n == 1 ? lo : lo + double(i) * (hi - lo) / double(n - 1));
  }
  return out;
}

Vec parse_number_list(const std::string& s, const std::string& what) {
  Vec out;
  std::size_t at = 0;
  while (at <= s.size()) {
    auto comma = s.find(',', at);
    std::string tok = s.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
    if (!tok.empty()) out.push_back(herd::io::parse_double(tok, what));
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

json load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json j = json::parse(is, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config file must hold a json object: " + path);
  return j;
}

// defaults, then config file, then explicit flags
struct CfgBuilder {
  json cfg;
  CLI::App* cmd;
  std::string config_path;

  explicit CfgBuilder(CLI::App* c) : cmd(c) {
    cmd->add_option("--config", config_path, "json file with option defaults");
  }

  // entries are (config key, option name as typed, value the option parsed into)
  void fold(std::initializer_list<std::tuple<const char*, const char*, json>> flags) {
    json from_flags = json::object();
    for (const auto& [key, opt, val] : flags) {
      if (cmd->count(opt) > 0) from_flags[key] = val;
    }
    if (!config_path.empty()) {
      json file = load_config_file(config_path);
      for (auto& [k, v] : file.items()) {
        if (!cfg.contains(k)) throw ConfigError("config file key '" + k + "' is not an option here");
        cfg[k] = v;
      }
    }
    for (auto& [k, v] : from_flags.items()) cfg[k] = v;
  }
};

Vec resolve_w0(const std::string& mode, const herd::models::RandomModel& model) {
  if (mode == "moments") return model.moments.values;
  if (mode == "model") return model.true_weights;
  if (mode == "zero") return Vec(model.moments.values.size(), 0.0);
  throw ConfigError("w0 must be moments, model, or zero; got '" + mode + "'");
}

std::string fmt(double v) { return herd::io::fmt_double(v); }

// ---------------------------------------------------------------- herd ----

void cmd_herd(const json& cfg) {
  herd::models::RandomModel model = herd::models::random_mrf(parse_model(cfg.at("model")));
  herd::Maximizer maxer = herd::Maximizer::exact(model.fmap);
  herd::HerdOptions opt;
  opt.learning_rate = cfg.at("eta");
  opt.snapshot_stride = cfg.at("snapshot_stride");
  if (!cfg.at("verify_pct").is_null()) opt.verify_pct = (bool)cfg.at("verify_pct");
  opt.strict_pct = cfg.at("strict_pct");
  Vec w0 = resolve_w0(cfg.at("w0"), model);

  herd::HerdingTrace tr = herd::herd_run(w0, model.moments, maxer, cfg.at("steps"), opt);

  double err = 0.0;
  for (std::size_t d = 0; d < tr.running_feature_sum.size(); ++d) {
    err = std::max(err, std::abs(tr.running_feature_sum[d] / double(tr.steps) -
                                 model.moments.values[d]));
  }
  if (!std::string(cfg.at("out")).empty()) {
    herd::io::write_trace_csv(cfg.at("out"), herd::io::pack_trace(tr, model.fmap.space, meta_of(cfg)));
  }
  std::cout << "herd: steps=" << tr.steps << " moment_err_inf=" << fmt(err)
            << " pct_checked=" << tr.pct_checked << " pct_violations=" << tr.pct_violations.size()
            << " max_w_inf=" << fmt(tr.max_weight_norm_inf) << "\n";
}

// -------------------------------------------------------------- neuron ----

void cmd_neuron(const json& cfg) {
  herd::scalar::NeuronConfig nc;
  std::string pi_s = cfg.at("pi");
  nc.pi = pi_s == "golden" ? herd::scalar::kGoldenMean : herd::io::parse_double(pi_s, "--pi");
  std::string w0_s = cfg.at("w0");
  if (w0_s == "rabbit") {
    nc.w0 = 2.0 * nc.pi - 1.0;
  } else if (w0_s == "half") {
    nc.w0 = nc.pi - 0.5;
  } else {
    nc.w0 = herd::io::parse_double(w0_s, "--w0");
  }
  nc.validate();
  long long steps = cfg.at("steps");
  herd::scalar::NeuronTrace tr = herd::scalar::neuron_run(nc, steps);

  long long ones = 0;
  for (auto b : tr.bits) ones += b;
  double max_w = 0.0;
  for (double w : tr.weights) max_w = std::max(max_w, std::abs(w));

  if (!std::string(cfg.at("out")).empty()) {
    herd::io::TraceFile t;
    t.meta = meta_of(cfg);
    t.cards = {2};
    t.dim = 1;
    t.steps = steps;
    t.feature_sum = {double(ones)};
    t.max_weight_norm2 = max_w;
    t.max_weight_norm_inf = max_w;
    for (auto b : tr.bits) t.states.push_back({int(b)});
    long long stride = cfg.at("snapshot_stride");
    t.snapshots.emplace_back(0, Vec{tr.weights[0]});
    for (long long s = stride; s < steps; s += stride) {
      t.snapshots.emplace_back(s, Vec{tr.weights[std::size_t(s)]});
    }
    if (steps > 0) t.snapshots.emplace_back(steps, Vec{tr.weights[std::size_t(steps)]});
    herd::io::write_trace_csv(cfg.at("out"), t);
  }
  std::cout << "neuron: steps=" << steps << " ones=" << ones
            << " discrepancy=" << fmt(std::abs(double(ones) - double(steps) * nc.pi))
            << " max_w=" << fmt(max_w) << "\n";
}

// --------------------------------------------------------- multinomial ----

void cmd_multinomial(const json& cfg) {
  herd::scalar::MultinomialConfig mc;
  std::string pi_s = cfg.at("pi");
  if (pi_s.rfind("uniform:", 0) == 0) {
    long long d = herd::io::parse_int(pi_s.substr(8), "--pi uniform count");
    if (d < 1) throw ConfigError("--pi uniform count must be >= 1");
    mc.pi.assign(std::size_t(d), 1.0 / double(d));
  } else {
    mc.pi = parse_number_list(pi_s, "--pi");
  }
  std::string w0_s = cfg.at("w0");
  if (w0_s != "pi") mc.w0 = parse_number_list(w0_s, "--w0");
  mc.validate();
  long long steps = cfg.at("steps");
  herd::scalar::MultinomialTrace tr = herd::scalar::multinomial_run(mc, steps);

  Vec counts(mc.pi.size(), 0.0);
  for (int s : tr.states) counts[std::size_t(s)] += 1.0;
  double err = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    err = std::max(err, std::abs(counts[k] / double(steps) - mc.pi[k]));
  }

  if (!std::string(cfg.at("out")).empty()) {
    herd::io::TraceFile t;
    t.meta = meta_of(cfg);
    t.cards = {(int)mc.pi.size()};
    t.dim = (int)mc.pi.size();
    t.steps = steps;
    t.feature_sum = counts;
    t.max_weight_norm2 = herd::norm2(tr.w_final);
    t.max_weight_norm_inf = tr.max_weight_norm_inf;
    for (int s : tr.states) t.states.push_back({s});
    Vec w0 = mc.w0.empty() ? mc.pi : mc.w0;
    t.snapshots.emplace_back(0, w0);
    t.snapshots.emplace_back(steps, tr.w_final);
    herd::io::write_trace_csv(cfg.at("out"), t);
  }
  std::cout << "multinomial: steps=" << steps << " states=" << mc.pi.size()
            << " max_freq_err=" << fmt(err) << " max_w_inf=" << fmt(tr.max_weight_norm_inf) << "\n";
}

// ----------------------------------------------------------- bifurcate ----

void cmd_bifurcate(const json& cfg) {
  herd::models::RandomModel model = herd::models::random_mrf(parse_model(cfg.at("model")));
  std::vector<double> grid = parse_grid(cfg.at("t_grid"));
  Vec w0 = resolve_w0(cfg.at("w0"), model);
  long long burn_in = cfg.at("burn_in");
  int max_period = cfg.at("max_period");
  int confirm = cfg.at("confirm");
  double tol = cfg.at("tol");

  std::vector<int> periods;
  periods.reserve(grid.size());
  for (double temp : grid) {
    periods.push_back(herd::detect_period_temperature_map(w0, model.moments, model.table, temp,
                                                          burn_in, max_period, confirm, tol));
  }

  if (!std::string(cfg.at("out")).empty()) {
    std::ofstream os(std::string(cfg.at("out")));
    if (!os) throw ParseError("cannot open for writing: " + std::string(cfg.at("out")));
    os << "# bifurcate v1\n# meta " << meta_of(cfg).dump() << "\n";
    os << "temperature,period\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      os << fmt(grid[i]) << "," << periods[i] << "\n";
    }
  }
  std::map<int, int> hist;
  for (int p : periods) ++hist[p];
  std::cout << "bifurcate: temps=" << grid.size();
  for (const auto& [p, n] : hist) {
    if (p == 0) {
      std::cout << " none=" << n;
    } else {
      std::cout << " p" << p << "=" << n;
    }
  }
  std::cout << "\n";
}

// --------------------------------------------------------------- pomrf ----

void cmd_pomrf(const json& cfg) {
  herd::io::Dataset ds = herd::io::read_dataset_csv(std::string(cfg.at("data")));
  if (ds.rows.empty()) throw ConfigError("pomrf: dataset is empty");
  auto data = herd::io::rows_to_binary_assignments(ds.rows);
  int visible = (int)data.front().size();
  int hidden = cfg.at("hidden");
  if (hidden < 0) throw ConfigError("pomrf: hidden must be >= 0");

  herd::StateSpace vis = herd::StateSpace::binary(visible);
  herd::StateSpace hid = herd::StateSpace::binary(hidden);
  herd::FeatureMap joint = herd::models::rbm_features(visible, hidden, cfg.at("hidden_bias"));
  herd::latent::PomrfProblem prob = herd::latent::make_pomrf(vis, hid, joint, data);

  herd::latent::PomrfOptions opt;
  std::string variant = cfg.at("variant");
  if (variant == "full") {
    opt.variant = herd::latent::PomrfVariant::Full;
  } else if (variant == "tractable") {
    opt.variant = herd::latent::PomrfVariant::Tractable;
  } else {
    throw ConfigError("pomrf: variant must be full or tractable");
  }
  opt.exact_clamped = cfg.at("exact_clamped");
  opt.exact_joint = cfg.at("exact_joint");
  opt.max_sweeps = cfg.at("max_sweeps");
  opt.minibatch = cfg.at("minibatch");
  opt.verify_pct = cfg.at("verify_pct");
  opt.strict_pct = cfg.at("strict_pct");
  opt.snapshot_stride = cfg.at("snapshot_stride");

  Vec w0(std::size_t(joint.dim), 0.0);
  double sigma = cfg.at("w0_sigma");
  if (sigma > 0.0) {
    herd::Rng rng((std::uint64_t)(long long)cfg.at("seed"));
    for (double& w : w0) w = sigma * rng.normal();
  }

  long long steps = cfg.at("steps");
  herd::latent::PomrfTrace tr = herd::latent::pomrf_run(prob, w0, steps, opt);

  double gap = 0.0;
  for (std::size_t d = 0; d < tr.positive_sum.size(); ++d) {
    gap = std::max(gap, std::abs(tr.positive_sum[d] - tr.negative_sum[d]) / double(steps));
  }
  double bits = herd::latent::hidden_marginal_entropy_bits(prob, tr);

  if (!std::string(cfg.at("out")).empty()) {
    herd::io::TraceFile t;
    t.meta = meta_of(cfg);
    t.cards = prob.joint.space.cards;
    t.dim = joint.dim;
    t.steps = tr.steps;
    t.feature_sum = tr.negative_sum;
    t.pct_checked = tr.pct_checked;
    t.pct_violations = tr.pct_violations;
    double m2 = 0.0;
    for (const auto& [s, w] : tr.weight_snapshots) m2 = std::max(m2, herd::norm2(w));
    t.max_weight_norm2 = m2;
    for (double v : tr.weight_norm_inf) t.max_weight_norm_inf = std::max(t.max_weight_norm_inf, v);
    if (!tr.joint_samples.empty()) {
      t.states.reserve(tr.joint_samples.size());
      for (long long idx : tr.joint_samples) t.states.push_back(prob.joint.space.assignment_of(idx));
    } else {
      t.states = tr.joint_sample_values;
    }
    t.snapshots = tr.weight_snapshots;
    herd::io::write_trace_csv(cfg.at("out"), t);
  }
  std::cout << "pomrf: steps=" << tr.steps << " moment_gap_inf=" << fmt(gap)
            << " hidden_entropy_bits=" << fmt(bits) << " pct_checked=" << tr.pct_checked
            << " pct_violations=" << tr.pct_violations.size() << "\n";
}

// ---------------------------------------------------------------- cond ----

herd::cond::LabeledDataset load_labeled(const std::string& src, const std::string& what) {
  if (src.rfind("moons:", 0) == 0) {
    TaggedSpec t = parse_tagged(src);
    int per_class = 100;
    double noise = 0.1;
    std::uint64_t seed = 1;
    for (const auto& [k, v] : t.kv) {
      if (k == "per_class") {
        per_class = (int)herd::io::parse_int(v, what);
      } else if (k == "noise") {
        noise = herd::io::parse_double(v, what);
      } else if (k == "seed") {
        seed = (std::uint64_t)herd::io::parse_int(v, what);
      } else {
        throw ConfigError(what + ": unknown moons key '" + k + "'");
      }
    }
    return herd::cond::two_moons(per_class, noise, seed);
  }
  herd::io::Dataset ds = herd::io::read_dataset_csv(src);
  if (!ds.has_labels) throw ConfigError(what + ": needs a leading 'label' column");
  herd::cond::LabeledDataset out;
  out.inputs = ds.rows;
  out.labels = ds.labels;
  int k = 0;
  for (int l : ds.labels) k = std::max(k, l + 1);
  out.num_classes = std::max(k, 2);
  return out;
}

void cmd_cond(const json& cfg) {
  herd::cond::LabeledDataset train = load_labeled(cfg.at("train"), "--train");
  herd::cond::LabeledDataset test = load_labeled(cfg.at("test"), "--test");
  test.num_classes = train.num_classes;

  if (cfg.at("normalize")) {
    double r = herd::cond::augment_normalization_feature(train);
    herd::cond::augment_normalization_feature(test, r);
  }

  herd::cond::CondConfig cc;
  std::string proc = cfg.at("procedure");
  if (proc == "joint") {
    cc.procedure = herd::cond::CondProcedure::Joint;
  } else if (proc == "ova") {
    cc.procedure = herd::cond::CondProcedure::OneVsAll;
  } else if (proc == "perceptron") {
    cc.procedure = herd::cond::CondProcedure::Perceptron;
  } else {
    throw ConfigError("cond: procedure must be joint, ova, or perceptron");
  }
  cc.hidden = cfg.at("hidden");
  cc.max_steps = cfg.at("steps");
  cc.minibatch = cfg.at("minibatch");
  cc.burn_in = cfg.at("burn_in");
  cc.seed = (std::uint64_t)(long long)cfg.at("seed");
  cc.sigma = cfg.at("sigma");
  cc.eta = cfg.at("eta");
  cc.entropy_schedule = cfg.at("entropy_schedule");
  cc.lambda0 = cfg.at("lambda0");
  cc.lambda_halve_every = cfg.at("halve_every");
  cc.verify_pct = cfg.at("verify_pct");
  cc.strict_pct = cfg.at("strict_pct");

  herd::cond::CondRunResult r = herd::cond::cond_run(train, test, cc);

  if (!std::string(cfg.at("report")).empty()) {
    json rep;
    rep["config"] = cfg;
    rep["steps_run"] = r.steps_run;
    rep["converged"] = r.converged;
    rep["test_error"] = r.test_error;
    rep["vote_steps"] = r.vote_steps;
    rep["predictions"] = r.predictions;
    rep["pct_checked"] = r.pct_checked;
    rep["pct_violations"] = r.pct_violations;
    herd::io::write_report_json(cfg.at("report"), rep);
  }
  std::cout << "cond: procedure=" << proc << " steps=" << r.steps_run
            << " converged=" << (r.converged ? 1 : 0) << " test_error=" << fmt(r.test_error)
            << " pct_checked=" << r.pct_checked << " pct_violations=" << r.pct_violations.size()
            << "\n";
}

// --------------------------------------------------------------- ising ----

void cmd_ising(const json& cfg) {
  herd::models::IsingLattice lat((int)cfg.at("rows"), (int)cfg.at("cols"), true);
  herd::models::IsingHerdConfig ic;
  ic.steps = cfg.at("steps");
  ic.max_sweeps = cfg.at("max_sweeps");
  ic.strict_pct = cfg.at("strict_pct");
  ic.spin_sample_stride = cfg.at("spin_stride");

  json targets;
  if (!cfg.at("node_target").is_null() && !cfg.at("edge_target").is_null()) {
    ic.node_target = cfg.at("node_target");
    ic.edge_target = cfg.at("edge_target");
    targets = {{"source", "explicit"}};
  } else {
    double beta = cfg.at("beta");
    long long sw_steps = cfg.at("sw_steps");
    auto sw = herd::models::swendsen_wang_sample(lat, beta, sw_steps,
                                                (std::uint64_t)(long long)cfg.at("sw_seed"));
    ic.node_target = sw.node_moment;
    ic.edge_target = sw.edge_moment;
    targets = {{"source", "swendsen-wang"},
               {"beta", beta},
               {"sw_steps", sw_steps},
               {"measured_steps", sw.measured_steps},
               {"edge_moment_se", sw.edge_moment_se}};
  }
  targets["node"] = ic.node_target;
  targets["edge"] = ic.edge_target;

  herd::models::IsingHerdTrace tr = herd::models::ising_herd_run(lat, ic);
  double edge_gap = std::abs(tr.grand_edge_mean - ic.edge_target);
  double node_gap = std::abs(tr.grand_node_mean - ic.node_target);
  double bound = 2.0 * tr.max_weight_norm_inf / double(tr.steps);

  if (!std::string(cfg.at("report")).empty()) {
    json rep;
    rep["config"] = cfg;
    rep["targets"] = targets;
    rep["grand_edge_mean"] = tr.grand_edge_mean;
    rep["grand_node_mean"] = tr.grand_node_mean;
    rep["edge_gap"] = edge_gap;
    rep["node_gap"] = node_gap;
    rep["moment_bound"] = bound;
    rep["max_weight_norm_inf"] = tr.max_weight_norm_inf;
    rep["pct_checked"] = tr.pct_checked;
    rep["pct_violations"] = tr.pct_violations;
    rep["violation_steps"] = tr.violation_steps;
    rep["total_sweeps"] = tr.total_sweeps;
    if (!tr.sampled_spins.empty()) {
      auto sizes = herd::models::component_sizes(lat, tr.sampled_spins.back());
      try {
        rep["component_histogram_slope"] = herd::models::component_histogram_slope(sizes);
      } catch (const ConfigError&) {
        rep["component_histogram_slope"] = nullptr;  // too few distinct sizes to fit
      }
    }
    herd::io::write_report_json(cfg.at("report"), rep);
  }
  std::cout << "ising: lattice=" << (int)cfg.at("rows") << "x" << (int)cfg.at("cols")
            << " edge_target=" << fmt(ic.edge_target) << " edge_mean=" << fmt(tr.grand_edge_mean)
            << " edge_gap=" << fmt(edge_gap) << " bound=" << fmt(bound)
            << " pct_violations=" << tr.pct_violations << "\n";
}

// ------------------------------------------------------------ diagnose ----

void cmd_diagnose(const json& cfg) {
  herd::io::TraceFile t = herd::io::read_trace_csv(std::string(cfg.at("trace")));
  if (t.steps <= 0 || t.states.empty()) throw ConfigError("diagnose: trace has no samples");

  herd::StateSpace space(t.cards.empty() ? std::vector<int>{2} : t.cards);
  std::vector<int> indices;
  indices.reserve(t.states.size());
  for (const auto& st : t.states) indices.push_back((int)space.index_of(st));

  herd::diag::DiagReport rep;
  rep.pct_checked = t.pct_checked;
  rep.pct_violations = (long long)t.pct_violations.size();
  rep.max_weight_norm2 = t.max_weight_norm2;
  rep.max_weight_norm_inf = t.max_weight_norm_inf;

  long long max_lag = cfg.at("max_lag");
  max_lag = std::min<long long>(max_lag, (long long)indices.size() - 1);
  if (max_lag >= 0) rep.autocorrelation = herd::diag::autocorrelation(indices, max_lag);

  long long comp_cap = 200000;
  std::vector<int> comp_seq(indices.begin(),
                            indices.begin() + std::min<std::size_t>(indices.size(), std::size_t(comp_cap)));
  rep.complexity = herd::diag::subsequence_complexity(comp_seq, (int)cfg.at("complexity_max_len"));

  // weights recorded every step let a cycle check run on the tail
  bool dense = t.snapshots.size() >= 64;
  for (std::size_t i = 1; dense && i < t.snapshots.size(); ++i) {
    dense = t.snapshots[i].first == t.snapshots[i - 1].first + 1;
  }
  if (dense) {
    std::vector<Vec> window;
    for (const auto& [s, w] : t.snapshots) window.push_back(w);
    int n = (int)window.size();
    rep.period = herd::detect_period_window(window, std::max(1, n / 3), std::max(4, n / 8));
  }

  // a rebuildable model turns the sample log back into per-prefix errors
  json extra;
  std::optional<Vec> moments;
  std::optional<herd::FeatureTable> tab;
  if (t.meta.is_object() && t.meta.contains("model") && t.meta["model"].is_string()) {
    herd::models::RandomModel model = herd::models::random_mrf(parse_model(t.meta["model"]));
    if (model.fmap.space.cards == space.cards) {
      moments = model.moments.values;
      tab.emplace(model.fmap);
    }
  }
  if (!moments && !std::string(cfg.at("moments")).empty()) {
    moments = herd::io::read_moments_csv(std::string(cfg.at("moments")));
  }
  if (moments && (long long)t.states.size() == t.steps) {
    if (tab) {
      const int dim = tab->dim();
      Vec acc((std::size_t)dim, 0.0);
      long long next_mark = 1;
      for (long long s = 1; s <= t.steps; ++s) {
        const double* row = tab->row(indices[std::size_t(s - 1)]);
        for (int d = 0; d < dim; ++d) acc[std::size_t(d)] += row[d];
        if (s == next_mark || s == t.steps) {
          herd::diag::MomentErrorPoint p;
          p.prefix = s;
          for (int d = 0; d < dim; ++d) {
            double e = acc[std::size_t(d)] / double(s) - (*moments)[std::size_t(d)];
            p.l2 += e * e;
            p.linf = std::max(p.linf, std::abs(e));
          }
          p.l2 = std::sqrt(p.l2);
          p.bound = 2.0 * t.max_weight_norm_inf / double(s);
          rep.moment_error.push_back(p);
          while (next_mark <= s) {
            next_mark = (long long)std::ceil(next_mark * std::pow(10.0, 1.0 / 8.0));
            if (next_mark <= s) next_mark = s + 1;
          }
        }
      }
      try {
        rep.moment_error_slope = herd::diag::moment_error_slope(rep.moment_error, 100, t.steps);
      } catch (const ConfigError&) {
        // short trace, slope stays unset
      }
    }
    if (!t.feature_sum.empty() && t.feature_sum.size() == moments->size()) {
      double fin = 0.0;
      for (std::size_t d = 0; d < moments->size(); ++d) {
        fin = std::max(fin, std::abs(t.feature_sum[d] / double(t.steps) - (*moments)[d]));
      }
      extra["final_moment_error_inf"] = fin;
    }
  }

  json out = herd::io::report_to_json(rep);
  out["config"] = cfg;
  out["trace_meta"] = t.meta;
  for (auto& [k, v] : extra.items()) out[k] = v;
  herd::io::write_report_json(cfg.at("report"), out);

  std::cout << "diagnose: steps=" << t.steps << " period=" << rep.period
            << " pct_violations=" << rep.pct_violations;
  if (extra.contains("final_moment_error_inf")) {
    std::cout << " moment_err_inf=" << fmt((double)extra["final_moment_error_inf"]);
  }
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic herding dynamics"};
  app.require_subcommand(1);

  // herd
  auto* c_herd = app.add_subcommand("herd", "run the weight dynamics on a sampled model");
  CfgBuilder b_herd(c_herd);
  b_herd.cfg = {{"model", "random:D=4,K=2,seed=1"}, {"steps", 10000}, {"eta", 1.0},
                {"w0", "moments"}, {"snapshot_stride", 100}, {"verify_pct", nullptr},
                {"strict_pct", false}, {"out", ""}};
  std::string h_model = b_herd.cfg["model"], h_w0 = b_herd.cfg["w0"], h_out;
  long long h_steps = b_herd.cfg["steps"];
  double h_eta = b_herd.cfg["eta"];
  long long h_stride = b_herd.cfg["snapshot_stride"];
  bool h_verify = false, h_strict = false;
  c_herd->add_option("--model", h_model, "model spec, random:D=..,K=..,seed=..[,scale=..]");
  c_herd->add_option("--steps", h_steps, "herding steps");
  c_herd->add_option("--eta", h_eta, "learning rate");
  c_herd->add_option("--w0", h_w0, "start weights: moments, model, or zero");
  c_herd->add_option("--snapshot-stride", h_stride, "steps between weight snapshots");
  c_herd->add_flag("--verify-pct", h_verify, "force the cycling check on");
  c_herd->add_flag("--strict-pct", h_strict, "cycling violations abort the run");
  c_herd->add_option("--out", h_out, "trace csv path");
  c_herd->callback([&] {
    b_herd.fold({{"model", "--model", h_model},
                 {"steps", "--steps", h_steps},
                 {"eta", "--eta", h_eta},
                 {"w0", "--w0", h_w0},
                 {"snapshot_stride", "--snapshot-stride", h_stride},
                 {"verify_pct", "--verify-pct", h_verify},
                 {"strict_pct", "--strict-pct", h_strict},
                 {"out", "--out", h_out}});
    cmd_herd(b_herd.cfg);
  });

  // neuron
  auto* c_neu = app.add_subcommand("neuron", "single threshold unit");
  CfgBuilder b_neu(c_neu);
  b_neu.cfg = {{"pi", "golden"}, {"w0", "rabbit"}, {"steps", 1000},
               {"snapshot_stride", 100}, {"out", ""}};
  std::string n_pi = b_neu.cfg["pi"], n_w0 = b_neu.cfg["w0"], n_out;
  long long n_steps = b_neu.cfg["steps"], n_stride = b_neu.cfg["snapshot_stride"];
  c_neu->add_option("--pi", n_pi, "target rate, a number or 'golden'");
  c_neu->add_option("--w0", n_w0, "start weight: a number, 'rabbit' (2 pi - 1), or 'half' (pi - 1/2)");
  c_neu->add_option("--steps", n_steps, "herding steps");
  c_neu->add_option("--snapshot-stride", n_stride, "steps between weight snapshots");
  c_neu->add_option("--out", n_out, "trace csv path");
  c_neu->callback([&] {
    b_neu.fold({{"pi", "--pi", n_pi},
                {"w0", "--w0", n_w0},
                {"steps", "--steps", n_steps},
                {"snapshot_stride", "--snapshot-stride", n_stride},
                {"out", "--out", n_out}});
    cmd_neuron(b_neu.cfg);
  });

  // multinomial
  auto* c_mul = app.add_subcommand("multinomial", "single discrete variable");
  CfgBuilder b_mul(c_mul);
  b_mul.cfg = {{"pi", "uniform:4"}, {"w0", "pi"}, {"steps", 1000}, {"out", ""}};
  std::string m_pi = b_mul.cfg["pi"], m_w0 = b_mul.cfg["w0"], m_out;
  long long m_steps = b_mul.cfg["steps"];
  c_mul->add_option("--pi", m_pi, "target distribution: comma list or uniform:D");
  c_mul->add_option("--w0", m_w0, "start weights: comma list or 'pi'");
  c_mul->add_option("--steps", m_steps, "herding steps");
  c_mul->add_option("--out", m_out, "trace csv path");
  c_mul->callback([&] {
    b_mul.fold({{"pi", "--pi", m_pi},
                {"w0", "--w0", m_w0},
                {"steps", "--steps", m_steps},
                {"out", "--out", m_out}});
    cmd_multinomial(b_mul.cfg);
  });

  // bifurcate
  auto* c_bif = app.add_subcommand("bifurcate", "period of the tempered map per temperature");
  CfgBuilder b_bif(c_bif);
  b_bif.cfg = {{"model", "random:D=4,K=2,seed=1"}, {"t_grid", "0.05:0.5:200"}, {"w0", "moments"},
               {"burn_in", 2000}, {"max_period", 1024}, {"confirm", 100}, {"tol", 1e-8},
               {"out", ""}};
  std::string f_model = b_bif.cfg["model"], f_grid = b_bif.cfg["t_grid"], f_w0 = b_bif.cfg["w0"],
              f_out;
  long long f_burn = b_bif.cfg["burn_in"];
  long long f_maxp = b_bif.cfg["max_period"], f_conf = b_bif.cfg["confirm"];
  double f_tol = b_bif.cfg["tol"];
  c_bif->add_option("--model", f_model, "model spec, random:D=..,K=..,seed=..");
  c_bif->add_option("--t-grid", f_grid, "temperature grid lo:hi:count");
  c_bif->add_option("--w0", f_w0, "start weights: moments, model, or zero");
  c_bif->add_option("--burn-in", f_burn, "map iterations before the probe window");
  c_bif->add_option("--max-period", f_maxp, "largest period to look for");
  c_bif->add_option("--confirm", f_conf, "consecutive confirmations required");
  c_bif->add_option("--tol", f_tol, "weight distance treated as a revisit");
  c_bif->add_option("--out", f_out, "csv path, rows temperature,period");
  c_bif->callback([&] {
    b_bif.fold({{"model", "--model", f_model},
                {"t_grid", "--t-grid", f_grid},
                {"w0", "--w0", f_w0},
                {"burn_in", "--burn-in", f_burn},
                {"max_period", "--max-period", f_maxp},
                {"confirm", "--confirm", f_conf},
                {"tol", "--tol", f_tol},
                {"out", "--out", f_out}});
    cmd_bifurcate(b_bif.cfg);
  });

  // pomrf
  auto* c_pom = app.add_subcommand("pomrf", "partially observed model, hidden units per case");
  CfgBuilder b_pom(c_pom);
  b_pom.cfg = {{"data", ""}, {"hidden", 1}, {"hidden_bias", true}, {"variant", "full"},
               {"steps", 10000}, {"minibatch", 0}, {"max_sweeps", 100}, {"exact_clamped", true},
               {"exact_joint", true}, {"verify_pct", true}, {"strict_pct", false},
               {"snapshot_stride", 100}, {"w0_sigma", 0.0}, {"seed", 1}, {"out", ""}};
  std::string p_data, p_variant = b_pom.cfg["variant"], p_out;
  long long p_hidden = b_pom.cfg["hidden"], p_steps = b_pom.cfg["steps"];
  long long p_mini = b_pom.cfg["minibatch"], p_sweeps = b_pom.cfg["max_sweeps"];
  long long p_stride = b_pom.cfg["snapshot_stride"], p_seed = b_pom.cfg["seed"];
  double p_sigma = b_pom.cfg["w0_sigma"];
  bool p_no_bias = false, p_approx_clamped = false, p_approx_joint = false;
  bool p_no_verify = false, p_strict = false;
  c_pom->add_option("--data", p_data, "csv of -1/+1 visible rows")->required();
  c_pom->add_option("--hidden", p_hidden, "hidden units per case");
  c_pom->add_flag("--no-hidden-bias", p_no_bias, "drop the hidden bias features");
  c_pom->add_option("--variant", p_variant, "full or tractable");
  c_pom->add_option("--steps", p_steps, "herding steps");
  c_pom->add_option("--minibatch", p_mini, "cases per step, 0 for all");
  c_pom->add_option("--max-sweeps", p_sweeps, "coordinate ascent sweep cap");
  c_pom->add_flag("--approx-clamped", p_approx_clamped, "coordinate ascent for the clamped phase");
  c_pom->add_flag("--approx-joint", p_approx_joint, "coordinate ascent for the joint phase");
  c_pom->add_flag("--no-verify-pct", p_no_verify, "skip the cycling check");
  c_pom->add_flag("--strict-pct", p_strict, "cycling violations abort the run");
  c_pom->add_option("--snapshot-stride", p_stride, "steps between weight snapshots");
  c_pom->add_option("--w0-sigma", p_sigma, "gaussian start weight scale, 0 for zeros");
  c_pom->add_option("--seed", p_seed, "seed for the start weights");
  c_pom->add_option("--out", p_out, "trace csv path");
  c_pom->callback([&] {
    b_pom.fold({{"data", "--data", p_data},
                {"hidden", "--hidden", p_hidden},
                {"hidden_bias", "--no-hidden-bias", !p_no_bias},
                {"variant", "--variant", p_variant},
                {"steps", "--steps", p_steps},
                {"minibatch", "--minibatch", p_mini},
                {"max_sweeps", "--max-sweeps", p_sweeps},
                {"exact_clamped", "--approx-clamped", !p_approx_clamped},
                {"exact_joint", "--approx-joint", !p_approx_joint},
                {"verify_pct", "--no-verify-pct", !p_no_verify},
                {"strict_pct", "--strict-pct", p_strict},
                {"snapshot_stride", "--snapshot-stride", p_stride},
                {"w0_sigma", "--w0-sigma", p_sigma},
                {"seed", "--seed", p_seed},
                {"out", "--out", p_out}});
    cmd_pomrf(b_pom.cfg);
  });

  // cond
  auto* c_cond = app.add_subcommand("cond", "conditional herding classifier");
  CfgBuilder b_cond(c_cond);
  b_cond.cfg = {{"train", ""}, {"test", ""}, {"procedure", "joint"}, {"hidden", 10},
                {"steps", 10000}, {"minibatch", 1}, {"burn_in", 1000}, {"seed", 1},
                {"sigma", 1.0}, {"eta", 1.0}, {"entropy_schedule", false}, {"lambda0", 1.0},
                {"halve_every", 500}, {"normalize", false}, {"verify_pct", true},
                {"strict_pct", false}, {"report", ""}};
  std::string d_train, d_test, d_proc = b_cond.cfg["procedure"], d_report;
  long long d_hidden = b_cond.cfg["hidden"], d_steps = b_cond.cfg["steps"];
  long long d_mini = b_cond.cfg["minibatch"], d_burn = b_cond.cfg["burn_in"];
  long long d_seed = b_cond.cfg["seed"], d_halve = b_cond.cfg["halve_every"];
  double d_sigma = b_cond.cfg["sigma"], d_eta = b_cond.cfg["eta"], d_l0 = b_cond.cfg["lambda0"];
  bool d_entropy = false, d_norm = false, d_no_verify = false, d_strict = false;
  c_cond->add_option("--train", d_train, "labeled csv or moons:per_class=..,noise=..,seed=..")
      ->required();
  c_cond->add_option("--test", d_test, "labeled csv or moons:...")->required();
  c_cond->add_option("--procedure", d_proc, "joint, ova, or perceptron");
  c_cond->add_option("--hidden", d_hidden, "hidden units");
  c_cond->add_option("--steps", d_steps, "update steps");
  c_cond->add_option("--minibatch", d_mini, "cases per update, 0 for all");
  c_cond->add_option("--burn-in", d_burn, "updates before votes count");
  c_cond->add_option("--seed", d_seed, "init seed");
  c_cond->add_option("--sigma", d_sigma, "init scale");
  c_cond->add_option("--eta", d_eta, "learning rate scale");
  c_cond->add_flag("--entropy-schedule", d_entropy, "anneal the hidden bias exploration term");
  c_cond->add_option("--lambda0", d_l0, "schedule start value");
  c_cond->add_option("--halve-every", d_halve, "updates per halving");
  c_cond->add_flag("--normalize", d_norm, "append the norm-completing feature");
  c_cond->add_flag("--no-verify-pct", d_no_verify, "skip the cycling check");
  c_cond->add_flag("--strict-pct", d_strict, "cycling violations abort the run");
  c_cond->add_option("--report", d_report, "json report path");
  c_cond->callback([&] {
    b_cond.fold({{"train", "--train", d_train},
                 {"test", "--test", d_test},
                 {"procedure", "--procedure", d_proc},
                 {"hidden", "--hidden", d_hidden},
                 {"steps", "--steps", d_steps},
                 {"minibatch", "--minibatch", d_mini},
                 {"burn_in", "--burn-in", d_burn},
                 {"seed", "--seed", d_seed},
                 {"sigma", "--sigma", d_sigma},
                 {"eta", "--eta", d_eta},
                 {"entropy_schedule", "--entropy-schedule", d_entropy},
                 {"lambda0", "--lambda0", d_l0},
                 {"halve_every", "--halve-every", d_halve},
                 {"normalize", "--normalize", d_norm},
                 {"verify_pct", "--no-verify-pct", !d_no_verify},
                 {"strict_pct", "--strict-pct", d_strict},
                 {"report", "--report", d_report}});
    cmd_cond(b_cond.cfg);
  });

  // ising
  auto* c_isg = app.add_subcommand("ising", "lattice moments by specialized herding");
  CfgBuilder b_isg(c_isg);
  b_isg.cfg = {{"rows", 16}, {"cols", 16}, {"beta", herd::models::kIsingCriticalBeta},
               {"node_target", nullptr}, {"edge_target", nullptr}, {"sw_steps", 2000},
               {"sw_seed", 1}, {"steps", 10000}, {"max_sweeps", 50}, {"strict_pct", false},
               {"spin_stride", 0}, {"report", ""}};
  long long i_rows = b_isg.cfg["rows"], i_cols = b_isg.cfg["cols"];
  long long i_sw_steps = b_isg.cfg["sw_steps"], i_sw_seed = b_isg.cfg["sw_seed"];
  long long i_steps = b_isg.cfg["steps"], i_sweeps = b_isg.cfg["max_sweeps"];
  long long i_spin_stride = b_isg.cfg["spin_stride"];
  double i_beta = b_isg.cfg["beta"], i_node = 0.0, i_edge = 0.0;
  bool i_strict = false;
  std::string i_report;
  c_isg->add_option("--rows", i_rows, "lattice rows, 3 or more");
  c_isg->add_option("--cols", i_cols, "lattice cols, 3 or more");
  c_isg->add_option("--beta", i_beta, "inverse temperature for the oracle targets");
  c_isg->add_option("--node-target", i_node, "explicit node moment, with --edge-target");
  c_isg->add_option("--edge-target", i_edge, "explicit edge moment, with --node-target");
  c_isg->add_option("--sw-steps", i_sw_steps, "oracle sampler steps");
  c_isg->add_option("--sw-seed", i_sw_seed, "oracle sampler seed");
  c_isg->add_option("--steps", i_steps, "herding steps");
  c_isg->add_option("--max-sweeps", i_sweeps, "descent sweep cap per step");
  c_isg->add_flag("--strict-pct", i_strict, "cycling violations abort the run");
  c_isg->add_option("--spin-stride", i_spin_stride, "steps between kept spin snapshots");
  c_isg->add_option("--report", i_report, "json report path");
  c_isg->callback([&] {
    b_isg.fold({{"rows", "--rows", i_rows},
                {"cols", "--cols", i_cols},
                {"beta", "--beta", i_beta},
                {"node_target", "--node-target", i_node},
                {"edge_target", "--edge-target", i_edge},
                {"sw_steps", "--sw-steps", i_sw_steps},
                {"sw_seed", "--sw-seed", i_sw_seed},
                {"steps", "--steps", i_steps},
                {"max_sweeps", "--max-sweeps", i_sweeps},
                {"strict_pct", "--strict-pct", i_strict},
                {"spin_stride", "--spin-stride", i_spin_stride},
                {"report", "--report", i_report}});
    if (b_isg.cfg["node_target"].is_null() != b_isg.cfg["edge_target"].is_null()) {
      throw ConfigError("ising: --node-target and --edge-target go together");
    }
    // keep the last spins around for the component histogram
    if (b_isg.cfg["spin_stride"] == 0) b_isg.cfg["spin_stride"] = b_isg.cfg["steps"];
    cmd_ising(b_isg.cfg);
  });

  // diagnose
  auto* c_dia = app.add_subcommand("diagnose", "analyze a written trace");
  CfgBuilder b_dia(c_dia);
  b_dia.cfg = {{"trace", ""}, {"report", ""}, {"moments", ""}, {"max_lag", 50},
               {"complexity_max_len", 8}};
  std::string g_trace, g_report, g_moments;
  long long g_lag = b_dia.cfg["max_lag"], g_clen = b_dia.cfg["complexity_max_len"];
  c_dia->add_option("--trace", g_trace, "trace csv to read")->required();
  c_dia->add_option("--report", g_report, "json report path")->required();
  c_dia->add_option("--moments", g_moments, "moments csv for the final error");
  c_dia->add_option("--max-lag", g_lag, "autocorrelation lags");
  c_dia->add_option("--complexity-max-len", g_clen, "longest window counted");
  c_dia->callback([&] {
    b_dia.fold({{"trace", "--trace", g_trace},
                {"report", "--report", g_report},
                {"moments", "--moments", g_moments},
                {"max_lag", "--max-lag", g_lag},
                {"complexity_max_len", "--complexity-max-len", g_clen}});
    cmd_diagnose(b_dia.cfg);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const herd::RunError& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
