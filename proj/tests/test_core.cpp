#include <catch2/catch_amalgamated.hpp>

#include "herding.hpp"

using namespace herd;

namespace {

// 1-of-D features on a single D-valued variable
FeatureMap one_of(int d) {
  FeatureMap fm;
  fm.space = StateSpace::single(d);
  fm.dim = d;
  fm.norm_bound = 1.0;
  fm.eval = [d](const Assignment& a) {
    Vec f((std::size_t)d, 0.0);
    f[std::size_t(a[0])] = 1.0;
    return f;
  };
  return fm;
}

FeatureMap scalar_identity() {
  FeatureMap fm;
  fm.space = StateSpace::binary(1);
  fm.dim = 1;
  fm.eval = [](const Assignment& a) { return Vec{double(a[0])}; };
  return fm;
}

}  // namespace

TEST_CASE("state space indexing round trips", "[core]") {
  StateSpace sp({2, 3, 2});
  REQUIRE(sp.count() == 12);
  for (long long i = 0; i < sp.count(); ++i) {
    REQUIRE(sp.index_of(sp.assignment_of(i)) == i);
  }
  REQUIRE(sp.assignment_of(0) == Assignment{0, 0, 0});
  // variable 0 is the least significant digit
  REQUIRE(sp.assignment_of(1) == Assignment{1, 0, 0});
  REQUIRE(sp.assignment_of(2) == Assignment{0, 1, 0});

  StateSpace joined = StateSpace({2}).joined(StateSpace({3}));
  REQUIRE(joined.cards == std::vector<int>{2, 3});
}

TEST_CASE("one threshold unit, one update", "[core]") {
  FeatureMap fm = scalar_identity();
  MomentVector mom = make_moments({0.618034}, MomentProvenance::Analytic, fm);
  Maximizer maxer = Maximizer::exact(fm);
  Vec w{0.236068};
  HerdOptions opt;
  StepResult r = herd_step(w, mom, maxer, opt);
  REQUIRE(r.state.values == Assignment{1});
  REQUIRE_THAT(w[0], Catch::Matchers::WithinAbs(-0.145898, 1e-9));
}

TEST_CASE("three-state cycle with dyadic targets is exact", "[core]") {
  // pi = (1/2, 1/4, 1/4), w0 = pi: the orbit is 0,1,2,0 repeating and the
  // weights return to w0 exactly because every value is a dyadic rational.
  FeatureMap fm = one_of(3);
  MomentVector mom = make_moments({0.5, 0.25, 0.25}, MomentProvenance::Analytic, fm);
  Maximizer maxer = Maximizer::exact(fm);
  HerdOptions opt;
  opt.snapshot_stride = 1;
  HerdingTrace tr = herd_run({0.5, 0.25, 0.25}, mom, maxer, 8, opt);
  REQUIRE(tr.sample_indices == std::vector<long long>{0, 1, 2, 0, 0, 1, 2, 0});
  REQUIRE(tr.w_final == Vec{0.5, 0.25, 0.25});
  REQUIRE(tr.running_feature_sum == Vec{4.0, 2.0, 2.0});
}

TEST_CASE("tipi value at the two-state example", "[core]") {
  FeatureMap fm = scalar_identity();
  FeatureTable tab(fm);
  MomentVector mom = make_moments({0.5}, MomentProvenance::Analytic, fm);
  REQUIRE(tipi_value({1.0}, mom, tab) == -0.5);
  REQUIRE(tipi_value({0.0}, mom, tab) == 0.0);
}

TEST_CASE("tipi function is concave, scale-free, non-positive", "[core]") {
  models::RandomModel m = models::random_mrf({.num_states = 6, .dim = 3, .seed = 11});
  Rng rng(42);
  auto rand_w = [&] {
    Vec w(3);
    for (double& x : w) x = rng.normal();
    return w;
  };
  for (int rep = 0; rep < 200; ++rep) {
    Vec a = rand_w(), b = rand_w();
    for (double lam : {0.25, 0.5, 0.75}) {
      Vec mid(3);
      for (int d = 0; d < 3; ++d) mid[std::size_t(d)] = lam * a[std::size_t(d)] + (1 - lam) * b[std::size_t(d)];
      double lhs = tipi_value(mid, m.moments, m.table);
      double rhs = lam * tipi_value(a, m.moments, m.table) + (1 - lam) * tipi_value(b, m.moments, m.table);
      REQUIRE(lhs >= rhs - 1e-12);
    }
    // positively homogeneous: scaling w scales the value
    double base = tipi_value(a, m.moments, m.table);
    for (double c : {0.5, 2.0, 7.25}) {
      Vec ca(3);
      for (int d = 0; d < 3; ++d) ca[std::size_t(d)] = c * a[std::size_t(d)];
      REQUIRE_THAT(tipi_value(ca, m.moments, m.table), Catch::Matchers::WithinAbs(c * base, 1e-12 * (1 + std::abs(base))));
    }
    REQUIRE(tipi_value(a, m.moments, m.table) <= 1e-15);
  }
}

TEST_CASE("weight identity over a long run", "[core]") {
  models::RandomModel m = models::random_mrf({.num_states = 6, .dim = 3, .seed = 5});
  Maximizer maxer = Maximizer::exact(m.fmap);
  const long long T = 1000;
  HerdingTrace tr = herd_run(m.moments.values, m.moments, maxer, T, {});
  // w_T = w_0 + T phibar - sum phi(s_t), up to accumulation error
  for (int d = 0; d < 3; ++d) {
    double expect = m.moments.values[std::size_t(d)] + double(T) * m.moments.values[std::size_t(d)] -
                    tr.running_feature_sum[std::size_t(d)];
    REQUIRE_THAT(tr.w_final[std::size_t(d)], Catch::Matchers::WithinAbs(expect, 1e-9));
  }
}

TEST_CASE("scaling w0 and the rate together leaves samples unchanged", "[core]") {
  models::RandomModel m = models::random_mrf({.num_states = 5, .dim = 4, .seed = 3});
  Maximizer maxer = Maximizer::exact(m.fmap);
  HerdingTrace base = herd_run(m.moments.values, m.moments, maxer, 500, {});
  for (double eta : {0.5, 2.0, 4.0}) {
    // powers of two keep every product exact, so equality is bitwise
    Vec w0 = m.moments.values;
    for (double& x : w0) x *= eta;
    HerdOptions opt;
    opt.learning_rate = eta;
    Maximizer maxer2 = Maximizer::exact(m.fmap);
    HerdingTrace tr = herd_run(w0, m.moments, maxer2, 500, opt);
    REQUIRE(tr.sample_indices == base.sample_indices);
  }
}

TEST_CASE("with w0 at the target the samples greedily shrink the moment error", "[core]") {
  // constant-norm features and w0 = phibar make each herding choice the
  // greedy minimizer of || phibar - running average ||^2
  FeatureMap fm = one_of(5);
  Vec pi{0.4, 0.25, 0.15, 0.12, 0.08};
  MomentVector mom = make_moments(pi, MomentProvenance::Analytic, fm);
  Maximizer maxer = Maximizer::exact(fm);
  HerdOptions opt;
  opt.record_samples = true;
  HerdingTrace tr = herd_run(pi, mom, maxer, 200, opt);

  Vec sum(5, 0.0);
  for (long long t = 0; t < 200; ++t) {
    long long chosen = tr.sample_indices[std::size_t(t)];
    double best = std::numeric_limits<double>::infinity();
    double chosen_err = 0.0;
    for (long long s = 0; s < 5; ++s) {
      double err = 0.0;
      for (int d = 0; d < 5; ++d) {
        double avg = (sum[std::size_t(d)] + (s == d ? 1.0 : 0.0)) / double(t + 1);
        err += (pi[std::size_t(d)] - avg) * (pi[std::size_t(d)] - avg);
      }
      best = std::min(best, err);
      if (s == chosen) chosen_err = err;
    }
    REQUIRE_THAT(chosen_err, Catch::Matchers::WithinAbs(best, 1e-12));
    sum[std::size_t(chosen)] += 1.0;
  }
}

TEST_CASE("weights stay bounded and the cycling check stays clean", "[core]") {
  models::RandomModel m = models::random_mrf({.num_states = 6, .dim = 4, .seed = 9});
  Maximizer maxer = Maximizer::exact(m.fmap);
  HerdOptions opt;
  opt.verify_pct = true;  // force the check on even though the maximizer is exact
  const long long T = 10000;
  HerdingTrace tr = herd_run(m.moments.values, m.moments, maxer, T, opt);
  REQUIRE(tr.pct_checked == T);
  REQUIRE(tr.pct_violations.empty());
  double first = 0.0, second = 0.0;
  for (long long t = 0; t <= T; ++t) {
    double v = tr.weight_norm2[std::size_t(t)];
    (t <= T / 2 ? first : second) = std::max(t <= T / 2 ? first : second, v);
  }
  REQUIRE(second <= first + 1e-9);
}

TEST_CASE("targets outside the reachable hull are rejected", "[core]") {
  FeatureMap fm = one_of(3);
  REQUIRE_NOTHROW(make_moments({0.5, 0.25, 0.25}, MomentProvenance::Analytic, fm));
  // components of a 1-of-3 average must sum to one
  REQUIRE_THROWS_AS(make_moments({0.7, 0.2, 0.2}, MomentProvenance::Analytic, fm), ConfigError);
  REQUIRE_THROWS_AS(make_moments({1.2, -0.1, -0.1}, MomentProvenance::Analytic, fm), ConfigError);
}

TEST_CASE("convex hull membership on the unit square", "[core]") {
  FeatureMap fm;
  fm.space = StateSpace::binary(2);
  fm.dim = 2;
  fm.eval = [](const Assignment& a) { return Vec{double(a[0]), double(a[1])}; };
  FeatureTable tab(fm);
  REQUIRE(in_convex_hull(tab, {0.5, 0.5}));
  REQUIRE(in_convex_hull(tab, {0.0, 0.0}));
  REQUIRE(in_convex_hull(tab, {1.0, 1.0}));
  REQUIRE(!in_convex_hull(tab, {1.2, 0.5}));
  REQUIRE(!in_convex_hull(tab, {0.5, -0.01}));
}

TEST_CASE("snapshots land on the stride plus both endpoints", "[core]") {
  models::RandomModel m = models::random_mrf({.num_states = 4, .dim = 2, .seed = 2});
  Maximizer maxer = Maximizer::exact(m.fmap);
  HerdOptions opt;
  opt.snapshot_stride = 30;
  HerdingTrace tr = herd_run(m.moments.values, m.moments, maxer, 100, opt);
  std::vector<long long> at;
  for (const auto& [s, w] : tr.weight_snapshots) at.push_back(s);
  REQUIRE(at == std::vector<long long>{0, 30, 60, 90, 100});
  REQUIRE(tr.weight_snapshots.front().second == tr.w0);
  REQUIRE(tr.weight_snapshots.back().second == tr.w_final);
  REQUIRE((long long)tr.weight_norm_inf.size() == 101);
}

TEST_CASE("exact maximizer takes the lowest index on ties", "[core]") {
  FeatureMap fm;
  fm.space = StateSpace::single(4);
  fm.dim = 1;
  fm.eval = [](const Assignment& a) { return Vec{a[0] == 1 || a[0] == 2 ? 1.0 : 0.0}; };
  Maximizer maxer = Maximizer::exact(fm);
  REQUIRE(maxer.maximize({1.0}).state.values == Assignment{1});
}

TEST_CASE("coordinate ascent improves monotonically to a local maximum", "[core]") {
  models::RandomModel m = models::random_mrf({.num_states = 3, .dim = 3, .seed = 17});
  FeatureMap pair;
  pair.space = StateSpace({3, 3});
  pair.dim = 3;
  auto base = m.fmap.eval;
  pair.eval = [base](const Assignment& a) {
    Vec f1 = base({a[0]});
    Vec f2 = base({a[1]});
    for (std::size_t d = 0; d < f1.size(); ++d) f1[d] += 0.5 * f2[d];
    return f1;
  };
  Maximizer exact = Maximizer::exact(pair);
  Maximizer ca = Maximizer::coordinate_ascent(pair, {0, 0});
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    Vec w{rng.normal(), rng.normal(), rng.normal()};
    auto r = ca.maximize(w);
    // a local max: no single-variable change scores higher
    for (int v = 0; v < 2; ++v) {
      for (int val = 0; val < 3; ++val) {
        Assignment alt = r.state.values;
        alt[std::size_t(v)] = val;
        Vec f = pair.eval(alt);
        REQUIRE(dot(w, f) <= r.score + 1e-12);
      }
    }
    REQUIRE(r.score <= exact.maximize(w).score + 1e-12);
  }
}

TEST_CASE("tempered expectations interpolate mean and max", "[core]") {
  models::RandomModel m = models::random_mrf({.num_states = 4, .dim = 2, .seed = 7});
  Vec w = m.true_weights;
  Vec hot = expected_features_at_temperature(w, m.table, 1e6);
  Vec mean = m.table.mean_row();
  for (int d = 0; d < 2; ++d) {
    REQUIRE_THAT(hot[std::size_t(d)], Catch::Matchers::WithinAbs(mean[std::size_t(d)], 1e-4));
  }
  Vec cold = expected_features_at_temperature(w, m.table, 1e-6);
  Maximizer maxer = Maximizer::exact(m.fmap);
  Vec best = maxer.maximize(w).features;
  for (int d = 0; d < 2; ++d) {
    REQUIRE_THAT(cold[std::size_t(d)], Catch::Matchers::WithinAbs(best[std::size_t(d)], 1e-6));
  }
}

TEST_CASE("period detector reads constructed cycles", "[core]") {
  std::vector<Vec> window;
  for (int t = 0; t < 400; ++t) window.push_back({double(t % 3), 1.0});
  REQUIRE(detect_period_window(window, 16, 50) == 3);
  std::vector<Vec> fixed(400, Vec{0.5});
  REQUIRE(detect_period_window(fixed, 16, 50) == 1);
  std::vector<Vec> drift;
  for (int t = 0; t < 400; ++t) drift.push_back({double(t) * 0.001});
  REQUIRE(detect_period_window(drift, 16, 50) == 0);
}

TEST_CASE("strict mode turns a forced violation into an error", "[core]") {
  // a data-initialized maximizer given a deliberately bad init list can
  // return a state the current weights score badly, breaking the margin
  FeatureMap fm = one_of(3);
  MomentVector mom = make_moments({0.5, 0.25, 0.25}, MomentProvenance::Analytic, fm);
  Maximizer bad = Maximizer::data_initialized(fm, {Assignment{2}}, 0);
  Vec w{1.0, 0.0, -1.0};
  HerdOptions opt;
  opt.verify_pct = true;
  opt.strict_pct = true;
  REQUIRE_THROWS_AS(herd_step(w, mom, bad, opt), PctViolationError);
}
