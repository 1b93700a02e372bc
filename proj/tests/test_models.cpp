#include <catch2/catch_amalgamated.hpp>

#include "herding.hpp"

using namespace herd;
using namespace herd::models;

namespace {

// exact Boltzmann moments for a small lattice by full enumeration
struct ExactIsing {
  double edge_moment;
  double node_moment;
};

ExactIsing enumerate_ising(const IsingLattice& lat, double beta) {
  const int n = lat.sites();
  REQUIRE(n <= 20);
  const auto& edges = lat.edges();
  double z = 0.0, edge_acc = 0.0, node_acc = 0.0;
  for (long long mask = 0; mask < (1LL << n); ++mask) {
    double energy_sum = 0.0;
    for (const auto& e : edges) {
      int sa = (mask >> e.a) & 1 ? 1 : -1;
      int sb = (mask >> e.b) & 1 ? 1 : -1;
      energy_sum += double(sa * sb);
    }
    double weight = std::exp(beta * energy_sum);
    z += weight;
    edge_acc += weight * energy_sum / double(edges.size());
    double s_mean = 0.0;
    for (int i = 0; i < n; ++i) s_mean += (mask >> i) & 1 ? 1.0 : -1.0;
    node_acc += weight * s_mean / double(n);
  }
  return {edge_acc / z, node_acc / z};
}

}  // namespace

TEST_CASE("random models rebuild bit for bit from the seed", "[models]") {
  RandomModel a = random_mrf({.num_states = 5, .dim = 3, .seed = 77});
  RandomModel b = random_mrf({.num_states = 5, .dim = 3, .seed = 77});
  REQUIRE(a.true_weights == b.true_weights);
  REQUIRE(a.moments.values == b.moments.values);
  for (long long r = 0; r < 5; ++r) {
    REQUIRE(a.table.row_vec(r) == b.table.row_vec(r));
  }
  RandomModel c = random_mrf({.num_states = 5, .dim = 3, .seed = 78});
  REQUIRE(a.true_weights != c.true_weights);
}

TEST_CASE("model moments are reachable averages", "[models]") {
  // make_moments would have thrown if the tempered mean left the hull
  RandomModel m = random_mrf({.num_states = 8, .dim = 4, .seed = 12});
  REQUIRE(m.moments.provenance == MomentProvenance::Analytic);
  REQUIRE(in_convex_hull(m.table, m.moments.values));
}

TEST_CASE("lattice wiring: periodic grid degrees and counts", "[models]") {
  IsingLattice lat(3, 3, true);
  REQUIRE(lat.sites() == 9);
  REQUIRE((int)lat.edges().size() == 18);
  std::vector<int> degree(9, 0);
  for (const auto& e : lat.edges()) {
    ++degree[std::size_t(e.a)];
    ++degree[std::size_t(e.b)];
  }
  for (int d : degree) REQUIRE(d == 4);
  REQUIRE(lat.site(1, 2) == 5);
  REQUIRE_THROWS_AS(IsingLattice(2, 3, true), ConfigError);
}

TEST_CASE("cluster sampler matches exact enumeration on 3x3", "[models]") {
  IsingLattice lat(3, 3, true);
  const double beta = 0.3;
  ExactIsing exact = enumerate_ising(lat, beta);
  SwResult sw = swendsen_wang_sample(lat, beta, 20000, 123);
  REQUIRE(sw.edge_moment_se > 0.0);
  REQUIRE(std::abs(sw.edge_moment - exact.edge_moment) <= 3.0 * sw.edge_moment_se);
  // by symmetry the node moment vanishes
  REQUIRE_THAT(exact.node_moment, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("cluster sampler hits both temperature limits", "[models]") {
  IsingLattice lat(4, 4, true);
  SwResult hot = swendsen_wang_sample(lat, 1e-9, 4000, 7);
  REQUIRE(std::abs(hot.edge_moment) < 0.05);
  SwResult cold = swendsen_wang_sample(lat, 10.0, 2000, 7);
  REQUIRE(std::abs(cold.edge_moment) > 0.999);
}

TEST_CASE("cluster sampler is seed-deterministic", "[models]") {
  IsingLattice lat(4, 4, true);
  SwResult a = swendsen_wang_sample(lat, kIsingCriticalBeta, 2000, 99);
  SwResult b = swendsen_wang_sample(lat, kIsingCriticalBeta, 2000, 99);
  REQUIRE(a.edge_moment == b.edge_moment);
  REQUIRE(a.final_spins == b.final_spins);
}

TEST_CASE("lattice herding reproduces exact targets within the running bound", "[models]") {
  IsingLattice lat(4, 4, true);
  const double beta = 0.3;
  ExactIsing exact = enumerate_ising(lat, beta);
  IsingHerdConfig cfg;
  cfg.node_target = exact.node_moment;
  cfg.edge_target = exact.edge_moment;
  cfg.steps = 5000;
  IsingHerdTrace tr = ising_herd_run(lat, cfg);
  double bound = 2.0 * tr.max_weight_norm_inf / double(cfg.steps);
  REQUIRE(std::abs(tr.grand_edge_mean - exact.edge_moment) <= bound + 1e-12);
  REQUIRE(std::abs(tr.grand_node_mean - exact.node_moment) <= bound + 1e-12);
  REQUIRE(tr.pct_checked == cfg.steps);
  REQUIRE(std::isfinite(tr.max_weight_norm_inf));
  REQUIRE(tr.total_sweeps >= cfg.steps);
}

TEST_CASE("lattice herding is fully deterministic", "[models]") {
  IsingLattice lat(5, 5, true);
  IsingHerdConfig cfg;
  cfg.node_target = 0.0;
  cfg.edge_target = 0.4;
  cfg.steps = 2000;
  IsingHerdTrace a = ising_herd_run(lat, cfg);
  IsingHerdTrace b = ising_herd_run(lat, cfg);
  REQUIRE(a.grand_edge_mean == b.grand_edge_mean);
  REQUIRE(a.edge_mean == b.edge_mean);
}

TEST_CASE("component machinery on hand-built spin fields", "[models]") {
  IsingLattice lat(3, 3, true);
  std::vector<std::int8_t> aligned(9, 1);
  auto sizes = component_sizes(lat, aligned);
  REQUIRE(sizes == std::vector<long long>{9});

  // single flipped site splits off a singleton
  std::vector<std::int8_t> one_off(9, 1);
  one_off[4] = -1;
  auto sizes2 = component_sizes(lat, one_off);
  std::sort(sizes2.begin(), sizes2.end());
  REQUIRE(sizes2 == std::vector<long long>{1, 8});

  REQUIRE_THROWS_AS(component_histogram_slope({9}), ConfigError);
  std::vector<long long> power_law;
  for (int s = 1; s <= 64; ++s) {
    for (int k = 0; k < 4096 / (s * s); ++k) power_law.push_back(s);
  }
  REQUIRE(component_histogram_slope(power_law) < -1.0);
}

TEST_CASE("rbm feature layout on a spot-checked assignment", "[models]") {
  FeatureMap fm = rbm_features(2, 1, true);
  REQUIRE(fm.dim == 5);
  REQUIRE(fm.space.cards == std::vector<int>{2, 2, 2});
  // assignment (1, 0, 1): x = (+1, -1), z = +1
  Vec f = fm.eval({1, 0, 1});
  REQUIRE(f == Vec{1.0, -1.0, 1.0, 1.0, -1.0});
  FeatureMap no_bias = rbm_features(2, 1, false);
  REQUIRE(no_bias.dim == 4);
}
