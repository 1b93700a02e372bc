#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <sstream>

#include "herding.hpp"

using namespace herd;
using namespace herd::io;

namespace {

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

TEST_CASE("number formatting round-trips every bit pattern we throw at it", "[io]") {
  const double cases[] = {1.0 / 3.0, 0.1,   1e-300,         5e-324,          -0.0, 1e308,
                          123456789.123456789, -2.5e-7, 6.02214076e23, 0.0, -1.0};
  for (double v : cases) {
    std::string s = fmt_double(v);
    REQUIRE(same_bits(parse_double(s, "t"), v));
  }
  REQUIRE(fmt_double(0.5) == "0.5");
  REQUIRE(fmt_double(-0.0) == "-0");

  REQUIRE_THROWS_AS(parse_double("", "t"), ParseError);
  REQUIRE_THROWS_AS(parse_double("abc", "t"), ParseError);
  REQUIRE_THROWS_AS(parse_double("1.2.3", "t"), ParseError);
  REQUIRE(parse_int("42", "t") == 42);
  REQUIRE(parse_int("-7", "t") == -7);
  REQUIRE_THROWS_AS(parse_int("1.5", "t"), ParseError);
  REQUIRE_THROWS_AS(parse_int("", "t"), ParseError);
}

TEST_CASE("trace files survive a write-read cycle unchanged", "[io]") {
  TraceFile t;
  t.meta = json{{"cmd", "herd"}, {"seed", 7}};
  t.cards = {2, 3};
  t.dim = 2;
  t.steps = 5;
  t.feature_sum = {1.0 / 3.0, -0.125};
  t.pct_checked = 5;
  t.pct_violations = {2, 4};
  t.max_weight_norm2 = 0.70710678118654752;
  t.max_weight_norm_inf = 0.5;
  t.states = {{0, 0}, {1, 2}, {0, 1}, {1, 0}, {0, 2}};
  t.snapshots = {{0, {0.1, -0.2}}, {3, {1.0 / 7.0, 0.25}}, {5, {-0.0, 1e-17}}};

  std::ostringstream os;
  write_trace_csv(os, t);
  std::string text = os.str();
  REQUIRE(text.rfind("# trace v1\n", 0) == 0);
  REQUIRE(text.find("step,state,w0,w1\n") != std::string::npos);
  REQUIRE(text.find("2,1|2,") != std::string::npos);

  std::istringstream is(text);
  TraceFile r = read_trace_csv(is);
  REQUIRE(r.meta == t.meta);
  REQUIRE(r.cards == t.cards);
  REQUIRE(r.dim == t.dim);
  REQUIRE(r.steps == t.steps);
  REQUIRE(r.pct_checked == t.pct_checked);
  REQUIRE(r.pct_violations == t.pct_violations);
  REQUIRE(same_bits(r.max_weight_norm2, t.max_weight_norm2));
  REQUIRE(same_bits(r.max_weight_norm_inf, t.max_weight_norm_inf));
  REQUIRE(r.states == t.states);
  REQUIRE(r.feature_sum.size() == t.feature_sum.size());
  for (std::size_t i = 0; i < t.feature_sum.size(); ++i) {
    REQUIRE(same_bits(r.feature_sum[i], t.feature_sum[i]));
  }
  REQUIRE(r.snapshots.size() == t.snapshots.size());
  for (std::size_t i = 0; i < t.snapshots.size(); ++i) {
    REQUIRE(r.snapshots[i].first == t.snapshots[i].first);
    for (std::size_t d = 0; d < t.snapshots[i].second.size(); ++d) {
      REQUIRE(same_bits(r.snapshots[i].second[d], t.snapshots[i].second[d]));
    }
  }
}

TEST_CASE("identical traces serialize to identical bytes", "[io]") {
  FeatureMap fm;
  fm.space = StateSpace::single(3);
  fm.dim = 3;
  fm.eval = [](const Assignment& a) {
    Vec f(3, 0.0);
    f[std::size_t(a[0])] = 1.0;
    return f;
  };
  StateSpace space = fm.space;
  MomentVector m = make_moments({0.5, 0.25, 0.25}, MomentProvenance::Analytic, fm);
  Maximizer mx = Maximizer::exact(fm);
  HerdOptions opt;
  opt.snapshot_stride = 16;
  HerdingTrace tr = herd_run(m.values, m, mx, 64, opt);

  std::ostringstream a, b;
  write_trace_csv(a, pack_trace(tr, space, json{{"run", 1}}));
  write_trace_csv(b, pack_trace(tr, space, json{{"run", 1}}));
  REQUIRE(a.str() == b.str());

  std::istringstream is(a.str());
  TraceFile r = read_trace_csv(is);
  REQUIRE(r.steps == 64);
  REQUIRE((long long)r.states.size() == 64);
  REQUIRE(r.snapshots.front().first == 0);
  REQUIRE(r.snapshots.back().first == 64);
  for (std::size_t d = 0; d < tr.w0.size(); ++d) {
    REQUIRE(same_bits(r.snapshots.front().second[d], tr.w0[d]));
    REQUIRE(same_bits(r.snapshots.back().second[d], tr.w_final[d]));
  }
  for (std::size_t d = 0; d < tr.running_feature_sum.size(); ++d) {
    REQUIRE(same_bits(r.feature_sum[d], tr.running_feature_sum[d]));
  }
}

TEST_CASE("trace reader rejects damage and tolerates additions", "[io]") {
  std::istringstream no_magic("step,state,w0\n0,,1\n");
  REQUIRE_THROWS_AS(read_trace_csv(no_magic), ParseError);

  std::istringstream bad_version("# trace v2\nstep,state\n");
  REQUIRE_THROWS_AS(read_trace_csv(bad_version), ParseError);

  std::istringstream extra(
      "# trace v1\n# dim 1\n# steps 1\n# cards 2\n"
      "# some_future_key opaque payload\n"
      "step,state,w0\n0,,0.5\n1,1,\n");
  TraceFile t = read_trace_csv(extra);
  REQUIRE(t.steps == 1);
  REQUIRE(t.states == std::vector<std::vector<int>>{{1}});

  std::istringstream short_row("# trace v1\n# dim 2\nstep,state,w0,w1\n0,,1\n");
  REQUIRE_THROWS_AS(read_trace_csv(short_row), ParseError);
}

TEST_CASE("moment files round-trip bit for bit", "[io]") {
  Vec m{0.5, 1.0 / 3.0, -2e-7};
  std::ostringstream os;
  write_moments_csv(os, m);
  REQUIRE(os.str().rfind("feature,value\nm0,0.5\n", 0) == 0);
  std::istringstream is(os.str());
  Vec r = read_moments_csv(is);
  REQUIRE(r.size() == m.size());
  for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(same_bits(r[i], m[i]));

  std::istringstream renamed("name,val\nanything,0.75\n");
  Vec h = read_moments_csv(renamed);
  REQUIRE(h == Vec{0.75});  // header skipped, name column ignored

  std::istringstream bare("a,0.25\nb,0.75\n");
  REQUIRE(read_moments_csv(bare) == Vec{0.25, 0.75});  // numeric first value: data, not header

  std::istringstream ragged("feature,value\nm0,1,2\n");
  REQUIRE_THROWS_AS(read_moments_csv(ragged), ParseError);
}

TEST_CASE("dataset reader detects headers and label columns", "[io]") {
  std::istringstream labeled("label,x,y\n0,1.5,2.5\n1,-0.5,0.25\n");
  Dataset ds = read_dataset_csv(labeled);
  REQUIRE(ds.has_labels);
  REQUIRE(ds.columns == std::vector<std::string>{"label", "x", "y"});
  REQUIRE(ds.labels == std::vector<int>{0, 1});
  REQUIRE(ds.rows == std::vector<Vec>{{1.5, 2.5}, {-0.5, 0.25}});

  std::istringstream plain("x,y\n1,2\n");
  Dataset p = read_dataset_csv(plain);
  REQUIRE_FALSE(p.has_labels);
  REQUIRE(p.rows == std::vector<Vec>{{1.0, 2.0}});

  std::istringstream bare("1,2\n3,4\n");
  Dataset b = read_dataset_csv(bare);
  REQUIRE(b.columns.empty());
  REQUIRE(b.rows.size() == 2);

  std::istringstream ragged("1,2\n3\n");
  try {
    read_dataset_csv(ragged);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
  }

  std::istringstream bad("1,2\n3,oops\n");
  REQUIRE_THROWS_AS(read_dataset_csv(bad), ParseError);
}

TEST_CASE("spin rows convert to assignments only for legal values", "[io]") {
  auto a = rows_to_binary_assignments({{1.0, -1.0, 0.0}, {-1.0, 1.0, 1.0}});
  REQUIRE(a == std::vector<std::vector<int>>{{1, 0, 0}, {0, 1, 1}});
  REQUIRE_THROWS_AS(rows_to_binary_assignments({{0.5}}), ParseError);
  REQUIRE_THROWS_AS(rows_to_binary_assignments({{2.0}}), ParseError);
}

TEST_CASE("diagnostic reports serialize missing values as null", "[io]") {
  diag::DiagReport r;
  r.autocorrelation = {std::optional<double>(1.0), std::nullopt};
  r.complexity = {1, 2, 4};
  r.pct_checked = 10;
  r.max_weight_norm_inf = 0.75;
  json j = report_to_json(r);
  REQUIRE(j["moment_error_slope"].is_null());
  REQUIRE(j["autocorrelation"][0] == 1.0);
  REQUIRE(j["autocorrelation"][1].is_null());
  REQUIRE(j["period"] == 0);
  REQUIRE(j["pct_checked"] == 10);

  r.moment_error_slope = -1.0;
  r.period = 4;
  json j2 = report_to_json(r);
  REQUIRE(j2["moment_error_slope"] == -1.0);
  REQUIRE(j2["period"] == 4);
}
