#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "herding/common.hpp"
#include "herding/diag.hpp"
#include "herding/engine.hpp"
#include "herding/state.hpp"

namespace herd::io {

using nlohmann::json;

/// Shortest decimal string that round-trips to the same double. Every number
/// we persist goes through this, so re-reading a file reproduces runs bit for
/// bit. No locale involvement, no precision knob to get wrong.
inline std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(where + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view s, const std::string& where) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(where + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t at = 0;
  while (true) {
    std::size_t next = line.find(sep, at);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(at));
      return out;
    }
    out.push_back(line.substr(at, next - at));
    at = next + 1;
  }
}

inline bool is_number(std::string_view s) {
  if (s.empty()) return false;
  double v;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

/// On-disk form of a run. Layout:
///   # trace v1
///   # meta {json: resolved configuration}
///   # cards 2|2|2
///   # dim 3
///   # steps 1000
///   # feature_sum a,b,c
///   # pct_checked 1000
///   # pct_violations 17,90        (line absent when clean)
///   # max_weight_norm2 v
///   # max_weight_norm_inf v
///   step,state,w0,w1,w2
/// Row 0 carries the initial weights and no state. Sample rows carry weights
/// only on snapshot steps; the final step always has them. States are joined
/// with '|' for multi-variable spaces, a bare index otherwise. No timestamps,
/// hostnames, or anything else that varies between identical runs.
struct TraceFile {
  json meta;
  std::vector<int> cards;
  int dim = 0;
  long long steps = 0;
  Vec feature_sum;
  long long pct_checked = 0;
  std::vector<long long> pct_violations;
  double max_weight_norm2 = 0.0;
  double max_weight_norm_inf = 0.0;
  std::vector<std::vector<int>> states;             // per step, one value per variable
  std::vector<std::pair<long long, Vec>> snapshots; // (step, weights), step 0 first
};

inline void write_trace_csv(std::ostream& os, const TraceFile& t) {
  os << "# trace v1\n";
  os << "# meta " << t.meta.dump() << "\n";
  os << "# cards ";
  for (std::size_t i = 0; i < t.cards.size(); ++i) os << (i ? "|" : "") << t.cards[i];
  os << "\n# dim " << t.dim << "\n# steps " << t.steps << "\n";
  os << "# feature_sum ";
  for (std::size_t i = 0; i < t.feature_sum.size(); ++i) {
    os << (i ? "," : "") << fmt_double(t.feature_sum[i]);
  }
  os << "\n# pct_checked " << t.pct_checked << "\n";
  if (!t.pct_violations.empty()) {
    os << "# pct_violations ";
    for (std::size_t i = 0; i < t.pct_violations.size(); ++i) {
      os << (i ? "," : "") << t.pct_violations[i];
    }
    os << "\n";
  }
  os << "# max_weight_norm2 " << fmt_double(t.max_weight_norm2) << "\n";
  os << "# max_weight_norm_inf " << fmt_double(t.max_weight_norm_inf) << "\n";
  os << "step,state";
  for (int d = 0; d < t.dim; ++d) os << ",w" << d;
  os << "\n";

  std::size_t snap = 0;
  auto weights_for = [&](long long step) -> const Vec* {
    while (snap < t.snapshots.size() && t.snapshots[snap].first < step) ++snap;
    if (snap < t.snapshots.size() && t.snapshots[snap].first == step) return &t.snapshots[snap].second;
    return nullptr;
  };
  auto write_row = [&](long long step, const std::vector<int>* state) {
    os << step << ",";
    if (state) {
      for (std::size_t v = 0; v < state->size(); ++v) os << (v ? "|" : "") << (*state)[v];
    }
    const Vec* w = weights_for(step);
    for (int d = 0; d < t.dim; ++d) {
      os << ",";
      if (w) os << fmt_double((*w)[std::size_t(d)]);
    }
    os << "\n";
  };
  write_row(0, nullptr);
  for (long long s = 1; s <= t.steps; ++s) {
    write_row(s, s <= (long long)t.states.size() ? &t.states[std::size_t(s - 1)] : nullptr);
  }
}

inline void write_trace_csv(const std::string& path, const TraceFile& t) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open for writing: " + path);
  write_trace_csv(os, t);
}

/// Packs an engine trace for writing. States come from sample_values when the
/// run recorded them, else from indices against the given space.
inline TraceFile pack_trace(const HerdingTrace& tr, const StateSpace& space, json meta) {
  TraceFile t;
  t.meta = std::move(meta);
  t.cards = space.cards;
  t.dim = (int)tr.w0.size();
  t.steps = tr.steps;
  t.feature_sum = tr.running_feature_sum;
  t.pct_checked = tr.pct_checked;
  t.pct_violations = tr.pct_violations;
  t.max_weight_norm2 = tr.max_weight_norm2;
  t.max_weight_norm_inf = tr.max_weight_norm_inf;
  if (!tr.sample_values.empty()) {
    t.states = tr.sample_values;
  } else {
    for (long long idx : tr.sample_indices) t.states.push_back(space.assignment_of(idx));
  }
  t.snapshots = tr.weight_snapshots;
  return t;
}

inline TraceFile read_trace_csv(std::istream& is, const std::string& name = "trace") {
  TraceFile t;
  std::string line;
  long long line_no = 0;
  bool saw_magic = false, saw_header = false;
  int state_vars = 0;
  auto where = [&] { return name + " line " + std::to_string(line_no); };
  while (std::getline(is, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      std::string_view body(line);
      body.remove_prefix(2);
      auto sp = body.find(' ');
      std::string_view key = body.substr(0, sp);
      std::string_view val = sp == std::string_view::npos ? std::string_view{} : body.substr(sp + 1);
      if (key == "trace") {
        if (val != "v1") throw ParseError(where() + ": unsupported trace version");
        saw_magic = true;
      } else if (key == "meta") {
        t.meta = json::parse(val, nullptr, false);
        if (t.meta.is_discarded()) throw ParseError(where() + ": bad meta json");
      } else if (key == "cards") {
        for (auto tok : detail::split(val, '|')) t.cards.push_back((int)parse_int(tok, where()));
      } else if (key == "dim") {
        t.dim = (int)parse_int(val, where());
      } else if (key == "steps") {
        t.steps = parse_int(val, where());
      } else if (key == "feature_sum") {
        for (auto tok : detail::split(val, ',')) t.feature_sum.push_back(parse_double(tok, where()));
      } else if (key == "pct_checked") {
        t.pct_checked = parse_int(val, where());
      } else if (key == "pct_violations") {
        for (auto tok : detail::split(val, ',')) t.pct_violations.push_back(parse_int(tok, where()));
      } else if (key == "max_weight_norm2") {
        t.max_weight_norm2 = parse_double(val, where());
      } else if (key == "max_weight_norm_inf") {
        t.max_weight_norm_inf = parse_double(val, where());
      }
      // unknown '#' keys pass through silently: forward compatibility
      continue;
    }
    if (!saw_magic) throw ParseError(name + ": missing '# trace v1' magic");
    if (!saw_header) {
      if (line.rfind("step,state", 0) != 0) throw ParseError(where() + ": expected column header");
      saw_header = true;
      state_vars = t.cards.empty() ? 1 : (int)t.cards.size();
      continue;
    }
    auto cells = detail::split(line, ',');
    if ((int)cells.size() != 2 + t.dim) throw ParseError(where() + ": wrong cell count");
    long long step = parse_int(cells[0], where());
    if (step > 0) {
      if (!cells[1].empty()) {
        std::vector<int> st;
        for (auto tok : detail::split(cells[1], '|')) st.push_back((int)parse_int(tok, where()));
        if ((int)st.size() != state_vars) throw ParseError(where() + ": wrong state arity");
        t.states.push_back(std::move(st));
      }
    }
    if (t.dim > 0 && !cells[2].empty()) {
      Vec w;
      for (int d = 0; d < t.dim; ++d) w.push_back(parse_double(cells[std::size_t(2 + d)], where()));
      t.snapshots.emplace_back(step, std::move(w));
    }
  }
  if (!saw_magic) throw ParseError(name + ": not a trace file");
  return t;
}

inline TraceFile read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open: " + path);
  return read_trace_csv(is, path);
}

inline void write_moments_csv(std::ostream& os, const Vec& values) {
  os << "feature,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    os << "m" << i << "," << fmt_double(values[i]) << "\n";
  }
}

inline void write_moments_csv(const std::string& path, const Vec& values) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open for writing: " + path);
  write_moments_csv(os, values);
}

// Values in file order; names are ignored beyond requiring two columns.
inline Vec read_moments_csv(std::istream& is, const std::string& name = "moments") {
  Vec out;
  std::string line;
  long long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto cells = detail::split(line, ',');
    if (cells.size() != 2) throw ParseError(name + " line " + std::to_string(line_no) + ": expected name,value");
    if (line_no == 1 && !detail::is_number(cells[1])) continue;  // header
    out.push_back(parse_double(cells[1], name + " line " + std::to_string(line_no)));
  }
  return out;
}

inline Vec read_moments_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open: " + path);
  return read_moments_csv(is, path);
}

/// Numeric table, optionally with a header row and an optional leading label
/// column (header cell 'label'). A header is any first row containing a cell
/// that does not parse as a number.
struct Dataset {
  std::vector<std::string> columns;  // empty when the file had no header
  std::vector<Vec> rows;
  std::vector<int> labels;  // parallel to rows when the file had a label column
  bool has_labels = false;
};

inline Dataset read_dataset_csv(std::istream& is, const std::string& name = "dataset") {
  Dataset ds;
  std::string line;
  long long line_no = 0;
  bool first_data = true;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto cells = detail::split(line, ',');
    auto where = [&] { return name + " line " + std::to_string(line_no); };
    if (first_data) {
      bool header = false;
      for (auto c : cells) {
        if (!detail::is_number(c)) header = true;
      }
      if (header) {
        for (auto c : cells) ds.columns.emplace_back(c);
        ds.has_labels = !ds.columns.empty() && ds.columns.front() == "label";
        width = cells.size();
        first_data = false;
        continue;
      }
      width = cells.size();
      first_data = false;
    }
    if (cells.size() != width) throw ParseError(where() + ": expected " + std::to_string(width) + " cells");
    std::size_t at = 0;
    if (ds.has_labels) {
      ds.labels.push_back((int)parse_int(cells[0], where()));
      at = 1;
    }
    Vec row;
    for (; at < cells.size(); ++at) row.push_back(parse_double(cells[at], where()));
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open: " + path);
  return read_dataset_csv(is, path);
}

// +-1 rows (the on-disk spin convention) to 0/1 assignments for binary spaces.
inline std::vector<std::vector<int>> rows_to_binary_assignments(const std::vector<Vec>& rows) {
  std::vector<std::vector<int>> out;
  out.reserve(rows.size());
  for (const Vec& r : rows) {
    std::vector<int> a;
    a.reserve(r.size());
    for (double v : r) {
      if (v == 1.0) {
        a.push_back(1);
      } else if (v == -1.0 || v == 0.0) {
        a.push_back(0);
      } else {
        throw ParseError("binary dataset cell must be -1, 0, or +1");
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline json report_to_json(const diag::DiagReport& r) {
  json j;
  j["moment_error"] = json::array();
  for (const auto& p : r.moment_error) {
    j["moment_error"].push_back({{"prefix", p.prefix},
                                 {"l2", p.l2},
                                 {"linf", p.linf},
                                 {"bound", p.bound}});
  }
  if (r.moment_error_slope) {
    j["moment_error_slope"] = *r.moment_error_slope;
  } else {
    j["moment_error_slope"] = nullptr;
  }
  j["autocorrelation"] = json::array();
  for (const auto& v : r.autocorrelation) {
    if (v) {
      j["autocorrelation"].push_back(*v);
    } else {
      j["autocorrelation"].push_back(nullptr);
    }
  }
  j["complexity"] = r.complexity;
  j["pct_checked"] = r.pct_checked;
  j["pct_violations"] = r.pct_violations;
  j["max_weight_norm2"] = r.max_weight_norm2;
  j["max_weight_norm_inf"] = r.max_weight_norm_inf;
  j["period"] = r.period;
  return j;
}

inline void write_report_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
}

}  // namespace herd::io
