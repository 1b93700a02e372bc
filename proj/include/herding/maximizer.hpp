#pragma once

#include <memory>
#include <utility>

#include "herding/feature_map.hpp"

namespace herd {

/// argmax_x w.phi(x) strategies.
///
/// Ties break toward the lowest state index (exact enumeration) or the lowest
/// value at the variable being swept (coordinate ascent), so identical inputs
/// reproduce identical runs. The engine verifies the returned state against
/// w.phi(s) >= w.phi_bar unless told otherwise; exact enumeration satisfies it
/// by construction.
class Maximizer {
 public:
  enum class Kind { Exact, CoordinateAscent, PersistentCoordinateAscent, DataInitialized };

  struct Result {
    State state;
    Vec features;
    double score = 0.0;
  };

  static Maximizer exact(const FeatureMap& fm) {
    Maximizer m(Kind::Exact, fm);
    m.table_ = std::make_shared<FeatureTable>(fm);
    return m;
  }

  static Maximizer coordinate_ascent(const FeatureMap& fm, Assignment start, int max_sweeps = 100) {
    Maximizer m(Kind::CoordinateAscent, fm);
    m.start_ = std::move(start);
    m.max_sweeps_ = max_sweeps;
    return m;
  }

  static Maximizer persistent_coordinate_ascent(const FeatureMap& fm, Assignment start,
                                                int max_sweeps = 100) {
    Maximizer m(Kind::PersistentCoordinateAscent, fm);
    m.start_ = std::move(start);
    m.state_ = m.start_;
    m.max_sweeps_ = max_sweeps;
    return m;
  }

  static Maximizer data_initialized(const FeatureMap& fm, std::vector<Assignment> inits,
                                    int max_sweeps = 100) {
    if (inits.empty()) throw ConfigError("data_initialized: needs at least one start");
    Maximizer m(Kind::DataInitialized, fm);
    m.inits_ = std::move(inits);
    m.max_sweeps_ = max_sweeps;
    return m;
  }

  Kind kind() const { return kind_; }
  bool is_exact() const { return kind_ == Kind::Exact; }
  const FeatureTable* table() const { return table_.get(); }
  const FeatureMap& feature_map() const { return *fm_; }

  // Data-initialized starts may change between steps (e.g. fresh imputations).
  void set_init_states(std::vector<Assignment> inits) {
    if (kind_ != Kind::DataInitialized) throw ConfigError("set_init_states: wrong maximizer kind");
    if (inits.empty()) throw ConfigError("set_init_states: needs at least one start");
    inits_ = std::move(inits);
  }

  Result maximize(const Vec& w) {
    if (int(w.size()) != fm_->dim) throw ConfigError("maximize: weight dimension mismatch");
    switch (kind_) {
      case Kind::Exact: {
        const FeatureTable& t = *table_;
        long long best = 0;
        double best_score = dot(w, t.row(0));
        for (long long r = 1; r < t.rows(); ++r) {
          double s = dot(w, t.row(r));
          if (s > best_score) {  // strict keeps the lowest index on ties
            best_score = s;
            best = r;
          }
        }
        Result res;
        res.state = make_state(fm_->space, best);
        res.features = t.row_vec(best);
        res.score = best_score;
        return res;
      }
      case Kind::CoordinateAscent:
        return ascend(w, start_);
      case Kind::PersistentCoordinateAscent: {
        Result res = ascend(w, state_);
        state_ = res.state.values;
        return res;
      }
      case Kind::DataInitialized: {
        Result best = ascend(w, inits_[0]);
        for (std::size_t i = 1; i < inits_.size(); ++i) {
          Result r = ascend(w, inits_[i]);
          if (r.score > best.score) best = std::move(r);  // first start wins ties
        }
        return best;
      }
    }
    throw ConfigError("maximize: unreachable");
  }

  // Ascent from a given start; exposed so callers can check monotonicity
  // against the start's own score.
  Result ascend(const Vec& w, Assignment a) const {
    const StateSpace& sp = fm_->space;
    if (int(a.size()) != sp.num_vars()) throw ConfigError("ascend: start arity mismatch");
    Vec feats = fm_->eval(a);
    double score = dot(w, feats);
    for (int sweep = 0; sweep < max_sweeps_; ++sweep) {
      bool changed = false;
      for (int v = 0; v < sp.num_vars(); ++v) {
        const int prev_val = a[v];
        int best_val = 0;
        double best_score = 0.0;
        Vec best_feats;
        for (int val = 0; val < sp.cards[v]; ++val) {
          a[v] = val;
          Vec f = fm_->eval(a);
          double s = dot(w, f);
          if (val == 0 || s > best_score) {  // strict keeps the lowest value
            best_score = s;
            best_val = val;
            best_feats = std::move(f);
          }
        }
        if (prev_val != best_val) changed = true;
        a[v] = best_val;
        score = best_score;
        feats = std::move(best_feats);
      }
      if (!changed) break;
    }
    Result res;
    long long idx = sp.enumerable() ? sp.index_of(a) : -1;
    res.state = State(std::move(a), idx);
    res.features = std::move(feats);
    res.score = score;
    return res;
  }

 private:
  Maximizer(Kind k, const FeatureMap& fm) : kind_(k), fm_(&fm) {}

  Kind kind_;
  const FeatureMap* fm_;  // not owned; must outlive the maximizer
  std::shared_ptr<FeatureTable> table_;
  Assignment start_;
  Assignment state_;
  std::vector<Assignment> inits_;
  int max_sweeps_ = 100;
};

}  // namespace herd
