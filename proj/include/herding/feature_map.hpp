#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "herding/state.hpp"

namespace herd {

/// Feature evaluation phi: assignment -> R^dim. eval must be pure; the same
/// assignment yields the same vector bit for bit.
struct FeatureMap {
  StateSpace space;
  int dim = 0;
  std::function<Vec(const Assignment&)> eval;
  std::optional<double> norm_bound;  // sup_x ||phi(x)||_2 when known

  Vec operator()(const Assignment& a) const { return eval(a); }
};

/// Dense table of all feature vectors of an enumerable space; row r is
/// phi(state r). Built once, shared by maximizers and diagnostics.
class FeatureTable {
 public:
  FeatureTable() = default;

  explicit FeatureTable(const FeatureMap& fm) : rows_(fm.space.count()), dim_(fm.dim) {
    if (rows_ < 0) throw ConfigError("FeatureTable: space is not enumerable");
    if (dim_ < 1) throw ConfigError("FeatureTable: feature dimension must be positive");
    if (rows_ > (1LL << 24) / dim_) throw ConfigError("FeatureTable: table too large, use local search");
    data_.resize(std::size_t(rows_) * dim_);
    for (long long r = 0; r < rows_; ++r) {
      Vec f = fm.eval(fm.space.assignment_of(r));
      if (int(f.size()) != dim_) throw ConfigError("FeatureTable: eval returned wrong dimension");
      for (int k = 0; k < dim_; ++k) data_[std::size_t(r) * dim_ + k] = f[k];
    }
  }

  long long rows() const { return rows_; }
  int dim() const { return dim_; }

  const double* row(long long r) const { return data_.data() + std::size_t(r) * dim_; }

  Vec row_vec(long long r) const {
    const double* p = row(r);
    return Vec(p, p + dim_);
  }

  // Uniform average of all rows, accumulated row by row.
  Vec mean_row() const {
    Vec m(dim_, 0.0);
    for (long long r = 0; r < rows_; ++r) {
      const double* p = row(r);
      for (int k = 0; k < dim_; ++k) m[k] += p[k];
    }
    for (int k = 0; k < dim_; ++k) m[k] /= double(rows_);
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::vector<double> data_;
  long long rows_ = 0;
  int dim_ = 0;
};

enum class MomentProvenance {
  Analytic,       // closed-form expectation under a known distribution
  DataAverage,    // empirical mean of feature vectors of data cases
  OracleEstimate  // sampled estimate; may sit slightly outside the hull
};

/// Target moments phi_bar together with where they came from. Analytic and
/// data-average moments over an enumerable space must lie in the convex hull
/// of the feature vectors; the check runs at construction.
struct MomentVector {
  Vec values;
  MomentProvenance provenance = MomentProvenance::Analytic;
};

namespace detail {

// Phase-1 dense simplex with Bland's rule: is there p >= 0, sum p = 1, with
// Phi^T p = target? Returns the residual infeasibility (0 when feasible).
// Sizes here are K+1 rows by D columns; desk scale, so a full tableau is fine.
inline double hull_infeasibility(const FeatureTable& tab, const Vec& target) {
  const long long d_states = tab.rows();
  const int km = tab.dim();
  const int m = km + 1;              // equality constraints
  const long long n = d_states + m;  // columns incl. artificials
  const double scale = std::max(1.0, std::max(tab.max_abs(), norm_inf(target)));
  const double piv_tol = 1e-11 * scale;

  // Tableau rows: [A | I_art | b], b forced nonnegative by row negation.
  std::vector<std::vector<double>> t(m, std::vector<double>(std::size_t(n) + 1, 0.0));
  for (int i = 0; i < km; ++i) {
    for (long long j = 0; j < d_states; ++j) t[i][j] = tab.row(j)[i];
    t[i][n] = target[i];
  }
  for (long long j = 0; j < d_states; ++j) t[km][j] = 1.0;
  t[km][n] = 1.0;
  for (int i = 0; i < m; ++i) {
    if (t[i][n] < 0.0) {
      for (long long j = 0; j <= n; ++j) t[i][j] = -t[i][j];
    }
    t[i][d_states + i] = 1.0;
  }
  std::vector<long long> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = d_states + i;

  for (;;) {
    // Reduced cost of column j for the phase-1 objective (sum of artificials):
    // c_j - sum of t[i][j] over rows whose basic variable is artificial.
    long long enter = -1;
    for (long long j = 0; j < n && enter < 0; ++j) {
      double r = (j >= d_states) ? 1.0 : 0.0;
      for (int i = 0; i < m; ++i) {
        if (basis[i] >= d_states) r -= t[i][j];
      }
      if (r < -piv_tol) enter = j;  // Bland: first improving column
    }
    if (enter < 0) break;

    long long leave = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t[i][enter] > piv_tol) {
        double ratio = t[i][n] / t[i][enter];
        if (leave < 0 || ratio < best ||
            (ratio == best && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction; cannot happen with the simplex row

    double piv = t[leave][enter];
    for (long long j = 0; j <= n; ++j) t[leave][j] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      double f = t[i][enter];
      if (f == 0.0) continue;
      for (long long j = 0; j <= n; ++j) t[i][j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }

  double infeas = 0.0;
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= d_states) infeas += std::max(0.0, t[i][n]);
  }
  return infeas / scale;
}

}  // namespace detail

inline bool in_convex_hull(const FeatureTable& tab, const Vec& target, double tol = 1e-7) {
  if (int(target.size()) != tab.dim()) throw ConfigError("in_convex_hull: dimension mismatch");
  return detail::hull_infeasibility(tab, target) <= tol;
}

/// Builds a MomentVector, running the hull feasibility check when the space is
/// enumerable and the values claim to be exact (analytic or data average).
inline MomentVector make_moments(Vec values, MomentProvenance prov, const FeatureMap& fm) {
  if (int(values.size()) != fm.dim) throw ConfigError("make_moments: dimension mismatch");
  if (!all_finite(values)) throw ConfigError("make_moments: non-finite moment");
  if (prov != MomentProvenance::OracleEstimate && fm.space.enumerable() &&
      fm.space.count() * fm.dim <= (1LL << 24)) {
    FeatureTable tab(fm);
    if (!in_convex_hull(tab, values)) {
      throw ConfigError("make_moments: target lies outside the feature hull");
    }
  }
  return MomentVector{std::move(values), prov};
}

inline MomentVector make_moments_unchecked(Vec values, MomentProvenance prov) {
  return MomentVector{std::move(values), prov};
}

}  // namespace herd
