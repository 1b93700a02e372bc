#pragma once

#include <cstdint>
#include <vector>

#include "herding/common.hpp"

namespace herd {

using Assignment = std::vector<int>;

/// Product space of discrete variables. Variable 0 is the least significant
/// digit of the mixed-radix state index; the index <-> assignment round trip
/// is exact.
struct StateSpace {
  std::vector<int> cards;

  // Joint-state budget for enumeration. Larger spaces are valid but must be
  // handled by local search.
  static constexpr long long kEnumLimit = 1LL << 22;

  StateSpace() = default;
  explicit StateSpace(std::vector<int> c) : cards(std::move(c)) {
    for (int k : cards) {
      if (k < 1) throw ConfigError("StateSpace: cardinalities must be >= 1");
    }
  }

  static StateSpace binary(int n) { return StateSpace(std::vector<int>(n, 2)); }
  static StateSpace single(int card) { return StateSpace({card}); }

  int num_vars() const { return int(cards.size()); }

  // Number of joint states, or -1 when it exceeds the enumeration budget.
  long long count() const {
    long long n = 1;
    for (int k : cards) {
      if (n > kEnumLimit / k) return -1;
      n *= k;
    }
    return n;
  }

  bool enumerable() const { return count() >= 0; }

  Assignment assignment_of(long long index) const {
    Assignment a(cards.size());
    for (std::size_t v = 0; v < cards.size(); ++v) {
      a[v] = int(index % cards[v]);
      index /= cards[v];
    }
    return a;
  }

  long long index_of(const Assignment& a) const {
    if (a.size() != cards.size()) throw ConfigError("index_of: arity mismatch");
    long long idx = 0;
    long long stride = 1;
    for (std::size_t v = 0; v < cards.size(); ++v) {
      if (a[v] < 0 || a[v] >= cards[v]) throw ConfigError("index_of: value out of range");
      idx += stride * a[v];
      stride *= cards[v];
    }
    return idx;
  }

  // Concatenation: this block first (low digits), then other.
  StateSpace joined(const StateSpace& other) const {
    std::vector<int> c = cards;
    c.insert(c.end(), other.cards.begin(), other.cards.end());
    return StateSpace(std::move(c));
  }

  bool operator==(const StateSpace& o) const { return cards == o.cards; }
};

struct State {
  Assignment values;
  long long index = -1;  // valid only when the space is enumerable

  State() = default;
  State(Assignment v, long long i) : values(std::move(v)), index(i) {}
};

inline State make_state(const StateSpace& sp, long long index) {
  return State(sp.assignment_of(index), index);
}

}  // namespace herd
