#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's metric, ball or inner-product code.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Word = std::vector<int>;  // letters +-1, +-2, ...

/// Reduced words of length <= r in the free group of the given rank.
inline std::set<Word> free_ball(int rank, int r) {
  std::set<Word> seen{{}};
  std::vector<Word> frontier{{}};
  for (int step = 0; step < r; ++step) {
    std::vector<Word> next;
    for (const auto& w : frontier) {
      for (int l = -rank; l <= rank; ++l) {
        if (l == 0) continue;
        if (!w.empty() && w.back() == -l) continue;
        auto v = w;
        v.push_back(l);
        if (seen.insert(v).second) next.push_back(v);
      }
    }
    frontier = std::move(next);
  }
  return seen;
}

/// Points of Z^n with l1 norm <= r.
inline std::vector<std::vector<std::int64_t>> l1_ball(int n, int r) {
  std::vector<std::vector<std::int64_t>> out{{}};
  for (int axis = 0; axis < n; ++axis) {
    std::vector<std::vector<std::int64_t>> next;
    for (const auto& p : out) {
      std::int64_t used = 0;
      for (auto c : p) used += c < 0 ? -c : c;
      for (std::int64_t c = -(r - used); c <= r - used; ++c) {
        auto q = p;
        q.push_back(c);
        next.push_back(q);
      }
    }
    out = std::move(next);
  }
  return out;
}

template <class T>
std::size_t sym_diff(const std::set<T>& a, const std::set<T>& b) {
  std::vector<T> out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.size();
}

template <class T>
std::size_t intersection(const std::set<T>& a, const std::set<T>& b) {
  std::vector<T> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.size();
}

/// Box x + [-N, N]^n as a set of coordinate vectors.
inline std::set<std::vector<std::int64_t>> box(const std::vector<std::int64_t>& x, int N) {
  std::set<std::vector<std::int64_t>> out{{}};
  for (std::size_t axis = 0; axis < x.size(); ++axis) {
    std::set<std::vector<std::int64_t>> next;
    for (const auto& p : out) {
      for (std::int64_t c = x[axis] - N; c <= x[axis] + N; ++c) {
        auto q = p;
        q.push_back(c);
        next.insert(q);
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Greatest common divisor for reducing p/q by hand.
inline std::int64_t gcd(std::int64_t a, std::int64_t b) {
  a = a < 0 ? -a : a;
  b = b < 0 ? -b : b;
  while (b) {
    auto t = a % b;
    a = b;
    b = t;
  }
  return a;
}

/// "p/q" in lowest terms ("p" when q = 1), matching the serialized form.
inline std::string fraction(std::int64_t p, std::int64_t q) {
  auto g = gcd(p, q);
  if (g == 0) return "0";
  p /= g;
  q /= g;
  if (q < 0) {
    p = -p;
    q = -q;
  }
  return q == 1 ? std::to_string(p) : std::to_string(p) + "/" + std::to_string(q);
}

}  // namespace oracle
