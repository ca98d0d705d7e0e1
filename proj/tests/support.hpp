#pragma once

// Test-only oracles written independently of the library's combinatorics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "holokit/torus_domain.hpp"

namespace holokit::testing {

// One monomial with 1-based indices, as printed in the usual notation.
struct Term {
  double coefficient;
  std::vector<int> indices;
};

inline std::vector<Term> cayley_terms() {
  return {{1, {1, 2, 3, 4}},  {1, {1, 2, 5, 6}},  {1, {1, 2, 7, 8}},  {1, {1, 3, 5, 7}},  {-1, {1, 3, 6, 8}},
          {-1, {1, 4, 5, 8}}, {-1, {1, 4, 6, 7}}, {-1, {2, 3, 5, 8}}, {-1, {2, 3, 6, 7}}, {-1, {2, 4, 5, 7}},
          {1, {2, 4, 6, 8}},  {1, {3, 4, 5, 6}},  {1, {3, 4, 7, 8}},  {1, {5, 6, 7, 8}}};
}

inline std::vector<Term> associative_terms() {
  return {{1, {1, 2, 3}},  {1, {1, 4, 5}},  {1, {1, 6, 7}}, {1, {2, 4, 6}},
          {-1, {2, 5, 7}}, {-1, {3, 4, 7}}, {-1, {3, 5, 6}}};
}

// Sign of the permutation sorting `seq` (by counting inversions); 0 on a
// repeated index.
inline int sorting_sign(const std::vector<int>& seq) {
  int inversions = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t j = i + 1; j < seq.size(); ++j) {
      if (seq[i] == seq[j]) return 0;
      if (seq[i] > seq[j]) ++inversions;
    }
  }
  return inversions % 2 == 0 ? 1 : -1;
}

// Coefficient of dx^{target} (sorted, 1-based) in a ^ b, by expanding every
// pair of monomials.
inline double brute_wedge_coefficient(const std::vector<Term>& a, const std::vector<Term>& b,
                                      std::vector<int> target) {
  std::sort(target.begin(), target.end());
  double sum = 0.0;
  for (const auto& s : a) {
    for (const auto& t : b) {
      std::vector<int> seq = s.indices;
      seq.insert(seq.end(), t.indices.begin(), t.indices.end());
      std::vector<int> sorted = seq;
      std::sort(sorted.begin(), sorted.end());
      if (sorted != target) continue;
      sum += s.coefficient * t.coefficient * sorting_sign(seq);
    }
  }
  return sum;
}

// Field sampled from a function of the ambient coordinates.
inline BundleField sample_field(const TorusDomain& domain, FiberKind fiber, int band_limit,
                                const std::function<Vector(const Vector&)>& f) {
  BundleField out(domain, fiber, band_limit);
  const int w = out.fiber_size();
  for (std::size_t node = 0; node < domain.node_count(); ++node) {
    const Vector v = f(domain.node_coordinates(node));
    for (int c = 0; c < w; ++c) out.at(node, c) = v[c];
  }
  return out;
}

inline double max_abs(const BundleField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const BundleField& a, const BundleField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

}  // namespace holokit::testing
