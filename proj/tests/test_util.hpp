#pragma once

// Shared helpers for unit tests: deterministic random generators and
// tolerance checks used by the brute-force oracles.

#include <cmath>
#include <random>

#include "rddmk/linalg.hpp"

namespace testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline rddmk::SymMatrix random_sym(std::mt19937_64& g, int n, double scale = 1.0) {
  rddmk::SymMatrix s(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s.set(i, j, uniform(g, -scale, scale));
  return s;
}

// B^T B + ridge keeps eigenvalues comfortably positive.
inline rddmk::SPDMatrix random_spd(std::mt19937_64& g, int n, double ridge = 0.5) {
  rddmk::Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = uniform(g, -1.0, 1.0);
  rddmk::Matrix btb = b.transposed() * b;
  rddmk::SymMatrix s = rddmk::SymMatrix::from_matrix(btb, 1e-12);
  for (int i = 0; i < n; ++i) s.set(i, i, s(i, i) + ridge);
  return rddmk::SPDMatrix::validated(s);
}

inline double max_abs_diff(const rddmk::SymMatrix& a, const rddmk::SymMatrix& b) {
  double m = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

inline double max_abs_diff(const rddmk::Matrix& a, const rddmk::Matrix& b) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

}  // namespace testutil
