#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rddmk/linalg.hpp"
#include "test_util.hpp"

using namespace rddmk;
using testutil::max_abs_diff;

namespace {

SymMatrix diag2(double a, double b) {
  SymMatrix s(2);
  s.set(0, 0, a);
  s.set(1, 1, b);
  return s;
}

// reconstruction oracle: V diag(values) V^T
Matrix reconstruct(const SymEigen& e) {
  int n = static_cast<int>(e.values.size());
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = e.values[i];
  return e.vectors * d * e.vectors.transposed();
}

}  // namespace

TEST_CASE("sym_eigen diagonal input") {
  SymEigen e = sym_eigen(diag2(3.0, 1.0));
  CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(std::abs(e.vectors(0, 0)) - 1.0) < 1e-14);
  CHECK(std::abs(std::abs(e.vectors(1, 1)) - 1.0) < 1e-14);
}

TEST_CASE("sym_eigen 2x2 closed form") {
  SymMatrix m(2);
  m.set(0, 0, 2.0);
  m.set(0, 1, 1.0);
  m.set(1, 1, 2.0);
  SymEigen e = sym_eigen(m);
  CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-14));
  double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  // eigenvector of 3 is +-(1,1)/sqrt(2)
  CHECK(std::abs(std::abs(e.vectors(0, 0)) - inv_sqrt2) < 1e-14);
  CHECK(std::abs(e.vectors(0, 0) - e.vectors(1, 0)) < 1e-14);
}

TEST_CASE("sym_eigen reconstruction and orthogonality, random sizes") {
  auto g = testutil::rng(42);
  for (int rep = 0; rep < 1000; ++rep) {
    int n = (rep % 3 == 0) ? 2 : (rep % 3 == 1 ? 3 : 5);
    SymMatrix m = testutil::random_sym(g, n, 2.0);
    SymEigen e = sym_eigen(m);
    CHECK(max_abs_diff(reconstruct(e), m.to_matrix()) <= 1e-12 * std::max(1.0, m.frobenius()));
    Matrix vtv = e.vectors.transposed() * e.vectors;
    CHECK(max_abs_diff(vtv, Matrix::identity(n)) < 1e-12);
    for (size_t i = 1; i < e.values.size(); ++i) CHECK(e.values[i - 1] >= e.values[i]);
  }
}

TEST_CASE("matrix_exp_sym basics") {
  SPDMatrix z = matrix_exp_sym(SymMatrix(2));
  CHECK(z(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(z(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(z(0, 1)) < 1e-15);

  SPDMatrix d = matrix_exp_sym(diag2(1.0, 2.0));
  CHECK(d(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(d(1, 1) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
}

TEST_CASE("matrix_exp_sym off-diagonal closed form (cosh/sinh)") {
  double t = 0.7;
  SymMatrix y(2);
  y.set(0, 1, t);
  SPDMatrix e = matrix_exp_sym(y);
  CHECK(e(0, 0) == doctest::Approx(std::cosh(t)).epsilon(1e-14));
  CHECK(e(1, 1) == doctest::Approx(std::cosh(t)).epsilon(1e-14));
  CHECK(e(0, 1) == doctest::Approx(std::sinh(t)).epsilon(1e-14));
}

TEST_CASE("matrix_exp_sym overflow guard") {
  SymMatrix y(2);
  y.set(0, 0, 400.0);
  CHECK_THROWS_AS(matrix_exp_sym(y), Error);
  try {
    matrix_exp_sym(y);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::Overflow);
  }
}

TEST_CASE("matrix_log_spd basics and round trip") {
  SymMatrix lg = matrix_log_spd(matrix_exp_sym(SymMatrix(3)));
  CHECK(lg.frobenius() < 1e-13);

  SymMatrix d = diag2(1.0, 2.0);
  SymMatrix back = matrix_log_spd(matrix_exp_sym(d));
  CHECK(max_abs_diff(back, d) < 1e-13);

  auto g = testutil::rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 + rep % 3;
    SymMatrix s = testutil::random_sym(g, n, 1.0);
    // rescale to a target Frobenius norm <= 5
    double target = testutil::uniform(g, 0.1, 5.0);
    if (s.frobenius() > 0) s.scale(target / s.frobenius());
    SymMatrix rt = matrix_log_spd(matrix_exp_sym(s));
    CHECK(max_abs_diff(rt, s) < 1e-9);
  }
}

TEST_CASE("SPDMatrix::validated rejects eigenvalues at the floor") {
  SymMatrix m(2);
  m.set(0, 0, 1.0);
  m.set(1, 1, 1e-12);  // below 1e-10 relative floor
  CHECK_THROWS_AS(SPDMatrix::validated(m), Error);
  try {
    SPDMatrix::validated(m);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NotPD);
  }

  SymMatrix neg(2);
  neg.set(0, 0, 1.0);
  neg.set(1, 1, -1.0);
  CHECK_THROWS_AS(SPDMatrix::validated(neg), Error);
}

TEST_CASE("spd_sqrt closed form and reconstruction") {
  SPDMatrix m = SPDMatrix::validated(diag2(4.0, 9.0));
  SqrtPair p = spd_sqrt(m);
  CHECK(p.root(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(p.root(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(p.inv_root(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

  auto g = testutil::rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    SPDMatrix a = testutil::random_spd(g, 3);
    SqrtPair sp = spd_sqrt(a);
    SymMatrix sq = sym_congruence(sp.root.sym(), SymMatrix::from_upper(3, std::vector<double>{1, 0, 0, 1, 0, 1}));
    CHECK(max_abs_diff(sq, a.sym()) <= 1e-10 * std::max(1.0, a.sym().frobenius()));
    SymMatrix white = sym_congruence(sp.inv_root.sym(), a.sym());
    SymMatrix eye(3);
    for (int i = 0; i < 3; ++i) eye.set(i, i, 1.0);
    CHECK(max_abs_diff(white, eye) < 1e-10);
  }
}

TEST_CASE("cholesky_upper closed form") {
  SymMatrix eye(2);
  eye.set(0, 0, 1.0);
  eye.set(1, 1, 1.0);
  Matrix h = cholesky_upper(SPDMatrix::validated(eye));
  CHECK(max_abs_diff(h, Matrix::identity(2)) < 1e-15);

  SymMatrix r(2);
  r.set(0, 0, 1.0);
  r.set(0, 1, 0.5);
  r.set(1, 1, 1.0);
  Matrix hr = cholesky_upper(SPDMatrix::validated(r));
  CHECK(hr(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hr(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(hr(1, 0) == 0.0);
  CHECK(hr(1, 1) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));
}

TEST_CASE("cholesky_upper round trip and uniqueness") {
  auto g = testutil::rng(13);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 + rep % 3;
    // random upper-triangular with positive diagonal
    Matrix h(n, n);
    for (int i = 0; i < n; ++i) {
      h(i, i) = testutil::uniform(g, 0.2, 2.0);
      for (int j = i + 1; j < n; ++j) h(i, j) = testutil::uniform(g, -1.0, 1.0);
    }
    Matrix hth = h.transposed() * h;
    SPDMatrix m = SPDMatrix::validated(SymMatrix::from_matrix(hth, 1e-12));
    Matrix h2 = cholesky_upper(m);
    CHECK(max_abs_diff(h2, h) < 1e-9);
  }
}

TEST_CASE("solve_saddle single site") {
  Matrix a(1, 1);
  a(0, 0) = 0.3;
  std::vector<double> b{0.9};
  SaddleSolution s = solve_saddle(a, b);
  CHECK(s.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.multiplier == doctest::Approx(0.9 - 0.3).epsilon(1e-12));
}

TEST_CASE("solve_saddle symmetric two sites") {
  Matrix a(2, 2);
  a(0, 1) = a(1, 0) = 1.0;
  std::vector<double> b{0.4, 0.4};
  SaddleSolution s = solve_saddle(a, b);
  CHECK(s.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(s.weights[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("solve_saddle residual and constraint on random systems") {
  auto g = testutil::rng(17);
  for (int rep = 0; rep < 300; ++rep) {
    int n = 2 + rep % 5;
    // Symmetric, zero diagonal, positive off-diagonal: shaped like a
    // variogram matrix and comfortably nonsingular.
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = testutil::uniform(g, 0.2, 2.0);
    std::vector<double> b(n);
    for (double& v : b) v = testutil::uniform(g, 0.0, 2.0);

    SaddleSolution s = solve_saddle(a, b);
    double wsum = 0.0;
    for (double w : s.weights) wsum += w;
    CHECK(std::abs(wsum - 1.0) <= 1e-12);
    for (int i = 0; i < n; ++i) {
      double r = s.multiplier - b[i];
      for (int j = 0; j < n; ++j) r += a(i, j) * s.weights[j];
      CHECK(std::abs(r) <= 1e-9);
    }
  }
}

TEST_CASE("solve_saddle singular system error") {
  Matrix a(2, 2);  // all zeros: augmented rows coincide
  std::vector<double> b{0.0, 0.0};
  CHECK_THROWS_AS(solve_saddle(a, b), Error);
  try {
    solve_saddle(a, b);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::SingularSystem);
  }
}

TEST_CASE("SymMatrix construction guards") {
  Matrix m(2, 2);
  m(0, 1) = 0.5;
  m(1, 0) = 0.6;  // asymmetric
  CHECK_THROWS_AS(SymMatrix::from_matrix(m, 1e-9), Error);

  SymMatrix u = SymMatrix::from_upper(2, std::vector<double>{1.0, 0.25, 2.0});
  CHECK(u(0, 1) == 0.25);
  CHECK(u(1, 0) == 0.25);
  CHECK(u(1, 1) == 2.0);
}
