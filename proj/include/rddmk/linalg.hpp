#pragma once

// Dense kernels for small symmetric matrices (p up to ~10, typically 2).
// Everything is value-typed with inline storage for p <= 3 so the hot
// prediction loops stay allocation-free.

#include <array>
#include <cstring>
#include <memory>
#include <span>
#include <vector>

#include "rddmk/error.hpp"

namespace rddmk {

namespace detail {

class Buf {
 public:
  Buf() = default;
  explicit Buf(int n) { resize(n); }
  Buf(const Buf& o) { assign(o); }
  Buf(Buf&&) noexcept = default;
  Buf& operator=(const Buf& o) {
    if (this != &o) assign(o);
    return *this;
  }
  Buf& operator=(Buf&&) noexcept = default;

  void resize(int n) {
    size_ = n;
    if (n > kInline) heap_ = std::make_unique<double[]>(static_cast<size_t>(n));
    std::memset(data(), 0, sizeof(double) * static_cast<size_t>(n));
  }

  int size() const { return size_; }
  double* data() { return size_ > kInline ? heap_.get() : small_.data(); }
  const double* data() const { return size_ > kInline ? heap_.get() : small_.data(); }
  double& operator[](int i) { return data()[i]; }
  double operator[](int i) const { return data()[i]; }

 private:
  static constexpr int kInline = 9;
  void assign(const Buf& o) {
    resize(o.size_);
    std::memcpy(data(), o.data(), sizeof(double) * static_cast<size_t>(size_));
  }
  int size_ = 0;
  std::array<double, kInline> small_{};
  std::unique_ptr<double[]> heap_;
};

}  // namespace detail

// Plain coordinate vector (sphere points, tangent coordinates).
class Vec {
 public:
  Vec() = default;
  explicit Vec(int n) : buf_(n) {}
  explicit Vec(std::span<const double> v) : buf_(static_cast<int>(v.size())) {
    for (int i = 0; i < size(); ++i) buf_[i] = v[i];
  }

  int size() const { return buf_.size(); }
  double& operator[](int i) { return buf_[i]; }
  double operator[](int i) const { return buf_[i]; }
  double* data() { return buf_.data(); }
  const double* data() const { return buf_.data(); }

  double dot(const Vec& o) const;
  double norm() const;
  void add_scaled(double w, const Vec& o);
  void scale(double w);

 private:
  detail::Buf buf_;
};

// General dense matrix, row-major. Used for eigenvector bases, Cholesky
// factors and the odd congruence product; not meant for large n.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), buf_(rows * cols) {}

  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return buf_[i * cols_ + j]; }
  double operator()(int i, int j) const { return buf_[i * cols_ + j]; }

  Matrix transposed() const;
  double frobenius() const;

  friend Matrix operator*(const Matrix& a, const Matrix& b);

 private:
  int rows_ = 0;
  int cols_ = 0;
  detail::Buf buf_;
};

// Symmetric matrix with exact entry-level symmetry maintained by set().
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), buf_(dim * dim) {}

  // Requires |m(i,j) - m(j,i)| <= tol * max|entry|; stores (m + m^T)/2 so the
  // result is exactly symmetric.
  static SymMatrix from_matrix(const Matrix& m, double tol = 1e-9);
  // Upper triangle in row-major order: m11, m12, ..., m1p, m22, ...
  static SymMatrix from_upper(int dim, std::span<const double> upper);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return buf_[i * dim_ + j]; }
  void set(int i, int j, double v) {
    buf_[i * dim_ + j] = v;
    buf_[j * dim_ + i] = v;
  }

  double frobenius() const;
  double trace() const;
  void add_scaled(double w, const SymMatrix& o);
  void scale(double w);
  std::vector<double> upper() const;
  Matrix to_matrix() const;

 private:
  int dim_ = 0;
  detail::Buf buf_;
};

// Symmetric positive definite matrix. `validated` runs an eigenvalue check
// with a relative floor; `trusted` is for results that are positive by
// construction (matrix exponentials, congruences of SPD matrices).
class SPDMatrix {
 public:
  SPDMatrix() = default;

  static SPDMatrix validated(const SymMatrix& m, double eig_floor = 1e-10);
  static SPDMatrix trusted(SymMatrix m) { return SPDMatrix(std::move(m)); }

  int dim() const { return sym_.dim(); }
  const SymMatrix& sym() const { return sym_; }
  double operator()(int i, int j) const { return sym_(i, j); }

 private:
  explicit SPDMatrix(SymMatrix m) : sym_(std::move(m)) {}
  SymMatrix sym_;
};

struct SymEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // columns are eigenvectors, orthonormal
};

// Cyclic Jacobi. Hard error (NoConvergence) after max_sweeps.
SymEigen sym_eigen(const SymMatrix& m, int max_sweeps = 100);

// exp of a symmetric matrix; Overflow if max eigenvalue > overflow_guard.
SPDMatrix matrix_exp_sym(const SymMatrix& y, double overflow_guard = 300.0);

// log of an SPD matrix; NotPD if an eigenvalue is not strictly positive.
SymMatrix matrix_log_spd(const SPDMatrix& m);

struct SqrtPair {
  SPDMatrix root;
  SPDMatrix inv_root;
};
SqrtPair spd_sqrt(const SPDMatrix& m);

// Upper-triangular H with H^T H = m and positive diagonal.
Matrix cholesky_upper(const SPDMatrix& m);

// P * S * P with P symmetric; the result is symmetrized exactly.
SymMatrix sym_congruence(const SymMatrix& p, const SymMatrix& s);

struct SaddleSolution {
  std::vector<double> weights;
  double multiplier = 0.0;
};

// Equality-constrained system
//   [A 1; 1^T 0] [w; mu] = [b; 1]
// solved by Gaussian elimination with partial pivoting on the full (n+1)
// system. The factorization is reusable across right-hand sides.
class SaddleSolver {
 public:
  explicit SaddleSolver(const Matrix& a, double pivot_tol = 1e-12);
  int n() const { return n_; }
  SaddleSolution solve(std::span<const double> b) const;

 private:
  int n_ = 0;
  Matrix lu_;
  std::vector<int> perm_;
};

SaddleSolution solve_saddle(const Matrix& a, std::span<const double> b);

}  // namespace rddmk
