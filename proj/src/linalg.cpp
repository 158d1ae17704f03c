#include "rddmk/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rddmk {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotPD: return "NotPD";
    case ErrorCode::NotCorrelation: return "NotCorrelation";
    case ErrorCode::AntipodalPoint: return "AntipodalPoint";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateMean: return "DegenerateMean";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::PartitionInfeasible: return "PartitionInfeasible";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::FitFailed: return "FitFailed";
    case ErrorCode::AggregationFailure: return "AggregationFailure";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::InvalidMatrix: return "InvalidMatrix";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

double Vec::dot(const Vec& o) const {
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += (*this)[i] * o[i];
  return s;
}

double Vec::norm() const { return std::sqrt(dot(*this)); }

void Vec::add_scaled(double w, const Vec& o) {
  for (int i = 0; i < size(); ++i) (*this)[i] += w * o[i];
}

void Vec::scale(double w) {
  for (int i = 0; i < size(); ++i) (*this)[i] *= w;
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius() const {
  double s = 0.0;
  for (int i = 0; i < rows_ * cols_; ++i) s += buf_[i] * buf_[i];
  return std::sqrt(s);
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    fail(ErrorCode::InvalidArgument, "matrix product dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

SymMatrix SymMatrix::from_matrix(const Matrix& m, double tol) {
  if (m.rows() != m.cols())
    fail(ErrorCode::InvalidArgument, "symmetric matrix must be square");
  int n = m.rows();
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(m(i, j)));
  SymMatrix s(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > tol * std::max(1.0, scale))
        fail(ErrorCode::InvalidArgument, "matrix is not symmetric");
      s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    }
  return s;
}

SymMatrix SymMatrix::from_upper(int dim, std::span<const double> upper) {
  if (static_cast<int>(upper.size()) != dim * (dim + 1) / 2)
    fail(ErrorCode::InvalidArgument, "upper-triangle entry count mismatch");
  SymMatrix s(dim);
  int k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) s.set(i, j, upper[k++]);
  return s;
}

double SymMatrix::frobenius() const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * (*this)(i, j);
  return std::sqrt(s);
}

double SymMatrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) s += (*this)(i, i);
  return s;
}

void SymMatrix::add_scaled(double w, const SymMatrix& o) {
  for (int i = 0; i < dim_ * dim_; ++i) buf_[i] += w * o.buf_[i];
}

void SymMatrix::scale(double w) {
  for (int i = 0; i < dim_ * dim_; ++i) buf_[i] *= w;
}

std::vector<double> SymMatrix::upper() const {
  std::vector<double> u;
  u.reserve(dim_ * (dim_ + 1) / 2);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) u.push_back((*this)(i, j));
  return u;
}

Matrix SymMatrix::to_matrix() const {
  Matrix m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

SPDMatrix SPDMatrix::validated(const SymMatrix& m, double eig_floor) {
  SymEigen e = sym_eigen(m);
  double top = e.values.front();
  double bottom = e.values.back();
  if (!(top > 0.0) || !(bottom > eig_floor * top))
    fail(ErrorCode::NotPD, "matrix is not positive definite beyond the eigenvalue floor");
  return SPDMatrix(m);
}

SymEigen sym_eigen(const SymMatrix& m, int max_sweeps) {
  int n = m.dim();
  SymEigen out;
  out.values.assign(n, 0.0);
  out.vectors = Matrix::identity(n);
  if (n == 0) return out;

  Matrix a = m.to_matrix();
  Matrix& v = out.vectors;

  double norm = m.frobenius();
  if (norm == 0.0) return out;
  double thresh = 1e-14 * norm;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  int sweep = 0;
  while (off_norm() > thresh) {
    if (++sweep > max_sweeps)
      fail(ErrorCode::NoConvergence, "Jacobi eigendecomposition did not converge");
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        double tau = s / (1.0 + c);

        double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int i = 0; i < n; ++i) {
          if (i != p && i != q) {
            double aip = a(i, p), aiq = a(i, q);
            a(i, p) = aip - s * (aiq + tau * aip);
            a(p, i) = a(i, p);
            a(i, q) = aiq + s * (aip - tau * aiq);
            a(q, i) = a(i, q);
          }
          double vip = v(i, p), viq = v(i, q);
          v(i, p) = vip - s * (viq + tau * vip);
          v(i, q) = viq + s * (vip - tau * viq);
        }
      }
  }

  for (int i = 0; i < n; ++i) out.values[i] = a(i, i);

  // sort descending, carrying eigenvector columns along
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return out.values[x] > out.values[y]; });
  std::vector<double> vals(n);
  Matrix vecs(n, n);
  for (int j = 0; j < n; ++j) {
    vals[j] = out.values[order[j]];
    for (int i = 0; i < n; ++i) vecs(i, j) = v(i, order[j]);
  }
  out.values = std::move(vals);
  out.vectors = std::move(vecs);
  return out;
}

namespace {

// V f(D) V^T for an eigendecomposition, symmetrized exactly.
SymMatrix eigen_apply(const SymEigen& e, const std::vector<double>& fvals) {
  int n = static_cast<int>(fvals.size());
  const Matrix& v = e.vectors;
  Matrix r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += v(i, k) * fvals[k] * v(j, k);
      r(i, j) = s;
    }
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.set(i, j, 0.5 * (r(i, j) + r(j, i)));
  return out;
}

}  // namespace

SPDMatrix matrix_exp_sym(const SymMatrix& y, double overflow_guard) {
  SymEigen e = sym_eigen(y);
  if (!e.values.empty() && e.values.front() > overflow_guard)
    fail(ErrorCode::Overflow, "matrix exponential overflow guard tripped");
  std::vector<double> f(e.values.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = std::exp(e.values[i]);
  return SPDMatrix::trusted(eigen_apply(e, f));
}

SymMatrix matrix_log_spd(const SPDMatrix& m) {
  SymEigen e = sym_eigen(m.sym());
  std::vector<double> f(e.values.size());
  for (size_t i = 0; i < f.size(); ++i) {
    if (!(e.values[i] > 0.0))
      fail(ErrorCode::NotPD, "matrix logarithm requires strictly positive eigenvalues");
    f[i] = std::log(e.values[i]);
  }
  return eigen_apply(e, f);
}

SqrtPair spd_sqrt(const SPDMatrix& m) {
  SymEigen e = sym_eigen(m.sym());
  std::vector<double> r(e.values.size()), ir(e.values.size());
  for (size_t i = 0; i < r.size(); ++i) {
    if (!(e.values[i] > 0.0))
      fail(ErrorCode::NotPD, "matrix square root requires strictly positive eigenvalues");
    r[i] = std::sqrt(e.values[i]);
    ir[i] = 1.0 / r[i];
  }
  return SqrtPair{SPDMatrix::trusted(eigen_apply(e, r)),
                  SPDMatrix::trusted(eigen_apply(e, ir))};
}

Matrix cholesky_upper(const SPDMatrix& m) {
  int n = m.dim();
  Matrix h(n, n);  // upper triangular, H^T H = m
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= h(k, j) * h(k, j);
    if (!(d > 0.0))
      fail(ErrorCode::NotPD, "Cholesky pivot is not positive");
    h(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = m(j, i);
      for (int k = 0; k < j; ++k) s -= h(k, j) * h(k, i);
      h(j, i) = s / h(j, j);
    }
  }
  return h;
}

SymMatrix sym_congruence(const SymMatrix& p, const SymMatrix& s) {
  int n = p.dim();
  // t = p*s, r = t*p, then symmetrize
  Matrix t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += p(i, k) * s(k, j);
      t(i, j) = acc;
    }
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double rij = 0.0, rji = 0.0;
      for (int k = 0; k < n; ++k) {
        rij += t(i, k) * p(k, j);
        rji += t(j, k) * p(k, i);
      }
      out.set(i, j, 0.5 * (rij + rji));
    }
  return out;
}

SaddleSolver::SaddleSolver(const Matrix& a, double pivot_tol) : n_(a.rows()) {
  if (a.rows() != a.cols())
    fail(ErrorCode::InvalidArgument, "saddle system matrix must be square");
  int m = n_ + 1;
  lu_ = Matrix(m, m);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) lu_(i, j) = a(i, j);
    lu_(i, n_) = 1.0;
    lu_(n_, i) = 1.0;
  }
  lu_(n_, n_) = 0.0;

  perm_.resize(m);
  std::iota(perm_.begin(), perm_.end(), 0);

  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(lu_(r, col)) > std::abs(lu_(piv, col))) piv = r;
    if (std::abs(lu_(piv, col)) < pivot_tol)
      fail(ErrorCode::SingularSystem, "kriging saddle system is singular");
    if (piv != col) {
      for (int j = 0; j < m; ++j) std::swap(lu_(piv, j), lu_(col, j));
      std::swap(perm_[piv], perm_[col]);
    }
    for (int r = col + 1; r < m; ++r) {
      double f = lu_(r, col) / lu_(col, col);
      lu_(r, col) = f;
      for (int j = col + 1; j < m; ++j) lu_(r, j) -= f * lu_(col, j);
    }
  }
}

SaddleSolution SaddleSolver::solve(std::span<const double> b) const {
  if (static_cast<int>(b.size()) != n_)
    fail(ErrorCode::InvalidArgument, "saddle right-hand side size mismatch");
  int m = n_ + 1;
  std::vector<double> y(m);
  for (int i = 0; i < m; ++i) y[i] = (perm_[i] < n_) ? b[perm_[i]] : 1.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j) y[i] -= lu_(i, j) * y[j];
  for (int i = m - 1; i >= 0; --i) {
    for (int j = i + 1; j < m; ++j) y[i] -= lu_(i, j) * y[j];
    y[i] /= lu_(i, i);
  }
  SaddleSolution out;
  out.weights.assign(y.begin(), y.begin() + n_);
  out.multiplier = y[n_];
  return out;
}

SaddleSolution solve_saddle(const Matrix& a, std::span<const double> b) {
  return SaddleSolver(a).solve(b);
}

}  // namespace rddmk
