#include "rddmk/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rddmk {

// ---------------------------------------------------------------- SPD(p)

SPDMatrix spd_exp(const SPDMatrix& base, const SymMatrix& tangent) {
  return SpdManifold::Chart(base).exp(tangent);
}

SymMatrix spd_log(const SPDMatrix& base, const SPDMatrix& point) {
  return SpdManifold::Chart(base).log(point);
}

namespace {

bool same_entries(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

}  // namespace

double spd_dist(const SPDMatrix& a, const SPDMatrix& b) {
  if (same_entries(a.sym().to_matrix(), b.sym().to_matrix())) return 0.0;
  SqrtPair ra = spd_sqrt(a);
  SymMatrix w = sym_congruence(ra.inv_root.sym(), b.sym());
  SymEigen e = sym_eigen(w);
  double s = 0.0;
  for (double lam : e.values) {
    if (!(lam > 0.0))
      fail(ErrorCode::NotPD, "distance requires positive definite arguments");
    double l = std::log(lam);
    s += l * l;
  }
  return std::sqrt(s);
}

double spd_inner(const SPDMatrix& base, const SymMatrix& u, const SymMatrix& v) {
  SqrtPair r = spd_sqrt(base);
  SymMatrix wu = sym_congruence(r.inv_root.sym(), u);
  SymMatrix wv = sym_congruence(r.inv_root.sym(), v);
  double s = 0.0;
  int n = wu.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += wu(i, j) * wv(i, j);
  return s;
}

SymMatrix SpdManifold::Chart::log(const Point& x) const {
  SymMatrix w = sym_congruence(roots_.inv_root.sym(), x.sym());
  SymEigen e = sym_eigen(w);
  std::vector<double> f(e.values.size());
  for (size_t i = 0; i < f.size(); ++i) {
    if (!(e.values[i] > 0.0))
      fail(ErrorCode::NotPD, "log target is not positive definite at this base");
    f[i] = std::log(e.values[i]);
  }
  // root * (V log(D) V^T) * root
  SymMatrix l(w.dim());
  const Matrix& v = e.vectors;
  for (int i = 0; i < w.dim(); ++i)
    for (int j = i; j < w.dim(); ++j) {
      double s = 0.0;
      for (int k = 0; k < w.dim(); ++k) s += v(i, k) * f[k] * v(j, k);
      l.set(i, j, s);
    }
  return sym_congruence(roots_.root.sym(), l);
}

SPDMatrix SpdManifold::Chart::exp(const Tangent& y) const {
  SymMatrix w = sym_congruence(roots_.inv_root.sym(), y);
  SPDMatrix e = matrix_exp_sym(w);
  return SPDMatrix::trusted(sym_congruence(roots_.root.sym(), e.sym()));
}

double SpdManifold::Chart::norm(const Tangent& y) const {
  SymMatrix w = sym_congruence(roots_.inv_root.sym(), y);
  return w.frobenius();
}

Vec SpdManifold::Chart::flat(const Tangent& y) const {
  SymMatrix w = sym_congruence(roots_.inv_root.sym(), y);
  int p = w.dim();
  Vec out(p * (p + 1) / 2);
  const double sqrt2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) out[k++] = (i == j) ? w(i, j) : sqrt2 * w(i, j);
  return out;
}

SPDMatrix SpdManifold::extrinsic_mean(std::span<const Point> pts) {
  if (pts.empty()) fail(ErrorCode::InvalidArgument, "mean of an empty set");
  SymMatrix acc(pts.front().dim());
  for (const Point& p : pts) acc.add_scaled(1.0 / static_cast<double>(pts.size()), p.sym());
  // arithmetic mean of SPD matrices stays in the cone
  return SPDMatrix::trusted(acc);
}

// ---------------------------------------------------------------- sphere

SpherePoint SpherePoint::make(const Vec& v) {
  double n = v.norm();
  if (std::abs(n - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "sphere point must have unit norm");
  Vec c = v;
  c.scale(1.0 / n);
  SpherePoint p;
  p.coords_ = std::move(c);
  return p;
}

SpherePoint SpherePoint::trusted(Vec v) {
  double n = v.norm();
  if (!(n > 0.0))
    fail(ErrorCode::DegenerateMean, "cannot normalize a zero vector to the sphere");
  v.scale(1.0 / n);
  SpherePoint p;
  p.coords_ = std::move(v);
  return p;
}

SphereTangent sphere_tangent(const SpherePoint& base, const Vec& coords,
                             double ortho_tol) {
  double d = 0.0;
  for (int i = 0; i < coords.size(); ++i) d += base[i] * coords[i];
  if (std::abs(d) > ortho_tol)
    fail(ErrorCode::InvalidArgument, "tangent vector is not orthogonal to its base");
  Vec c = coords;
  c.add_scaled(-d, base.coords());  // exact projection
  return SphereTangent{base.coords(), std::move(c)};
}

SpherePoint sphere_exp(const SpherePoint& base, const SphereTangent& t) {
  double v = t.coords.norm();
  if (v < 1e-300) return base;
  double c = std::cos(v);
  double s = (v > 1e-8) ? std::sin(v) / v : 1.0 - v * v / 6.0;
  Vec out = base.coords();
  out.scale(c);
  out.add_scaled(s, t.coords);
  return SpherePoint::trusted(std::move(out));
}

SphereTangent sphere_log(const SpherePoint& base, const SpherePoint& point) {
  double dot = 0.0;
  for (int i = 0; i < base.dim(); ++i) dot += base[i] * point[i];
  dot = std::clamp(dot, -1.0, 1.0);
  if (dot <= -1.0 + kAntipodalTol)
    fail(ErrorCode::AntipodalPoint, "log undefined near the antipodal point");
  Vec proj = point.coords();
  proj.add_scaled(-dot, base.coords());
  double np = proj.norm();
  double d = std::acos(dot);
  if (np < 1e-300) return SphereTangent{base.coords(), Vec(base.dim())};
  proj.scale(d / np);
  return SphereTangent{base.coords(), std::move(proj)};
}

double sphere_dist(const SpherePoint& a, const SpherePoint& b) {
  double dot = 0.0;
  bool identical = a.dim() == b.dim();
  for (int i = 0; i < a.dim(); ++i) {
    dot += a[i] * b[i];
    identical = identical && a[i] == b[i];
  }
  if (identical) return 0.0;
  return std::acos(std::clamp(dot, -1.0, 1.0));
}

SpherePoint extrinsic_mean_sphere(std::span<const SpherePoint> points) {
  if (points.empty()) fail(ErrorCode::InvalidArgument, "mean of an empty set");
  Vec acc(points.front().dim());
  for (const SpherePoint& p : points)
    acc.add_scaled(1.0 / static_cast<double>(points.size()), p.coords());
  if (acc.norm() < 1e-12)
    fail(ErrorCode::DegenerateMean, "extrinsic sphere mean is degenerate");
  return SpherePoint::trusted(std::move(acc));
}

// ---------------------------------------------------------------- Chol(p)

namespace {

Vec matrix_column_head(const Matrix& m, int j, int len) {
  Vec v(len);
  for (int i = 0; i < len; ++i) v[i] = m(i, j);
  return v;
}

}  // namespace

CholFactor CholFactor::validated(const Matrix& h) {
  if (h.rows() != h.cols())
    fail(ErrorCode::InvalidArgument, "Cholesky factor must be square");
  int p = h.rows();
  if (p < 1) fail(ErrorCode::InvalidArgument, "empty Cholesky factor");
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(h(i, j)) > 1e-12)
        fail(ErrorCode::InvalidArgument, "Cholesky factor must be upper triangular");
  if (std::abs(h(0, 0) - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "leading entry of a Cholesky factor must be 1");
  for (int j = 1; j < p; ++j) {
    double n = matrix_column_head(h, j, j + 1).norm();
    if (std::abs(n - 1.0) > 1e-12)
      fail(ErrorCode::InvalidArgument,
           "Cholesky factor column " + std::to_string(j + 1) + " is not unit norm");
  }
  return trusted(h);
}

CholFactor CholFactor::trusted(Matrix h) {
  int p = h.rows();
  for (int i = 1; i < p; ++i)
    for (int j = 0; j < i; ++j) h(i, j) = 0.0;
  h(0, 0) = 1.0;
  for (int j = 1; j < p; ++j) {
    double n = matrix_column_head(h, j, j + 1).norm();
    if (!(n > 0.0))
      fail(ErrorCode::DegenerateMean, "cannot normalize a zero Cholesky column");
    for (int i = 0; i <= j; ++i) h(i, j) /= n;
  }
  CholFactor f;
  f.h_ = std::move(h);
  return f;
}

Vec CholFactor::column(int j) const { return matrix_column_head(h_, j, j + 1); }

void CholTangent::add_scaled(double w, const CholTangent& t) {
  for (int i = 0; i < entries.rows(); ++i)
    for (int j = i; j < entries.cols(); ++j) entries(i, j) += w * t.entries(i, j);
}

void CholTangent::scale(double w) {
  for (int i = 0; i < entries.rows(); ++i)
    for (int j = i; j < entries.cols(); ++j) entries(i, j) *= w;
}

CholFactor chol_exp(const CholFactor& base, const CholTangent& t) {
  int p = base.dim();
  Matrix out(p, p);
  out(0, 0) = 1.0;
  for (int j = 1; j < p; ++j) {
    SpherePoint bz = SpherePoint::trusted(base.column(j));
    Vec tc(j + 1);
    for (int i = 0; i <= j; ++i) tc[i] = t.entries(i, j);
    SpherePoint ez = sphere_exp(bz, SphereTangent{bz.coords(), std::move(tc)});
    for (int i = 0; i <= j; ++i) out(i, j) = ez[i];
  }
  return CholFactor::trusted(std::move(out));
}

CholTangent chol_log(const CholFactor& base, const CholFactor& point) {
  int p = base.dim();
  Matrix out(p, p);
  for (int j = 1; j < p; ++j) {
    SpherePoint bz = SpherePoint::trusted(base.column(j));
    SpherePoint pz = SpherePoint::trusted(point.column(j));
    try {
      SphereTangent t = sphere_log(bz, pz);
      for (int i = 0; i <= j; ++i) out(i, j) = t.coords[i];
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AntipodalPoint)
        fail(ErrorCode::AntipodalPoint, e.what(), "column " + std::to_string(j + 1));
      throw;
    }
  }
  return CholTangent{base, std::move(out)};
}

double chol_dist(const CholFactor& a, const CholFactor& b) {
  if (same_entries(a.matrix(), b.matrix())) return 0.0;
  double s = 0.0;
  for (int j = 1; j < a.dim(); ++j) {
    double d = sphere_dist(SpherePoint::trusted(a.column(j)),
                           SpherePoint::trusted(b.column(j)));
    s += d * d;
  }
  return std::sqrt(s);
}

CholFactor corr_to_chol(const SymMatrix& r) {
  for (int i = 0; i < r.dim(); ++i)
    if (std::abs(r(i, i) - 1.0) > 1e-10)
      fail(ErrorCode::NotCorrelation, "correlation matrix must have unit diagonal");
  SPDMatrix spd = SPDMatrix::validated(r);
  return CholFactor::trusted(cholesky_upper(spd));
}

SPDMatrix chol_to_corr(const CholFactor& h) {
  const Matrix& m = h.matrix();
  Matrix hth = m.transposed() * m;
  return SPDMatrix::validated(SymMatrix::from_matrix(hth, 1e-9));
}

CholFactor extrinsic_mean_chol(std::span<const CholFactor> points) {
  if (points.empty()) fail(ErrorCode::InvalidArgument, "mean of an empty set");
  int p = points.front().dim();
  Matrix acc(p, p);
  for (const CholFactor& f : points)
    for (int i = 0; i < p; ++i)
      for (int j = i; j < p; ++j)
        acc(i, j) += f(i, j) / static_cast<double>(points.size());
  for (int j = 1; j < p; ++j) {
    double n = matrix_column_head(acc, j, j + 1).norm();
    if (n < 1e-12)
      fail(ErrorCode::DegenerateMean,
           "column-wise mean is degenerate", "column " + std::to_string(j + 1));
  }
  return CholFactor::trusted(std::move(acc));
}

double CholManifold::Chart::norm(const Tangent& y) const {
  double s = 0.0;
  for (int j = 1; j < base_.dim(); ++j)
    for (int i = 0; i <= j; ++i) s += y.entries(i, j) * y.entries(i, j);
  return std::sqrt(s);
}

Vec CholManifold::Chart::flat(const Tangent& y) const {
  Vec out(flat_dim());
  int k = 0;
  for (int j = 1; j < base_.dim(); ++j)
    for (int i = 0; i <= j; ++i) out[k++] = y.entries(i, j);
  return out;
}

}  // namespace rddmk
