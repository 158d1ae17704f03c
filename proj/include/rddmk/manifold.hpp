#pragma once

// Riemannian geometry for the three supported data spaces:
//   - SPD(p) with the affine-invariant metric,
//   - the unit hypersphere S^(q-1) in R^q,
//   - Chol(p), upper-triangular factors of correlation matrices, treated as a
//     product of spheres column by column (first column pinned to e1).
//
// Each space exposes a policy struct (Point/Tangent types, exp, log, dist)
// plus a per-base Chart that caches whatever makes repeated logs cheap.

#include <span>
#include <vector>

#include "rddmk/error.hpp"
#include "rddmk/linalg.hpp"

namespace rddmk {

inline constexpr double kAntipodalTol = 1e-8;

// ---------------------------------------------------------------- SPD(p)

SPDMatrix spd_exp(const SPDMatrix& base, const SymMatrix& tangent);
SymMatrix spd_log(const SPDMatrix& base, const SPDMatrix& point);
double spd_dist(const SPDMatrix& a, const SPDMatrix& b);
double spd_inner(const SPDMatrix& base, const SymMatrix& u, const SymMatrix& v);

// ---------------------------------------------------------------- sphere

class SpherePoint {
 public:
  SpherePoint() = default;
  // Requires | ||v|| - 1 | <= 1e-12; the stored value is renormalized.
  static SpherePoint make(const Vec& v);
  // Renormalizes whatever it is given; for internally produced values.
  static SpherePoint trusted(Vec v);

  int dim() const { return coords_.size(); }
  const Vec& coords() const { return coords_; }
  double operator[](int i) const { return coords_[i]; }

 private:
  Vec coords_;
};

struct SphereTangent {
  Vec base;    // unit vector the tangent is attached to
  Vec coords;  // orthogonal to base

  void add_scaled(double w, const SphereTangent& t) { coords.add_scaled(w, t.coords); }
  void scale(double w) { coords.scale(w); }
};

SphereTangent sphere_tangent(const SpherePoint& base, const Vec& coords,
                             double ortho_tol = 1e-10);
SpherePoint sphere_exp(const SpherePoint& base, const SphereTangent& t);
SphereTangent sphere_log(const SpherePoint& base, const SpherePoint& point);
double sphere_dist(const SpherePoint& a, const SpherePoint& b);
SpherePoint extrinsic_mean_sphere(std::span<const SpherePoint> points);

// ---------------------------------------------------------------- Chol(p)

class CholFactor {
 public:
  CholFactor() = default;
  // Upper-triangular, h(0,0) = 1, each column unit-norm (tol 1e-12).
  static CholFactor validated(const Matrix& h);
  static CholFactor trusted(Matrix h);  // renormalizes columns

  int dim() const { return h_.rows(); }
  const Matrix& matrix() const { return h_; }
  double operator()(int i, int j) const { return h_(i, j); }

  Vec column(int j) const;  // first j+1 entries

 private:
  Matrix h_;
};

struct CholTangent {
  CholFactor base;
  Matrix entries;  // upper-triangular, column j orthogonal to base column j

  void add_scaled(double w, const CholTangent& t);
  void scale(double w);
};

CholFactor chol_exp(const CholFactor& base, const CholTangent& t);
CholTangent chol_log(const CholFactor& base, const CholFactor& point);
double chol_dist(const CholFactor& a, const CholFactor& b);

// Bijection with full-rank correlation matrices.
CholFactor corr_to_chol(const SymMatrix& r);
SPDMatrix chol_to_corr(const CholFactor& h);

CholFactor extrinsic_mean_chol(std::span<const CholFactor> points);

// ---------------------------------------------------------------- policies

struct SpdManifold {
  using Point = SPDMatrix;
  using Tangent = SymMatrix;

  static double dist(const Point& a, const Point& b) { return spd_dist(a, b); }
  static void tangent_add_scaled(Tangent& acc, double w, const Tangent& t) {
    acc.add_scaled(w, t);
  }
  static Point extrinsic_mean(std::span<const Point> pts);

  class Chart {
   public:
    explicit Chart(const Point& base) : base_(base), roots_(spd_sqrt(base)) {}
    const Point& base() const { return base_; }
    Tangent log(const Point& x) const;
    Point exp(const Tangent& y) const;
    double norm(const Tangent& y) const;
    Vec flat(const Tangent& y) const;
    int flat_dim() const { return base_.dim() * (base_.dim() + 1) / 2; }
    Tangent zero() const { return SymMatrix(base_.dim()); }

   private:
    Point base_;
    SqrtPair roots_;
  };
};

struct SphereManifold {
  using Point = SpherePoint;
  using Tangent = SphereTangent;

  static double dist(const Point& a, const Point& b) { return sphere_dist(a, b); }
  static void tangent_add_scaled(Tangent& acc, double w, const Tangent& t) {
    acc.add_scaled(w, t);
  }
  static Point extrinsic_mean(std::span<const Point> pts) {
    return extrinsic_mean_sphere(pts);
  }

  class Chart {
   public:
    explicit Chart(const Point& base) : base_(base) {}
    const Point& base() const { return base_; }
    Tangent log(const Point& x) const { return sphere_log(base_, x); }
    Point exp(const Tangent& y) const { return sphere_exp(base_, y); }
    double norm(const Tangent& y) const { return y.coords.norm(); }
    Vec flat(const Tangent& y) const { return y.coords; }
    int flat_dim() const { return base_.dim(); }
    Tangent zero() const { return SphereTangent{base_.coords(), Vec(base_.dim())}; }

   private:
    Point base_;
  };
};

struct CholManifold {
  using Point = CholFactor;
  using Tangent = CholTangent;

  static double dist(const Point& a, const Point& b) { return chol_dist(a, b); }
  static void tangent_add_scaled(Tangent& acc, double w, const Tangent& t) {
    acc.add_scaled(w, t);
  }
  static Point extrinsic_mean(std::span<const Point> pts) {
    return extrinsic_mean_chol(pts);
  }

  class Chart {
   public:
    explicit Chart(const Point& base) : base_(base) {}
    const Point& base() const { return base_; }
    Tangent log(const Point& x) const { return chol_log(base_, x); }
    Point exp(const Tangent& y) const { return chol_exp(base_, y); }
    double norm(const Tangent& y) const;
    Vec flat(const Tangent& y) const;
    int flat_dim() const {
      int p = base_.dim();
      return p * (p + 1) / 2 - 1;
    }
    Tangent zero() const {
      return CholTangent{base_, Matrix(base_.dim(), base_.dim())};
    }

   private:
    Point base_;
  };
};

// ----------------------------------------------------- intrinsic (Karcher)

// Weighted Frechet mean by fixed-point iteration from points[0]. Stops when
// n * ||weighted mean of logs||_base <= tol so converged results also satisfy
// the unweighted sum-of-logs first-order condition at the same tolerance.
template <class M>
typename M::Point intrinsic_mean(std::span<const typename M::Point> points,
                                 std::span<const double> weights = {},
                                 double tol = 1e-9, int max_iter = 200) {
  int n = static_cast<int>(points.size());
  if (n == 0) fail(ErrorCode::InvalidArgument, "intrinsic mean of an empty set");
  if (n == 1) return points[0];

  std::vector<double> w;
  if (weights.empty()) {
    w.assign(n, 1.0 / n);
  } else {
    if (static_cast<int>(weights.size()) != n)
      fail(ErrorCode::InvalidArgument, "weight count mismatch in intrinsic mean");
    double s = 0.0;
    for (double v : weights) s += v;
    if (!(s > 0.0)) fail(ErrorCode::InvalidArgument, "weights must have positive sum");
    w.resize(n);
    for (int i = 0; i < n; ++i) w[i] = weights[i] / s;
  }

  typename M::Point mean = points[0];
  for (int iter = 0; iter < max_iter; ++iter) {
    typename M::Chart chart(mean);
    typename M::Tangent step = chart.zero();
    for (int i = 0; i < n; ++i)
      M::tangent_add_scaled(step, w[i], chart.log(points[i]));
    if (n * chart.norm(step) <= tol) return mean;
    mean = chart.exp(step);
  }
  fail(ErrorCode::NoConvergence, "intrinsic mean iteration did not converge");
}

}  // namespace rddmk
