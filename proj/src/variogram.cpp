#include "rddmk/variogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rddmk {

double kernel_weight(const KernelConfig& cfg, double d, bool same_tile) {
  if (d < 0.0) fail(ErrorCode::PreconditionViolation, "negative distance");
  switch (cfg.kind) {
    case KernelConfig::Kind::Gaussian:
      if (!(cfg.bandwidth > 0.0))
        fail(ErrorCode::InvalidArgument, "gaussian kernel needs positive bandwidth");
      return std::exp(-d * d / (2.0 * cfg.bandwidth * cfg.bandwidth));
    case KernelConfig::Kind::TileIndicator:
      return same_tile ? 1.0 : 0.0;
  }
  fail(ErrorCode::InvalidArgument, "unknown kernel kind");
}

int EmpiricalVariogram::populated() const {
  int n = 0;
  for (int c : bin_counts) n += (c > 0);
  return n;
}

namespace {

double sq_dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

EmpiricalVariogram empirical_variogram(std::span<const Vec> flat_logs,
                                       const DomainGraph& graph, int center,
                                       std::span<const char> tile_membership,
                                       const KernelConfig& kernel,
                                       const BinSpec& bins) {
  int n = graph.site_count();
  if (static_cast<int>(flat_logs.size()) != n ||
      static_cast<int>(tile_membership.size()) != n)
    fail(ErrorCode::PreconditionViolation, "log/membership arrays must cover all sites");
  if (bins.n_bins < 1) fail(ErrorCode::PreconditionViolation, "need at least one bin");

  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = kernel_weight(kernel, graph.site_dist(center, i), tile_membership[i] != 0);

  double max_pair = 0.0;
  for (int i = 0; i < n; ++i) {
    if (w[i] <= 0.0) continue;
    for (int j = i + 1; j < n; ++j)
      if (w[j] > 0.0) max_pair = std::max(max_pair, graph.site_dist(i, j));
  }
  double h_max = 0.5 * max_pair;

  EmpiricalVariogram out;
  out.h_max = h_max;
  out.lag_centers.resize(bins.n_bins);
  out.semivariances.assign(bins.n_bins, std::numeric_limits<double>::quiet_NaN());
  out.pair_weights.assign(bins.n_bins, 0.0);
  out.bin_counts.assign(bins.n_bins, 0);
  double width = h_max / bins.n_bins;
  for (int b = 0; b < bins.n_bins; ++b) out.lag_centers[b] = (b + 0.5) * width;
  if (h_max <= 0.0) fail(ErrorCode::NoPairs, "no positive-weight site pairs");

  std::vector<double> num(bins.n_bins, 0.0);
  for (int i = 0; i < n; ++i) {
    if (w[i] <= 0.0) continue;
    for (int j = i + 1; j < n; ++j) {
      double ww = w[i] * w[j];
      if (ww < bins.pair_weight_cutoff) continue;
      double h = graph.site_dist(i, j);
      if (h <= 0.0 || h > h_max) continue;
      int b = std::min(bins.n_bins - 1,
                       static_cast<int>(std::ceil(h / width)) - 1);
      num[b] += ww * sq_dist(flat_logs[i], flat_logs[j]);
      out.pair_weights[b] += ww;
      out.bin_counts[b] += 1;
    }
  }
  int filled = 0;
  for (int b = 0; b < bins.n_bins; ++b)
    if (out.bin_counts[b] > 0) {
      out.semivariances[b] = num[b] / (2.0 * out.pair_weights[b]);
      ++filled;
    }
  if (filled == 0) fail(ErrorCode::NoPairs, "every lag bin is empty");
  return out;
}

namespace {

// unit-sill, zero-nugget shape; f(0)=0, f -> 1
double base_shape(VariogramModel::Family fam, double h, double range) {
  if (h <= 0.0) return 0.0;
  switch (fam) {
    case VariogramModel::Family::Spherical: {
      if (h >= range) return 1.0;
      double r = h / range;
      return 1.5 * r - 0.5 * r * r * r;
    }
    case VariogramModel::Family::Exponential:
      return 1.0 - std::exp(-3.0 * h / range);
    case VariogramModel::Family::NuggetOnly:
      return 0.0;
  }
  return 0.0;
}

struct BinData {
  std::vector<double> h, g, w;
};

struct Candidate {
  double nugget = 0.0, sill = 0.0, obj = std::numeric_limits<double>::infinity();
};

double objective(const BinData& d, VariogramModel::Family fam, double nugget,
                 double sill, double range) {
  double s = 0.0;
  for (size_t b = 0; b < d.h.size(); ++b) {
    double r = d.g[b] - nugget - sill * base_shape(fam, d.h[b], range);
    s += d.w[b] * r * r;
  }
  return s;
}

// best (nugget, sill) >= 0 for a fixed range, closed form with boundary cases
Candidate solve_amplitudes(const BinData& d, VariogramModel::Family fam,
                           double range) {
  double sw = 0.0, swf = 0.0, swf2 = 0.0, swg = 0.0, swfg = 0.0;
  for (size_t b = 0; b < d.h.size(); ++b) {
    double f = base_shape(fam, d.h[b], range);
    sw += d.w[b];
    swf += d.w[b] * f;
    swf2 += d.w[b] * f * f;
    swg += d.w[b] * d.g[b];
    swfg += d.w[b] * f * d.g[b];
  }
  Candidate best;
  auto consider = [&](double n, double s) {
    if (!(n >= 0.0) || !(s >= 0.0)) return;
    double obj = objective(d, fam, n, s, range);
    if (obj < best.obj) best = Candidate{n, s, obj};
  };
  double det = sw * swf2 - swf * swf;
  if (std::abs(det) > 1e-300)
    consider((swg * swf2 - swfg * swf) / det, (sw * swfg - swf * swg) / det);
  if (swf2 > 0.0) consider(0.0, std::max(0.0, swfg / swf2));
  if (sw > 0.0) consider(std::max(0.0, swg / sw), 0.0);
  consider(0.0, 0.0);
  return best;
}

}  // namespace

double model_eval(const VariogramModel& model, double h) {
  if (h < 0.0) fail(ErrorCode::PreconditionViolation, "negative lag");
  if (h == 0.0) return 0.0;
  return model.nugget + model.partial_sill * base_shape(model.family, h, model.range);
}

VariogramModel fit_variogram(const EmpiricalVariogram& emp,
                             VariogramModel::Family family) {
  BinData d;
  for (size_t b = 0; b < emp.lag_centers.size(); ++b)
    if (emp.bin_counts[b] > 0 && emp.pair_weights[b] > 0.0) {
      d.h.push_back(emp.lag_centers[b]);
      d.g.push_back(emp.semivariances[b]);
      d.w.push_back(emp.pair_weights[b]);
    }
  if (d.h.empty()) fail(ErrorCode::FitFailed, "no populated lag bins");

  if (family == VariogramModel::Family::NuggetOnly) {
    double sw = 0.0, swg = 0.0;
    for (size_t b = 0; b < d.h.size(); ++b) {
      sw += d.w[b];
      swg += d.w[b] * d.g[b];
    }
    return VariogramModel{family, swg / sw, 0.0, 1.0};
  }

  if (static_cast<int>(d.h.size()) < 3)
    fail(ErrorCode::FitFailed, "need at least 3 populated bins");

  double r_lo = d.h.front(), r_hi = 2.0 * d.h.back();
  const int kGrid = 64;
  double best_obj = std::numeric_limits<double>::infinity();
  int best_i = 0;
  auto range_at = [&](double t) { return r_lo * std::pow(r_hi / r_lo, t); };
  for (int i = 0; i < kGrid; ++i) {
    double range = range_at(i / double(kGrid - 1));
    double obj = solve_amplitudes(d, family, range).obj;
    if (obj < best_obj) {
      best_obj = obj;
      best_i = i;
    }
  }
  // golden-section refinement on log-range between the grid neighbours
  double lo = std::max(0, best_i - 1) / double(kGrid - 1);
  double hi = std::min(kGrid - 1, best_i + 1) / double(kGrid - 1);
  const double kGold = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - kGold * (b - a), x2 = a + kGold * (b - a);
  double f1 = solve_amplitudes(d, family, range_at(x1)).obj;
  double f2 = solve_amplitudes(d, family, range_at(x2)).obj;
  for (int it = 0; it < 60; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGold * (b - a);
      f1 = solve_amplitudes(d, family, range_at(x1)).obj;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGold * (b - a);
      f2 = solve_amplitudes(d, family, range_at(x2)).obj;
    }
  }
  double range = range_at(0.5 * (a + b));
  Candidate c = solve_amplitudes(d, family, range);
  if (!std::isfinite(c.obj)) fail(ErrorCode::FitFailed, "non-finite fit objective");
  return VariogramModel{family, c.nugget, c.sill, range};
}

VariogramModel nugget_only_from(const EmpiricalVariogram& emp) {
  return fit_variogram(emp, VariogramModel::Family::NuggetOnly);
}

}  // namespace rddmk
