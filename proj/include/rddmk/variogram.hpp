#pragma once

// Geographically weighted empirical trace-semivariograms and weighted
// least-squares fits of valid parametric models.

#include <span>
#include <vector>

#include "rddmk/error.hpp"
#include "rddmk/linalg.hpp"
#include "rddmk/spatial.hpp"

namespace rddmk {

struct KernelConfig {
  enum class Kind { Gaussian, TileIndicator };
  Kind kind = Kind::Gaussian;
  double bandwidth = 1.0;  // gaussian only, must be > 0
};

// gaussian: exp(-d^2 / (2 eps^2)), ignores tile membership
// tile_indicator: 1 inside the tile, 0 outside, ignores d
double kernel_weight(const KernelConfig& cfg, double d, bool same_tile);

struct BinSpec {
  int n_bins = 15;
  double pair_weight_cutoff = 1e-6;  // pairs below this weight product are skipped
};

struct EmpiricalVariogram {
  std::vector<double> lag_centers;    // all bins, strictly increasing midpoints
  std::vector<double> semivariances;  // NaN for empty bins
  std::vector<double> pair_weights;   // summed weight products per bin
  std::vector<int> bin_counts;
  double h_max = 0.0;

  int populated() const;
};

// Halved weighted average of squared tangent-space distances per lag bin.
// flat_logs are log vectors in flat coordinates (Euclidean inner product);
// pair weight = kernel(center, s_i) * kernel(center, s_j); bins are n_bins
// equal-width intervals on (0, h_max], h_max = half the largest pairwise
// distance among sites with positive kernel weight.
EmpiricalVariogram empirical_variogram(std::span<const Vec> flat_logs,
                                       const DomainGraph& graph, int center,
                                       std::span<const char> tile_membership,
                                       const KernelConfig& kernel,
                                       const BinSpec& bins = {});

struct VariogramModel {
  enum class Family { Spherical, Exponential, NuggetOnly };
  Family family = Family::NuggetOnly;
  double nugget = 0.0;
  double partial_sill = 0.0;
  double range = 1.0;  // exponential: practical range (95% of sill)
};

// gamma(0) = 0; discontinuity of size nugget at the origin.
double model_eval(const VariogramModel& model, double h);

// Weighted least squares over populated bins, bin weight = summed pair
// weights. Range on a 64-point log grid spanning [min lag, 2 max lag] with
// closed-form nonnegative (nugget, sill) per candidate, then golden-section
// refinement. Throws FitFailed when fewer than 3 populated bins (spherical
// and exponential) or the data carry no weight.
VariogramModel fit_variogram(const EmpiricalVariogram& emp,
                             VariogramModel::Family family);

// Fallback after FitFailed: pure nugget at the weighted mean semivariance.
VariogramModel nugget_only_from(const EmpiricalVariogram& emp);

}  // namespace rddmk
