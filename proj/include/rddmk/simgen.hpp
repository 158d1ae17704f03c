#pragma once

// Synthetic data on the C-shaped test domain: the (phi, r) to (x, y) map, a
// dense-factorization Gaussian random field sampler, the locally stationary
// SPD(2) / correlation field generators, and the Monte Carlo study harness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "rddmk/engine.hpp"

namespace rddmk {

struct CDomainSpec {
  double phi_max = 8.88;
  double r_min = -0.5;
  double r_max = 0.5;
  double bend_radius = 0.6;
  // 113 x 14 = 1582 points; closest integer grid to the target cardinality
  // with the arm-to-width aspect of the domain
  int n_phi = 113;
  int n_r = 14;
};

struct GridPoint {
  double phi = 0.0;
  double r = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// Arc-length centerline: upper arm right-to-left, semicircular bend on the
// left, lower arm left-to-right; r offsets along the left-hand unit normal.
Point2 c_domain_map(const CDomainSpec& spec, double phi, double r);

std::vector<GridPoint> c_domain_grid(const CDomainSpec& spec);

// Closed ring just outside the strip (margin past both r extremes and both
// arm ends). Trimming triangle centroids against it removes mesh edges that
// would jump across the mouth of the C.
Polygon c_domain_boundary(const CDomainSpec& spec, double margin = 0.02,
                          int samples_per_side = 240);

struct GrfSpec {
  double range = 10.0;
  double sill = 14.0625;  // 3.75^2
  double jitter = 1e-10;
};

// Zero-mean stationary Gaussian field with a spherical covariance on the
// (phi, r) plane. The dense lower-triangular factor is built once (with
// escalating diagonal jitter) and reused for every draw.
class GrfSampler {
 public:
  GrfSampler(std::span<const GridPoint> grid, const GrfSpec& spec);

  int size() const { return n_; }
  std::vector<double> sample(std::mt19937_64& rng) const;

 private:
  int n_ = 0;
  std::vector<double> factor_;  // row-major lower triangular
};

// Pointwise model ingredients, exposed for direct verification.
double alpha_scale(const CDomainSpec& spec, double phi);
SymMatrix drift_a(const CDomainSpec& spec, double phi, double r);
SPDMatrix tangent_psi(const CDomainSpec& spec, double phi, double r);

// chi = exp_Psi(A + delta) with delta = alpha^2 * [3 independent GRF draws,
// off-diagonal shared by symmetry].
std::vector<SPDMatrix> generate_spd_field(std::span<const GridPoint> grid,
                                          const GrfSampler& grf,
                                          const CDomainSpec& spec,
                                          std::uint64_t seed);

// SPD field normalized to correlation matrices, returned as Cholesky factors.
std::vector<CholFactor> generate_corr_field(std::span<const GridPoint> grid,
                                            const GrfSampler& grf,
                                            const CDomainSpec& spec,
                                            std::uint64_t seed);

// ----------------------------------------------------------- study harness

struct McConfig {
  int n_replicates = 30;
  int n_sites = 100;
  std::vector<int> k_values{1, 2, 4, 6, 8, 10};
  ManifoldKind manifold = ManifoldKind::Spd;
  bool new_field_per_replicate = false;  // fresh realization per replicate
  bool squared_errors = false;           // score squared distances
  bool exclude_observed = false;         // score only unobserved grid points
  RunConfig run;  // k is overwritten by the sweep; master_seed per replicate
  std::uint64_t seed = 0;
  CDomainSpec domain;
  GrfSpec grf;
};

struct McCell {
  int replicate = 0;
  int k = 0;
  double mspe = 0.0;
  double rho_mspe = 0.0;
  std::vector<double> spe;      // per grid target
  std::vector<double> rho_spe;  // 2x2 correlation fields only
};

struct McSummary {
  int k = 0;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;  // across replicates, n-1 denominator
  double rho_mean = 0.0;
  double rho_median = 0.0;
  double rho_sd = 0.0;
};

struct McStudyResult {
  std::vector<GridPoint> grid;
  std::vector<std::vector<int>> subsamples;  // grid indices per replicate
  std::vector<McCell> cells;                 // replicate-major, k-minor
  std::vector<McSummary> summary;            // one row per k
  bool has_rho = false;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double sd_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / (static_cast<double>(v.size()) - 1.0));
}

// Seed streams shared by the study harness and the simulate command, so the
// files simulate writes are exactly the inputs the study consumes.
inline constexpr std::uint64_t kFieldStream = 0xF00D0000ULL;
inline constexpr std::uint64_t kSubsampleStream = 0x5AB50000ULL;
inline constexpr std::uint64_t kReplicateRunStream = 0xB0070000ULL;

// Uniform m-subset of {0, ..., g-1} by partial Fisher-Yates, sorted.
inline std::vector<int> draw_grid_subsample(int g, int m, std::mt19937_64& rng) {
  std::vector<int> pool(g);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < m; ++i) {
    int j = i + std::uniform_int_distribution<int>(0, g - 1 - i)(rng);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detail

// Full sweep over (replicate, K) given a prepared metric graph over all grid
// points and a per-replicate truth field. Sites are grid subsamples; the
// engine sees the exact grid metric through distance-matrix datasets.
template <class M>
McStudyResult run_mc_study(
    const McConfig& cfg, std::vector<GridPoint> grid, const DomainGraph& graph,
    const std::function<std::vector<typename M::Point>(int)>& field_for) {
  int g = static_cast<int>(grid.size());
  if (graph.site_count() != g)
    fail(ErrorCode::PreconditionViolation, "graph does not cover the grid");
  if (cfg.n_sites < 2 || cfg.n_sites > g)
    fail(ErrorCode::PreconditionViolation, "site count outside [2, grid size]");

  McStudyResult out;
  out.grid = std::move(grid);
  out.has_rho = std::is_same_v<M, CholManifold>;

  for (int rep = 0; rep < cfg.n_replicates; ++rep) {
    std::vector<typename M::Point> truth = field_for(rep);
    if (static_cast<int>(truth.size()) != g)
      fail(ErrorCode::PreconditionViolation, "field does not cover the grid");

    // uniform subsample of grid points, sorted for stable site ordering
    std::mt19937_64 srng(
        detail::mix_seed(cfg.seed, detail::kSubsampleStream + rep));
    std::vector<int> sub = detail::draw_grid_subsample(g, cfg.n_sites, srng);
    out.subsamples.push_back(sub);

    int m = cfg.n_sites;
    std::vector<Site> subsites;
    for (int i : sub) subsites.push_back(graph.sites()[i]);
    std::vector<double> dists(static_cast<size_t>(m) * m);
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c)
        dists[static_cast<size_t>(a) * m + c] = graph.site_dist(sub[a], sub[c]);
    Dataset<M> data;
    data.graph = graph_from_matrix(SiteSet::validated(subsites), std::move(dists));
    for (int i : sub) data.observations.push_back(truth[i]);

    Targets targets;
    std::vector<std::vector<double>> tdist(g);
    for (int t = 0; t < g; ++t) {
      targets.ids.push_back(graph.sites()[t].id);
      targets.xy.push_back({graph.sites()[t].x, graph.sites()[t].y});
      tdist[t].resize(m);
      for (int a = 0; a < m; ++a) tdist[t][a] = graph.site_dist(t, sub[a]);
    }

    std::vector<char> observed(g, 0);
    for (int i : sub) observed[i] = 1;

    for (int k : cfg.k_values) {
      RunConfig run = cfg.run;
      run.k = k;
      run.master_seed =
          detail::mix_seed(cfg.seed, detail::kReplicateRunStream + rep);
      PredictionResult<M> res = run_rdd_mk<M>(run, data, targets, tdist);
      ErrorSummary err = error_metrics<M>(res.predictions, truth);

      McCell cell;
      cell.replicate = rep;
      cell.k = k;
      cell.spe = err.spe;
      if (cfg.squared_errors)
        for (double& v : cell.spe) v *= v;
      cell.rho_spe = err.rho_spe;  // already squared differences
      double sum = 0.0, rho_sum = 0.0;
      int used = 0;
      for (int t = 0; t < g; ++t) {
        if (cfg.exclude_observed && observed[t]) continue;
        sum += cell.spe[t];
        if (out.has_rho) rho_sum += cell.rho_spe[t];
        ++used;
      }
      if (used == 0)
        fail(ErrorCode::PreconditionViolation, "no targets left to score");
      cell.mspe = sum / used;
      cell.rho_mspe = out.has_rho ? rho_sum / used : 0.0;
      out.cells.push_back(std::move(cell));
    }
  }

  for (int k : cfg.k_values) {
    std::vector<double> mspe, rho;
    for (const McCell& c : out.cells)
      if (c.k == k) {
        mspe.push_back(c.mspe);
        rho.push_back(c.rho_mspe);
      }
    McSummary s;
    s.k = k;
    s.mean = std::accumulate(mspe.begin(), mspe.end(), 0.0) / mspe.size();
    s.median = detail::median_of(mspe);
    s.sd = detail::sd_of(mspe, s.mean);
    if (out.has_rho) {
      s.rho_mean = std::accumulate(rho.begin(), rho.end(), 0.0) / rho.size();
      s.rho_median = detail::median_of(rho);
      s.rho_sd = detail::sd_of(rho, s.rho_mean);
    }
    out.summary.push_back(s);
  }
  return out;
}

// Builds the grid, metric graph and generative fields, then runs the sweep.
McStudyResult monte_carlo_study(const McConfig& cfg);

}  // namespace rddmk
