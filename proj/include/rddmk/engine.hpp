#pragma once

// The bagging engine: B bootstrap iterations of random partition, per-tile
// tangent-space kriging, then intrinsic-mean aggregation with a bootstrap
// variance. Iterations degrade locally on numerical failure instead of
// aborting; the ensemble absorbs weak members.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "rddmk/kriging.hpp"
#include "rddmk/manifold.hpp"
#include "rddmk/parallel.hpp"
#include "rddmk/spatial.hpp"
#include "rddmk/variogram.hpp"

namespace rddmk {

enum class ManifoldKind { Spd, Sphere, Chol };

enum class MeanStrategy { Intrinsic, ExtrinsicFallback };

struct RunConfig {
  int k = 2;  // tiles per iteration
  int b = 100;
  KernelConfig kernel;
  VariogramModel::Family family = VariogramModel::Family::Spherical;
  MeanStrategy mean_strategy = MeanStrategy::ExtrinsicFallback;
  std::uint64_t master_seed = 0;
  int min_tile_size = 3;
  BinSpec bins;
  double mean_tol = 1e-9;
  int mean_max_iter = 200;
  bool keep_iterations = false;
  int workers = 1;
};

template <class M>
struct Dataset {
  DomainGraph graph;  // sites aligned with observations
  std::vector<typename M::Point> observations;
};

struct Targets {
  std::vector<std::string> ids;
  std::vector<Point2> xy;
  int size() const { return static_cast<int>(xy.size()); }
};

template <class M>
struct PredictionResult {
  std::vector<typename M::Point> predictions;
  std::vector<double> bootstrap_variance;
  // per-iteration predictions, [iteration][target], when keep_iterations
  std::vector<std::vector<typename M::Point>> iterations;
};

struct CvResult {
  std::vector<double> per_site;  // squared prediction error
  double mean = 0.0;
  double median = 0.0;
};

struct ErrorSummary {
  std::vector<double> spe;  // manifold distance per target
  double mspe = 0.0;        // mean of spe
  // squared correlation-index differences, 2x2 correlation fields only
  std::vector<double> rho_spe;
  double rho_mspe = 0.0;
  bool has_rho = false;
};

namespace detail {

// counter-based stream derivation so iteration b is scheduling-independent
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <class M>
typename M::Point mean_with_fallback(std::span<const typename M::Point> pts,
                                     const RunConfig& cfg) {
  try {
    return intrinsic_mean<M>(pts, {}, cfg.mean_tol, cfg.mean_max_iter);
  } catch (const Error&) {
  }
  try {
    return M::extrinsic_mean(pts);
  } catch (const Error&) {
  }
  return pts[0];
}

template <class M>
typename M::Point aggregate_point(std::span<const typename M::Point> pts,
                                  const RunConfig& cfg) {
  try {
    return intrinsic_mean<M>(pts, {}, cfg.mean_tol, cfg.mean_max_iter);
  } catch (const Error& e) {
    if (cfg.mean_strategy == MeanStrategy::ExtrinsicFallback) {
      try {
        return M::extrinsic_mean(pts);
      } catch (const Error&) {
      }
    }
    fail(ErrorCode::AggregationFailure,
         "could not average the iteration predictions", e.what());
  }
}

}  // namespace detail

// Distances from every target to every site under the domain metric.
inline std::vector<std::vector<double>> compute_target_dists(
    const DomainGraph& graph, const Targets& targets, int workers = 1) {
  std::vector<std::vector<double>> out(targets.size());
  parallel_for(targets.size(), workers, [&](int t) {
    out[t] = graph.distances_to_sites(targets.xy[t].x, targets.xy[t].y);
  });
  return out;
}

// One bootstrap iteration: partition, per-tile model, per-target prediction.
// target_dists[t][i] = domain distance from target t to site i.
template <class M>
std::vector<typename M::Point> run_iteration(
    const RunConfig& cfg, const Dataset<M>& data,
    const std::vector<std::vector<double>>& target_dists,
    std::uint64_t iteration_seed) {
  const DomainGraph& graph = data.graph;
  int n = graph.site_count();
  if (cfg.k < 1 || cfg.k > n)
    fail(ErrorCode::PreconditionViolation, "tile count outside [1, n]");
  if (static_cast<int>(data.observations.size()) != n)
    fail(ErrorCode::PreconditionViolation, "observations do not match sites");
  int nt = static_cast<int>(target_dists.size());

  std::mt19937_64 rng(iteration_seed);
  Partition part;
  if (cfg.k == 1) {
    // the draw is vacuous: one tile is the whole site set for any nucleus
    part.k = 1;
    part.nuclei = {0};
    part.assignment.assign(n, 0);
    part.tiles.resize(1);
    part.tiles[0].resize(n);
    std::iota(part.tiles[0].begin(), part.tiles[0].end(), 0);
  } else {
    part = draw_partition(graph, cfg.k, rng, cfg.min_tile_size);
  }
  // K=1 is the stationary baseline: classical unweighted variogram
  KernelConfig kernel =
      cfg.k == 1 ? KernelConfig{KernelConfig::Kind::TileIndicator, 0.0} : cfg.kernel;

  std::vector<std::vector<int>> tile_targets(part.k);
  for (int t = 0; t < nt; ++t)
    tile_targets[assign_target_from_dists(part, target_dists[t])].push_back(t);

  std::vector<typename M::Point> out(nt);
  for (int k = 0; k < part.k; ++k) {
    const std::vector<int>& tile = part.tiles[k];
    int m = static_cast<int>(tile.size());
    std::vector<typename M::Point> tobs;
    tobs.reserve(m);
    for (int i : tile) tobs.push_back(data.observations[i]);

    typename M::Point psi = detail::mean_with_fallback<M>(tobs, cfg);

    // chart and logs; if any log is undefined, re-anchor at the first
    // observation, and failing that freeze the tile at a constant
    std::optional<typename M::Chart> chart;
    std::vector<Vec> flat(n);
    bool logs_ok = false;
    for (const typename M::Point* base : {&psi, &tobs[0]}) {
      try {
        chart.emplace(*base);
        for (int i = 0; i < n; ++i)
          flat[i] = chart->flat(chart->log(data.observations[i]));
        logs_ok = true;
        break;
      } catch (const Error&) {
      }
    }
    if (!logs_ok) {
      for (int t : tile_targets[k]) out[t] = tobs[0];
      continue;
    }

    TileModel<M> tm;
    tm.tile_index = k;
    tm.tangent_point = chart->base();
    tm.site_indices = tile;
    for (int i : tile) tm.logs.push_back(chart->log(data.observations[i]));

    std::vector<char> memb(n, 0);
    for (int i : tile) memb[i] = 1;
    std::optional<EmpiricalVariogram> emp;
    try {
      emp = empirical_variogram(flat, graph, part.nuclei[k], memb, kernel, cfg.bins);
    } catch (const Error&) {
      if (kernel.kind != KernelConfig::Kind::TileIndicator) {
        try {
          emp = empirical_variogram(flat, graph, part.nuclei[k], memb,
                                    {KernelConfig::Kind::TileIndicator, 0.0},
                                    cfg.bins);
        } catch (const Error&) {
        }
      }
    }
    if (emp) {
      try {
        tm.variogram = fit_variogram(*emp, cfg.family);
      } catch (const Error&) {
        tm.variogram = nugget_only_from(*emp);
      }
    } else {
      tm.variogram = VariogramModel{VariogramModel::Family::NuggetOnly, 0.0, 0.0, 1.0};
    }

    std::vector<double> dists(static_cast<size_t>(m) * m);
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c)
        dists[static_cast<size_t>(a) * m + c] = graph.site_dist(tile[a], tile[c]);
    std::optional<KrigingSystem> sys;
    bool uniform = false;
    try {
      sys.emplace(tm.variogram, dists, m);
    } catch (const Error&) {
      bool refit = false;
      if (emp) {
        try {
          tm.variogram = nugget_only_from(*emp);
          sys.emplace(tm.variogram, dists, m);
          refit = true;
        } catch (const Error&) {
        }
      }
      uniform = !refit;
    }

    std::vector<double> td(m);
    for (int t : tile_targets[k]) {
      for (int a = 0; a < m; ++a) td[a] = target_dists[t][tile[a]];
      KrigingWeights w = uniform ? uniform_weights(m) : sys->weights(td);
      try {
        out[t] = chart->exp(krige_tangent(tm, w));
      } catch (const Error&) {
        out[t] = chart->base();  // exp overflow from wild extrapolation weights
      }
    }
  }
  return out;
}

template <class M>
std::vector<typename M::Point> run_iteration(const RunConfig& cfg,
                                             const Dataset<M>& data,
                                             const Targets& targets,
                                             std::uint64_t iteration_seed) {
  return run_iteration<M>(cfg, data, compute_target_dists(data.graph, targets),
                          iteration_seed);
}

template <class M>
PredictionResult<M> run_rdd_mk(const RunConfig& cfg, const Dataset<M>& data,
                               const Targets& targets,
                               const std::vector<std::vector<double>>& target_dists) {
  if (cfg.b < 1) fail(ErrorCode::PreconditionViolation, "need at least one iteration");
  if (static_cast<int>(target_dists.size()) != targets.size())
    fail(ErrorCode::PreconditionViolation, "target distance rows do not match targets");
  int nt = targets.size();

  std::vector<std::vector<typename M::Point>> per_iter(cfg.b);
  parallel_for(cfg.b, cfg.workers, [&](int b) {
    per_iter[b] = run_iteration<M>(cfg, data, target_dists,
                                   detail::mix_seed(cfg.master_seed, b));
  });

  std::vector<std::optional<typename M::Point>> agg(nt);
  std::vector<double> var(nt, 0.0);
  parallel_for(nt, cfg.workers, [&](int t) {
    std::vector<typename M::Point> column;
    column.reserve(cfg.b);
    for (int b = 0; b < cfg.b; ++b) column.push_back(per_iter[b][t]);
    typename M::Point a = detail::aggregate_point<M>(column, cfg);
    double s = 0.0;
    for (const auto& p : column) {
      double d = M::dist(p, a);
      s += d * d;
    }
    var[t] = s / cfg.b;
    agg[t] = std::move(a);
  });

  PredictionResult<M> out;
  out.predictions.reserve(nt);
  for (int t = 0; t < nt; ++t) out.predictions.push_back(std::move(*agg[t]));
  out.bootstrap_variance = std::move(var);
  if (cfg.keep_iterations) out.iterations = std::move(per_iter);
  return out;
}

template <class M>
PredictionResult<M> run_rdd_mk(const RunConfig& cfg, const Dataset<M>& data,
                               const Targets& targets) {
  return run_rdd_mk<M>(cfg, data, targets,
                       compute_target_dists(data.graph, targets, cfg.workers));
}

// Leave-one-out on the full-data metric: the held-out site keeps its vertex
// in the graph, only its observation is removed. Every fold runs the whole
// bagging pipeline with the same master seed.
template <class M>
CvResult loo_cross_validate(const RunConfig& cfg, const Dataset<M>& data) {
  int n = data.graph.site_count();
  if (n < cfg.k + 1)
    fail(ErrorCode::PreconditionViolation,
         "leave-one-out needs at least one more site than tiles");
  CvResult out;
  out.per_site.resize(n);
  for (int hold = 0; hold < n; ++hold) {
    std::vector<Site> subsites;
    std::vector<int> keep;
    for (int j = 0; j < n; ++j)
      if (j != hold) {
        keep.push_back(j);
        subsites.push_back(data.graph.sites()[j]);
      }
    int m = n - 1;
    std::vector<double> sub(static_cast<size_t>(m) * m);
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c)
        sub[static_cast<size_t>(a) * m + c] = data.graph.site_dist(keep[a], keep[c]);
    Dataset<M> fold;
    fold.graph = graph_from_matrix(SiteSet::validated(std::move(subsites)),
                                   std::move(sub));
    for (int j : keep) fold.observations.push_back(data.observations[j]);

    Targets tgt;
    tgt.ids = {data.graph.sites()[hold].id};
    tgt.xy = {{data.graph.sites()[hold].x, data.graph.sites()[hold].y}};
    std::vector<std::vector<double>> tdist(1);
    tdist[0].resize(m);
    for (int a = 0; a < m; ++a) tdist[0][a] = data.graph.site_dist(hold, keep[a]);

    PredictionResult<M> res = run_rdd_mk<M>(cfg, fold, tgt, tdist);
    double d = M::dist(res.predictions[0], data.observations[hold]);
    out.per_site[hold] = d * d;
  }
  out.mean = std::accumulate(out.per_site.begin(), out.per_site.end(), 0.0) / n;
  std::vector<double> sorted = out.per_site;
  std::sort(sorted.begin(), sorted.end());
  out.median = n % 2 ? sorted[n / 2]
                     : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return out;
}

template <class M>
ErrorSummary error_metrics(std::span<const typename M::Point> predictions,
                           std::span<const typename M::Point> truth) {
  if (predictions.size() != truth.size())
    fail(ErrorCode::InvalidArgument, "prediction/truth length mismatch");
  if (predictions.empty())
    fail(ErrorCode::InvalidArgument, "no targets to score");
  ErrorSummary out;
  out.spe.reserve(predictions.size());
  for (size_t i = 0; i < predictions.size(); ++i)
    out.spe.push_back(M::dist(truth[i], predictions[i]));
  out.mspe = std::accumulate(out.spe.begin(), out.spe.end(), 0.0) /
             static_cast<double>(out.spe.size());
  if constexpr (std::is_same_v<M, CholManifold>) {
    if (truth[0].dim() == 2) {
      out.has_rho = true;
      out.rho_spe.reserve(predictions.size());
      for (size_t i = 0; i < predictions.size(); ++i) {
        double diff = truth[i](0, 1) - predictions[i](0, 1);
        out.rho_spe.push_back(diff * diff);
      }
      out.rho_mspe = std::accumulate(out.rho_spe.begin(), out.rho_spe.end(), 0.0) /
                     static_cast<double>(out.rho_spe.size());
    }
  }
  return out;
}

}  // namespace rddmk
