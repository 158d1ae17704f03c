// rddmk <simulate | krige | cv | variogram | mc-study> --config <file>
//       [--seed-override N] [--workers N] [--out-dir PATH]
//
// All diagnostics go to stderr as one JSON object {code, message, context};
// exit status 0 means every output file was written.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rddmk/config.hpp"
#include "rddmk/io.hpp"

namespace {

using namespace rddmk;

std::string joined(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string numbered(const std::string& stem, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03d", i);
  return stem + buf + ".csv";
}

template <class F>
void dispatch(ManifoldKind kind, F f) {
  switch (kind) {
    case ManifoldKind::Spd:
      f.template operator()<SpdManifold>();
      break;
    case ManifoldKind::Sphere:
      f.template operator()<SphereManifold>();
      break;
    case ManifoldKind::Chol:
      f.template operator()<CholManifold>();
      break;
  }
}

template <class M>
std::vector<typename M::Point> read_observations(const std::string& path,
                                                 const SiteSet& sites) {
  if constexpr (std::is_same_v<M, SpdManifold>)
    return io::read_spd_observations(path, sites);
  else if constexpr (std::is_same_v<M, CholManifold>)
    return io::read_chol_observations(path, sites);
  else
    return io::read_sphere_observations(path, sites);
}

DomainGraph load_graph(const DataConfig& d, const SiteSet& sites,
                       int workers) {
  switch (d.metric) {
    case DataConfig::Metric::Matrix: {
      std::vector<double> dist =
          io::read_distance_matrix(d.distances, sites.size());
      return graph_from_matrix(sites, std::move(dist));
    }
    case DataConfig::Metric::Euclidean:
      return euclidean_graph(sites);
    case DataConfig::Metric::Triangulation:
    default: {
      if (d.boundary.empty()) return build_delaunay(sites, {}, {}, workers);
      // boundary samples join the triangulation so no surviving triangle can
      // bridge a concave notch of the domain
      Polygon boundary = io::read_boundary(d.boundary);
      return build_delaunay(sites, boundary, boundary.ring(), workers);
    }
  }
}

Targets targets_from_sites(const SiteSet& s) {
  Targets t;
  for (int i = 0; i < s.size(); ++i) {
    t.ids.push_back(s[i].id);
    t.xy.push_back({s[i].x, s[i].y});
  }
  return t;
}

void check_k(const RunConfig& run, int n) {
  if (run.k > n)
    fail(ErrorCode::ValidationError,
         "run.k: tile count must satisfy 1 <= k <= number of sites (n = " +
             std::to_string(n) + ")");
}

template <class M>
Dataset<M> load_dataset(const CliConfig& cfg, const SiteSet& sites) {
  Dataset<M> data;
  data.graph = load_graph(cfg.data, sites, cfg.run.workers);
  data.observations = read_observations<M>(cfg.data.observations, sites);
  check_k(cfg.run, sites.size());
  return data;
}

template <class M>
void cmd_krige(const CliConfig& cfg, const std::string& out_dir) {
  SiteSet sites = io::read_sites(cfg.data.sites);
  Dataset<M> data = load_dataset<M>(cfg, sites);
  Targets targets = cfg.data.targets.empty()
                        ? targets_from_sites(sites)
                        : targets_from_sites(io::read_sites(cfg.data.targets));
  std::vector<std::vector<double>> tdist =
      compute_target_dists(data.graph, targets, cfg.run.workers);
  PredictionResult<M> res = run_rdd_mk<M>(cfg.run, data, targets, tdist);
  io::write_points(joined(out_dir, "predictions.csv"), targets.ids, targets.xy,
                   res.predictions);
  io::write_scalar(joined(out_dir, "variance.csv"), targets.ids, targets.xy,
                   "varsigma2", res.bootstrap_variance);
}

template <class M>
void cmd_cv(const CliConfig& cfg, const std::string& out_dir) {
  SiteSet sites = io::read_sites(cfg.data.sites);
  Dataset<M> data = load_dataset<M>(cfg, sites);
  CvResult res = loo_cross_validate<M>(cfg.run, data);
  io::write_cv_json(joined(out_dir, "cv.json"), sites, res);
}

// One partition, drawn exactly like bootstrap iteration 0 of a krige run
// with the same configuration, dumped tile by tile.
template <class M>
void cmd_variogram(const CliConfig& cfg, const std::string& out_dir) {
  SiteSet sites = io::read_sites(cfg.data.sites);
  Dataset<M> data = load_dataset<M>(cfg, sites);
  const RunConfig& run = cfg.run;
  int n = sites.size();

  std::mt19937_64 rng(detail::mix_seed(run.master_seed, 0));
  Partition part;
  if (run.k == 1) {
    part.k = 1;
    part.nuclei = {0};
    part.assignment.assign(n, 0);
    part.tiles.resize(1);
    part.tiles[0].resize(n);
    std::iota(part.tiles[0].begin(), part.tiles[0].end(), 0);
  } else {
    part = draw_partition(data.graph, run.k, rng, run.min_tile_size);
  }
  KernelConfig kernel = run.k == 1
                            ? KernelConfig{KernelConfig::Kind::TileIndicator, 0.0}
                            : run.kernel;

  std::vector<io::VariogramRow> rows;
  for (int k = 0; k < part.k; ++k) {
    const std::vector<int>& tile = part.tiles[k];
    std::vector<typename M::Point> tobs;
    for (int i : tile) tobs.push_back(data.observations[i]);
    typename M::Point psi = detail::mean_with_fallback<M>(tobs, run);

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
    if (!logs_ok) continue;

    std::vector<char> memb(n, 0);
    for (int i : tile) memb[i] = 1;
    std::optional<EmpiricalVariogram> emp;
    try {
      emp = empirical_variogram(flat, data.graph, part.nuclei[k], memb, kernel,
                                run.bins);
    } catch (const Error&) {
      if (kernel.kind != KernelConfig::Kind::TileIndicator) {
        try {
          emp = empirical_variogram(flat, data.graph, part.nuclei[k], memb,
                                    {KernelConfig::Kind::TileIndicator, 0.0},
                                    run.bins);
        } catch (const Error&) {
        }
      }
    }
    if (!emp) continue;
    VariogramModel model;
    try {
      model = fit_variogram(*emp, run.family);
    } catch (const Error&) {
      model = nugget_only_from(*emp);
    }
    for (size_t b = 0; b < emp->lag_centers.size(); ++b)
      rows.push_back({0, k, emp->lag_centers[b], emp->semivariances[b],
                      model_eval(model, emp->lag_centers[b]),
                      emp->pair_weights[b]});
  }
  io::write_variogram_rows(joined(out_dir, "variogram.csv"), rows);
}

template <class M>
void write_replicates(const SimulateConfig& sc,
                      const std::vector<GridPoint>& grid,
                      const std::vector<std::string>& gids,
                      const GrfSampler& grf, const std::string& out_dir) {
  auto gen = [&](std::uint64_t seed) {
    if constexpr (std::is_same_v<M, SpdManifold>)
      return generate_spd_field(grid, grf, sc.domain, seed);
    else
      return generate_corr_field(grid, grf, sc.domain, seed);
  };
  std::vector<typename M::Point> shared;
  if (!sc.new_field_per_replicate) {
    shared = gen(detail::mix_seed(sc.seed, detail::kFieldStream));
    io::write_points(joined(out_dir, "field.csv"), gids, {}, shared);
  }
  int g = static_cast<int>(grid.size());
  for (int rep = 0; rep < sc.n_replicates; ++rep) {
    std::vector<typename M::Point> own;
    if (sc.new_field_per_replicate) {
      own = gen(detail::mix_seed(sc.seed, detail::kFieldStream + rep));
      io::write_points(joined(out_dir, numbered("field", rep)), gids, {}, own);
    }
    const std::vector<typename M::Point>& field =
        sc.new_field_per_replicate ? own : shared;

    std::mt19937_64 srng(
        detail::mix_seed(sc.seed, detail::kSubsampleStream + rep));
    std::vector<int> sub = detail::draw_grid_subsample(g, sc.n_sites, srng);
    io::write_subsample(joined(out_dir, numbered("subsample", rep)), sub, gids);

    std::vector<Site> subsites;
    std::vector<std::string> sids;
    std::vector<typename M::Point> sobs;
    for (int i : sub) {
      subsites.push_back({gids[static_cast<size_t>(i)], grid[static_cast<size_t>(i)].x,
                          grid[static_cast<size_t>(i)].y});
      sids.push_back(gids[static_cast<size_t>(i)]);
      sobs.push_back(field[static_cast<size_t>(i)]);
    }
    io::write_sites(joined(out_dir, numbered("sites", rep)),
                    SiteSet::validated(std::move(subsites)));
    io::write_points(joined(out_dir, numbered("observations", rep)), sids, {},
                     sobs);
  }
}

std::vector<std::string> grid_ids(size_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (size_t i = 0; i < n; ++i) ids.push_back("g" + std::to_string(i));
  return ids;
}

void cmd_simulate(const CliConfig& cfg, const std::string& out_dir) {
  const SimulateConfig& sc = cfg.sim;
  std::vector<GridPoint> grid = c_domain_grid(sc.domain);
  std::vector<std::string> gids = grid_ids(grid.size());
  io::write_grid(joined(out_dir, "grid.csv"), grid, gids);
  io::write_boundary(joined(out_dir, "boundary.csv"),
                     c_domain_boundary(sc.domain));
  GrfSampler grf(grid, sc.grf);
  if (sc.field == ManifoldKind::Spd)
    write_replicates<SpdManifold>(sc, grid, gids, grf, out_dir);
  else
    write_replicates<CholManifold>(sc, grid, gids, grf, out_dir);
}

void cmd_mc_study(const CliConfig& cfg, const std::string& out_dir) {
  McStudyResult res = monte_carlo_study(cfg.study.mc);
  io::write_grid(joined(out_dir, "grid.csv"), res.grid,
                 grid_ids(res.grid.size()));
  io::write_study_summary(joined(out_dir, "summary.csv"), res);
  io::write_study_cells(joined(out_dir, "cells.csv"), res);
  if (cfg.study.dump_spe)
    io::write_study_spe(joined(out_dir, "spe.csv"), res);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bagged tangent-space kriging for manifold-valued spatial data"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed_override = 0;
  int workers = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "generate synthetic fields on the C-shaped domain"},
      {"krige", "predict at target locations with bootstrap variances"},
      {"cv", "leave-one-out cross-validation"},
      {"variogram", "dump per-tile variograms for one partition"},
      {"mc-study", "replicated subsample study over a sweep of tile counts"},
  };
  for (auto [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "JSON configuration file")
        ->required();
    sub->add_option("--seed-override", seed_override,
                    "replace the configured seed");
    sub->add_option("--workers", workers, "parallel workers inside the engine")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "output directory, created if needed");
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  try {
    Command cmd = parse_command(sub->get_name());
    CliConfig cfg = parse_config(config_path, cmd);
    if (sub->count("--seed-override") > 0) {
      switch (cmd) {
        case Command::Simulate:
          cfg.sim.seed = seed_override;
          break;
        case Command::McStudy:
          cfg.study.mc.seed = seed_override;
          break;
        default:
          cfg.run.master_seed = seed_override;
      }
    }
    if (workers > 0) {
      cfg.run.workers = workers;
      cfg.study.mc.run.workers = workers;
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      fail(ErrorCode::IoError,
           "cannot create output directory '" + out_dir + "'", ec.message());

    switch (cmd) {
      case Command::Simulate:
        cmd_simulate(cfg, out_dir);
        break;
      case Command::Krige:
        dispatch(cfg.manifold, [&]<class M>() { cmd_krige<M>(cfg, out_dir); });
        break;
      case Command::Cv:
        dispatch(cfg.manifold, [&]<class M>() { cmd_cv<M>(cfg, out_dir); });
        break;
      case Command::Variogram:
        dispatch(cfg.manifold,
                 [&]<class M>() { cmd_variogram<M>(cfg, out_dir); });
        break;
      case Command::McStudy:
        cmd_mc_study(cfg, out_dir);
        break;
    }
    return 0;
  } catch (const Error& e) {
    nlohmann::json j{{"code", error_code_name(e.code())},
                     {"message", e.what()},
                     {"context", e.context()}};
    std::cerr << j.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json j{
        {"code", "InternalError"}, {"message", e.what()}, {"context", ""}};
    std::cerr << j.dump() << '\n';
    return 1;
  }
}
