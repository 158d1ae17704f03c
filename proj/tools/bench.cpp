// Times the OpenMP kernels against the serial reference path (workers = 1)
// on production-sized inputs and verifies the outputs are bitwise identical.
//
//   bench [workers] [--quick]
//
// workers defaults to the OpenMP thread limit; --quick shrinks the inputs so
// the comparison finishes in a couple of seconds.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rddmk/simgen.hpp"

using namespace rddmk;

namespace {

template <class F>
double timed(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-34s %8.3f s %10.3f s %7.2fx   %s\n", name, serial, parallel,
              serial / parallel, identical ? "identical" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  int workers = 0;
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0)
      quick = true;
    else
      workers = std::atoi(argv[i]);
  }
  if (workers <= 0) {
#ifdef _OPENMP
    workers = omp_get_max_threads();
#else
    workers = 1;
#endif
  }
  std::printf("comparing serial reference against %d workers\n\n", workers);
  std::printf("%-34s %10s %12s %9s\n", "kernel", "serial", "parallel",
              "speedup");

  CDomainSpec domain;
  if (quick) {
    domain.n_phi = 40;
    domain.n_r = 6;
  }
  std::vector<GridPoint> grid = c_domain_grid(domain);
  std::vector<Site> sites;
  for (size_t i = 0; i < grid.size(); ++i)
    sites.push_back({"g" + std::to_string(i), grid[i].x, grid[i].y});
  SiteSet set = SiteSet::validated(std::move(sites));
  Polygon boundary = c_domain_boundary(domain);

  // all-pairs shortest paths over the triangulated domain
  DomainGraph serial_graph, parallel_graph;
  double t_apsp1 = timed([&] {
    serial_graph = build_delaunay(set, boundary, boundary.ring(), 1);
  });
  double t_apspN = timed([&] {
    parallel_graph = build_delaunay(set, boundary, boundary.ring(), workers);
  });
  bool apsp_same = true;
  int n = serial_graph.site_count();
  for (int i = 0; i < n && apsp_same; ++i)
    for (int j = 0; j < n; ++j)
      if (serial_graph.site_dist(i, j) != parallel_graph.site_dist(i, j)) {
        apsp_same = false;
        break;
      }
  report("shortest paths over the mesh", t_apsp1, t_apspN, apsp_same);

  // the bagging engine on a subsampled correlation field
  GrfSampler grf(grid, GrfSpec{});
  std::vector<CholFactor> field =
      generate_corr_field(grid, grf, domain, detail::mix_seed(2024, 1));

  int g = static_cast<int>(grid.size());
  std::mt19937_64 rng(detail::mix_seed(2024, 2));
  std::vector<int> sub =
      detail::draw_grid_subsample(g, quick ? 60 : 100, rng);
  int m = static_cast<int>(sub.size());
  std::vector<Site> subsites;
  std::vector<double> dists(static_cast<size_t>(m) * m);
  for (int a = 0; a < m; ++a) {
    subsites.push_back(serial_graph.sites()[sub[static_cast<size_t>(a)]]);
    for (int c = 0; c < m; ++c)
      dists[static_cast<size_t>(a) * m + c] =
          serial_graph.site_dist(sub[static_cast<size_t>(a)],
                                 sub[static_cast<size_t>(c)]);
  }
  Dataset<CholManifold> data;
  data.graph = graph_from_matrix(SiteSet::validated(std::move(subsites)),
                                 std::move(dists));
  for (int i : sub) data.observations.push_back(field[static_cast<size_t>(i)]);

  Targets targets;
  std::vector<std::vector<double>> tdist(static_cast<size_t>(g));
  for (int t = 0; t < g; ++t) {
    targets.ids.push_back(serial_graph.sites()[t].id);
    targets.xy.push_back({serial_graph.sites()[t].x, serial_graph.sites()[t].y});
    tdist[static_cast<size_t>(t)].resize(static_cast<size_t>(m));
    for (int a = 0; a < m; ++a)
      tdist[static_cast<size_t>(t)][static_cast<size_t>(a)] =
          serial_graph.site_dist(t, sub[static_cast<size_t>(a)]);
  }

  RunConfig run;
  run.k = 4;
  run.b = quick ? 40 : 100;
  run.kernel = {KernelConfig::Kind::Gaussian, 1.5};
  run.master_seed = detail::mix_seed(2024, 3);

  PredictionResult<CholManifold> serial_res, parallel_res;
  run.workers = 1;
  double t_eng1 = timed(
      [&] { serial_res = run_rdd_mk<CholManifold>(run, data, targets, tdist); });
  run.workers = workers;
  double t_engN = timed([&] {
    parallel_res = run_rdd_mk<CholManifold>(run, data, targets, tdist);
  });
  bool eng_same = true;
  for (int t = 0; t < g && eng_same; ++t) {
    for (int a = 0; a < 2 && eng_same; ++a)
      for (int b = a; b < 2; ++b)
        if (serial_res.predictions[static_cast<size_t>(t)](a, b) !=
            parallel_res.predictions[static_cast<size_t>(t)](a, b)) {
          eng_same = false;
          break;
        }
    if (serial_res.bootstrap_variance[static_cast<size_t>(t)] !=
        parallel_res.bootstrap_variance[static_cast<size_t>(t)])
      eng_same = false;
  }
  report("bagging engine", t_eng1, t_engN, eng_same);

  return (apsp_same && eng_same) ? 0 : 1;
}
