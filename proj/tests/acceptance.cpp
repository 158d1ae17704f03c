// Acceptance gate for the shipping build. Every check prints one PASS or
// FAIL line with the measured values next to the bounds pinned in this file,
// and the process exits nonzero when any check fails. The two simulation
// studies at the end dominate the runtime (a few minutes each at one
// worker). Optional arguments restrict the run to checks whose names contain
// any of them, e.g. `acceptance kriging variogram`.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rddmk/io.hpp"
#include "rddmk/simgen.hpp"
#include "test_util.hpp"

using namespace rddmk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string num(double v, const char* spec = "%.4g") {
  char b[48];
  std::snprintf(b, sizeof b, spec, v);
  return b;
}

// Counts sub-checks so a FAIL line can name the first offender.
struct Tally {
  long checks = 0;
  long failed = 0;
  std::string first;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      ++failed;
      if (first.empty()) first = what;
    }
  }
  std::string verdict(const std::string& pass_msg) const {
    if (failed == 0) return pass_msg;
    std::ostringstream os;
    os << failed << " of " << checks << " sub-checks failed, first: " << first;
    return os.str();
  }
};

int study_workers() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(std::min(hc, 4u));
}

// ------------------------------------------------------------- geometry

Outcome geometry_check() {
  auto t0 = std::chrono::steady_clock::now();
  Tally tly;
  auto g = testutil::rng(801);
  std::normal_distribution<double> normal;

  for (int c = 0; c < 1000; ++c) {
    int p = 2 + c % 2;
    SPDMatrix base = testutil::random_spd(g, p);
    SPDMatrix x = testutil::random_spd(g, p);
    SPDMatrix y = testutil::random_spd(g, p);
    SpdManifold::Chart chart(base);
    SymMatrix t = chart.log(x);
    tly.expect(testutil::max_abs_diff(chart.exp(t).sym(), x.sym()) < 1e-9,
               "spd exp/log round trip");
    double d = spd_dist(base, x);
    tly.expect(std::abs(chart.norm(t) - d) <= 1e-9 * (1.0 + d),
               "spd log norm vs distance");
    tly.expect(std::abs(spd_dist(x, y) - spd_dist(y, x)) <= 1e-9, "spd symmetry");
    tly.expect(spd_dist(x, x) <= 1e-9, "spd self distance");
    tly.expect(d + spd_dist(x, y) + 1e-9 >= spd_dist(base, y),
               "spd triangle inequality");

    Matrix m(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        m(i, j) = testutil::uniform(g, -1.0, 1.0) + (i == j ? 2.0 : 0.0);
    auto congr = [&](const SPDMatrix& s) {
      Matrix w = m.transposed() * s.sym().to_matrix() * m;
      return SPDMatrix::validated(SymMatrix::from_matrix(w, 1e-9));
    };
    tly.expect(std::abs(spd_dist(congr(x), congr(y)) - spd_dist(x, y)) <=
                   1e-8 * (1.0 + spd_dist(x, y)),
               "spd congruence invariance");
  }

  auto unit = [&](int q) {
    Vec v(q);
    double n = 0.0;
    do {
      for (int i = 0; i < q; ++i) v[i] = normal(g);
      n = v.norm();
    } while (n < 1e-6);
    return SpherePoint::trusted(std::move(v));
  };
  for (int c = 0; c < 1000; ++c) {
    int q = 3 + c % 3;
    SpherePoint a = unit(q);
    SpherePoint b = unit(q);
    while (sphere_dist(a, b) > std::numbers::pi - 0.05) b = unit(q);
    SpherePoint e = unit(q);
    SphereManifold::Chart chart(a);
    SphereTangent t = chart.log(b);
    double d = sphere_dist(a, b);
    tly.expect(std::abs(chart.norm(t) - d) <= 1e-9 * (1.0 + d),
               "sphere log norm vs distance");
    SpherePoint back = chart.exp(t);
    double gap = 0.0;
    for (int i = 0; i < q; ++i) gap = std::max(gap, std::abs(back[i] - b[i]));
    tly.expect(gap < 1e-8, "sphere exp/log round trip");
    double dot = 0.0;
    for (int i = 0; i < q; ++i) dot += t.coords[i] * a[i];
    tly.expect(std::abs(dot) < 1e-10, "sphere log tangency");
    tly.expect(std::abs(sphere_dist(a, b) - sphere_dist(b, a)) <= 1e-12,
               "sphere symmetry");
    tly.expect(sphere_dist(a, a) <= 1e-12, "sphere self distance");
    tly.expect(d + sphere_dist(b, e) + 1e-9 >= sphere_dist(a, e),
               "sphere triangle inequality");
  }

  auto corr3 = [&]() {
    SPDMatrix a = testutil::random_spd(g, 3);
    SymMatrix r(3);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        r.set(i, j, a.sym()(i, j) / std::sqrt(a.sym()(i, i) * a.sym()(j, j)));
    return r;
  };
  for (int c = 0; c < 1000; ++c) {
    SymMatrix r = corr3();
    CholFactor h = corr_to_chol(r);
    tly.expect(testutil::max_abs_diff(chol_to_corr(h).sym(), r) < 1e-10,
               "correlation to factor round trip");
    tly.expect(chol_dist(corr_to_chol(chol_to_corr(h).sym()), h) < 1e-10,
               "factor to correlation round trip");
    CholFactor base = corr_to_chol(corr3());
    CholFactor e = corr_to_chol(corr3());
    CholManifold::Chart chart(base);
    CholTangent t = chart.log(h);
    tly.expect(testutil::max_abs_diff(chart.exp(t).matrix(), h.matrix()) < 1e-9,
               "chol exp/log round trip");
    double d = chol_dist(base, h);
    tly.expect(std::abs(chart.norm(t) - d) <= 1e-9 * (1.0 + d),
               "chol log norm vs distance");
    tly.expect(std::abs(chol_dist(h, e) - chol_dist(e, h)) <= 1e-12, "chol symmetry");
    tly.expect(chol_dist(h, h) <= 1e-12, "chol self distance");
    tly.expect(d + chol_dist(h, e) + 1e-9 >= chol_dist(base, e),
               "chol triangle inequality");
  }

  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  tly.expect(secs < 30.0, "runtime bound of 30 s exceeded");
  std::ostringstream os;
  os << tly.checks << " sub-checks over 3000 randomized cases (1000 per space) in "
     << num(secs, "%.2f") << " s";
  return {tly.failed == 0, tly.verdict(os.str())};
}

// ----------------------------------------------------------- mean check

// One converged mean: the summed logs at the mean must vanish, and the
// sum-of-squared-distances objective must not improve under 100 random
// perturbations of geodesic radius 1e-3.
template <class M, class GenPoint>
void mean_case(Tally& tly, const char* label, GenPoint gen, double& worst_resid,
               double& min_margin, std::mt19937_64& g) {
  int m = 4 + static_cast<int>(testutil::uniform(g, 0.0, 6.0));
  m = std::min(m, 9);
  std::vector<typename M::Point> pts;
  pts.reserve(m);
  for (int i = 0; i < m; ++i) pts.push_back(gen());

  typename M::Point mean = pts[0];
  try {
    mean = intrinsic_mean<M>(pts, {}, 1e-9, 200);
  } catch (const Error& e) {
    tly.expect(false, std::string(label) + " mean did not converge: " + e.what());
    return;
  }
  typename M::Chart chart(mean);
  typename M::Tangent sum = chart.zero();
  for (const auto& p : pts) M::tangent_add_scaled(sum, 1.0, chart.log(p));
  double resid = chart.norm(sum);
  worst_resid = std::max(worst_resid, resid);
  tly.expect(resid <= 1e-9, std::string(label) + " summed logs above 1e-9");

  auto objective = [&](const typename M::Point& q) {
    double f = 0.0;
    for (const auto& p : pts) {
      double d = M::dist(q, p);
      f += d * d;
    }
    return f;
  };
  double fm = objective(mean);
  for (int t = 0; t < 100; ++t) {
    typename M::Tangent dir = chart.zero();
    double n = 0.0;
    do {
      dir = chart.log(gen());
      n = chart.norm(dir);
    } while (n < 1e-9);
    typename M::Tangent step = chart.zero();
    M::tangent_add_scaled(step, 1e-3 / n, dir);
    double fc = objective(chart.exp(step));
    min_margin = std::min(min_margin, fc - fm);
    tly.expect(fm <= fc,
               std::string(label) + " objective improved at perturbation radius 1e-3");
  }
}

Outcome mean_check() {
  Tally tly;
  auto g = testutil::rng(802);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  double margin = std::numeric_limits<double>::infinity();

  for (int s = 0; s < 30; ++s) {
    int p = 2 + s % 2;
    SPDMatrix base = testutil::random_spd(g, p);
    SpdManifold::Chart bchart(base);
    mean_case<SpdManifold>(
        tly, "spd", [&] { return bchart.exp(testutil::random_sym(g, p, 0.3)); },
        worst, margin, g);
  }
  for (int s = 0; s < 30; ++s) {
    int q = 3 + s % 2;
    Vec c(q);
    double n = 0.0;
    do {
      for (int i = 0; i < q; ++i) c[i] = normal(g);
      n = c.norm();
    } while (n < 1e-6);
    SpherePoint base = SpherePoint::trusted(std::move(c));
    // perturb-and-renormalize keeps the cluster well inside one hemisphere
    mean_case<SphereManifold>(
        tly, "sphere",
        [&] {
          Vec v(q);
          double vn = 0.0;
          do {
            for (int i = 0; i < q; ++i) v[i] = normal(g);
            vn = v.norm();
          } while (vn < 1e-6);
          Vec w = base.coords();
          w.add_scaled(testutil::uniform(g, 0.05, 0.45) / vn, v);
          return SpherePoint::trusted(std::move(w));
        },
        worst, margin, g);
  }
  for (int s = 0; s < 30; ++s) {
    mean_case<CholManifold>(
        tly, "chol",
        [&] {
          SymMatrix r(3);
          for (int i = 0; i < 3; ++i) r.set(i, i, 1.0);
          r.set(0, 1, testutil::uniform(g, -0.25, 0.25));
          r.set(0, 2, testutil::uniform(g, -0.25, 0.25));
          r.set(1, 2, testutil::uniform(g, -0.25, 0.25));
          return corr_to_chol(r);
        },
        worst, margin, g);
  }

  std::ostringstream os;
  os << "90 converged means: worst summed-log norm " << num(worst, "%.2e")
     << " (bound 1e-9), smallest objective margin over 9000 perturbations "
     << num(margin, "%.2e");
  return {tly.failed == 0, tly.verdict(os.str())};
}

// -------------------------------------------------------------- kriging

Outcome kriging_check() {
  Tally tly;
  auto g = testutil::rng(803);
  double worst_exact = 0.0;
  double worst_resid = 0.0;
  double worst_gap = -std::numeric_limits<double>::infinity();

  for (int inst = 0; inst < 100; ++inst) {
    int n = 4 + inst % 9;
    std::vector<double> sx(n), sy(n);
    for (int i = 0; i < n; ++i) {
      for (;;) {
        double x = testutil::uniform(g, 0.0, 3.0);
        double y = testutil::uniform(g, 0.0, 3.0);
        bool far = true;
        for (int j = 0; j < i; ++j)
          far = far && std::hypot(x - sx[j], y - sy[j]) > 0.05;
        if (far) {
          sx[i] = x;
          sy[i] = y;
          break;
        }
      }
    }
    std::vector<double> dist(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dist[static_cast<size_t>(i) * n + j] = std::hypot(sx[i] - sx[j], sy[i] - sy[j]);
    auto family = inst % 2 ? VariogramModel::Family::Exponential
                           : VariogramModel::Family::Spherical;

    // zero nugget: prediction at a data site must return that observation
    VariogramModel m0{family, 0.0, testutil::uniform(g, 0.4, 2.0),
                      testutil::uniform(g, 0.5, 3.0)};
    std::vector<SPDMatrix> obs;
    obs.reserve(n);
    for (int i = 0; i < n; ++i) obs.push_back(testutil::random_spd(g, 2));
    SPDMatrix psi = intrinsic_mean<SpdManifold>(obs, {}, 1e-9, 200);
    SpdManifold::Chart chart(psi);
    TileModel<SpdManifold> tm;
    tm.tangent_point = psi;
    for (int i = 0; i < n; ++i) {
      tm.site_indices.push_back(i);
      tm.logs.push_back(chart.log(obs[i]));
    }
    tm.variogram = m0;
    KrigingSystem sys0(m0, dist, n);
    std::vector<double> td(n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < n; ++a) td[a] = dist[static_cast<size_t>(a) * n + i];
      double d = spd_dist(krige_predict(tm, sys0, td), obs[i]);
      worst_exact = std::max(worst_exact, d);
      tly.expect(d < 1e-8, "interpolation not exact at a data site");
    }

    // saddle residual and weight optimality at an off-site target
    VariogramModel mv{family, testutil::uniform(g, 0.01, 0.4),
                      testutil::uniform(g, 0.4, 2.0), testutil::uniform(g, 0.5, 3.0)};
    KrigingSystem sys(mv, dist, n);
    double tx = testutil::uniform(g, -0.3, 3.3);
    double ty = testutil::uniform(g, -0.3, 3.3);
    for (int a = 0; a < n; ++a) td[a] = std::hypot(sx[a] - tx, sy[a] - ty);
    KrigingWeights w = sys.weights(td);
    std::vector<double> gamma0(n);
    for (int a = 0; a < n; ++a) gamma0[a] = model_eval(mv, td[a]);
    double sum_w = 0.0;
    for (double v : w.weights) sum_w += v;
    double resid = std::abs(sum_w - 1.0);
    for (int i = 0; i < n; ++i) {
      double row = w.lagrange_multiplier - gamma0[i];
      for (int j = 0; j < n; ++j)
        row += model_eval(mv, dist[static_cast<size_t>(i) * n + j]) * w.weights[j];
      resid = std::max(resid, std::abs(row));
    }
    worst_resid = std::max(worst_resid, resid);
    tly.expect(resid < 1e-9, "saddle residual above 1e-9");

    auto variance_of = [&](const std::vector<double>& v) {
      double lin = 0.0, quad = 0.0;
      for (int i = 0; i < n; ++i) {
        lin += v[i] * gamma0[i];
        for (int j = 0; j < n; ++j)
          quad += v[i] * v[j] * model_eval(mv, dist[static_cast<size_t>(i) * n + j]);
      }
      return 2.0 * lin - quad;
    };
    double vk = variance_of(w.weights);
    for (int r = 0; r < 50; ++r) {
      std::vector<double> rv(n);
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        rv[i] = testutil::uniform(g, -1.0, 1.0);
        s += rv[i];
      }
      for (int i = 0; i < n; ++i) rv[i] += (1.0 - s) / n;
      double vr = variance_of(rv);
      worst_gap = std::max(worst_gap, vk - vr);
      tly.expect(vk <= vr + 1e-10,
                 "a random unit-sum weight vector beat the kriging weights");
    }
  }

  std::ostringstream os;
  os << "100 instances: worst on-site distance " << num(worst_exact, "%.2e")
     << " (bound 1e-8), worst saddle residual " << num(worst_resid, "%.2e")
     << " (bound 1e-9), closest random competitor " << num(-worst_gap, "%.2e")
     << " above the kriging variance";
  return {tly.failed == 0, tly.verdict(os.str())};
}

// ------------------------------------------------------------ variogram

// Independent of the library path: plain double loop over ordered pairs,
// reversed iteration order so even the summation order differs.
EmpiricalVariogram double_loop(const std::vector<Vec>& logs, const DomainGraph& g,
                               int center, const std::vector<char>& memb,
                               const KernelConfig& kc, const BinSpec& bins) {
  int n = g.site_count();
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = kernel_weight(kc, g.site_dist(center, i), memb[i] != 0);
  double far = 0.0;
  for (int i = n - 1; i >= 0; --i)
    for (int j = n - 1; j >= 0; --j)
      if (i != j && w[i] > 0.0 && w[j] > 0.0) far = std::max(far, g.site_dist(i, j));
  double h_max = far / 2.0;

  std::vector<double> edges(bins.n_bins + 1);
  for (int b = 0; b <= bins.n_bins; ++b) edges[b] = h_max * b / bins.n_bins;

  EmpiricalVariogram out;
  out.h_max = h_max;
  out.lag_centers.resize(bins.n_bins);
  out.semivariances.assign(bins.n_bins, std::numeric_limits<double>::quiet_NaN());
  out.pair_weights.assign(bins.n_bins, 0.0);
  out.bin_counts.assign(bins.n_bins, 0);
  std::vector<double> acc(bins.n_bins, 0.0);
  for (int b = 0; b < bins.n_bins; ++b)
    out.lag_centers[b] = 0.5 * (edges[b] + edges[b + 1]);

  for (int i = n - 1; i >= 0; --i)
    for (int j = n - 1; j > i; --j) {
      double ww = w[i] * w[j];
      if (ww < bins.pair_weight_cutoff) continue;
      double h = g.site_dist(i, j);
      for (int b = 0; b < bins.n_bins; ++b)
        if (h > edges[b] && h <= edges[b + 1]) {
          double sq = 0.0;
          for (int c = 0; c < logs[i].size(); ++c)
            sq += (logs[i][c] - logs[j][c]) * (logs[i][c] - logs[j][c]);
          acc[b] += ww * sq;
          out.pair_weights[b] += ww;
          out.bin_counts[b] += 1;
          break;
        }
    }
  for (int b = 0; b < bins.n_bins; ++b)
    if (out.bin_counts[b] > 0)
      out.semivariances[b] = acc[b] / (2.0 * out.pair_weights[b]);
  return out;
}

Outcome variogram_check() {
  Tally tly;
  auto g = testutil::rng(804);
  for (int c = 0; c < 100; ++c) {
    int n = 3 + c % 8;
    std::vector<Site> sites;
    for (int i = 0; i < n; ++i) {
      for (;;) {
        double x = testutil::uniform(g, 0.0, 4.0);
        double y = testutil::uniform(g, 0.0, 4.0);
        bool far = true;
        for (const Site& s : sites) far = far && std::hypot(x - s.x, y - s.y) > 1e-2;
        if (far) {
          sites.push_back({"v" + std::to_string(i), x, y});
          break;
        }
      }
    }
    DomainGraph graph = euclidean_graph(SiteSet::validated(sites));
    int dim = 1 + c % 4;
    std::vector<Vec> logs(n, Vec(dim));
    for (auto& v : logs)
      for (int d = 0; d < dim; ++d) v[d] = testutil::uniform(g, -2.0, 2.0);
    KernelConfig kc =
        c % 3 == 0
            ? KernelConfig{KernelConfig::Kind::TileIndicator, 0.0}
            : KernelConfig{KernelConfig::Kind::Gaussian, testutil::uniform(g, 0.3, 2.5)};
    std::vector<char> memb(n, 0);
    for (int i = 0; i < n; ++i) memb[i] = testutil::uniform(g, 0.0, 1.0) < 0.7 ? 1 : 0;
    int center = c % n;
    memb[center] = 1;
    BinSpec bins;
    bins.n_bins = 1 + c % 8;

    EmpiricalVariogram got;
    bool got_threw = false;
    try {
      got = empirical_variogram(logs, graph, center, memb, kc, bins);
    } catch (const Error&) {
      got_threw = true;
    }
    EmpiricalVariogram want = double_loop(logs, graph, center, memb, kc, bins);
    bool want_empty = true;
    for (int b : want.bin_counts) want_empty = want_empty && b == 0;
    tly.expect(got_threw == want_empty, "no-pairs cases disagree");
    if (got_threw || want_empty) continue;

    auto close = [](double a, double b) {
      if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
      return std::abs(a - b) <= 1e-12;
    };
    tly.expect(close(got.h_max, want.h_max), "h_max");
    tly.expect(got.lag_centers.size() == want.lag_centers.size(), "bin layout");
    for (size_t b = 0; b < want.lag_centers.size(); ++b) {
      tly.expect(close(got.lag_centers[b], want.lag_centers[b]), "lag center");
      tly.expect(close(got.semivariances[b], want.semivariances[b]), "semivariance");
      tly.expect(close(got.pair_weights[b], want.pair_weights[b]), "pair weight");
      tly.expect(got.bin_counts[b] == want.bin_counts[b], "pair count");
    }
  }
  std::ostringstream os;
  os << tly.checks
     << " sub-checks: 100 random configurations match the double loop to 1e-12";
  return {tly.failed == 0, tly.verdict(os.str())};
}

// -------------------------------------------------------- k=1 degeneracy

Outcome single_tile_check() {
  auto g = testutil::rng(805);
  std::vector<Site> sites;
  std::vector<SPDMatrix> obs;
  for (int i = 0; i < 16; ++i) {
    double x = (i % 4) * 1.0 + testutil::uniform(g, -0.2, 0.2);
    double y = (i / 4) * 1.0 + testutil::uniform(g, -0.2, 0.2);
    sites.push_back({"s" + std::to_string(i), x, y});
    SymMatrix s(2);
    s.set(0, 0, 1.8 + 0.2 * std::sin(x + 0.3 * y));
    s.set(1, 1, 1.4 + 0.15 * std::cos(0.7 * x - y));
    s.set(0, 1, 0.3 + 0.1 * std::sin(x * y));
    obs.push_back(SPDMatrix::validated(s));
  }
  Dataset<SpdManifold> data{euclidean_graph(SiteSet::validated(sites)), obs};
  Targets targets;
  for (int t = 0; t < 9; ++t) {
    targets.ids.push_back("t" + std::to_string(t));
    targets.xy.push_back({0.4 + (t % 3) * 1.1, 0.35 + (t / 3) * 1.05});
  }
  RunConfig cfg;
  cfg.k = 1;
  cfg.b = 32;
  cfg.kernel = {KernelConfig::Kind::Gaussian, 1.0};
  cfg.family = VariogramModel::Family::Spherical;
  cfg.master_seed = 77;
  PredictionResult<SpdManifold> res = run_rdd_mk(cfg, data, targets);

  Tally tly;
  for (double v : res.bootstrap_variance)
    tly.expect(v == 0.0, "ensemble variance not exactly zero");

  // direct stationary composition: one tile holding every site, classical
  // unweighted variogram, one ordinary kriging system
  int n = data.graph.site_count();
  SPDMatrix psi =
      intrinsic_mean<SpdManifold>(data.observations, {}, cfg.mean_tol, cfg.mean_max_iter);
  SpdManifold::Chart chart(psi);
  std::vector<Vec> flat;
  for (const auto& o : data.observations) flat.push_back(chart.flat(chart.log(o)));
  std::vector<char> memb(n, 1);
  EmpiricalVariogram emp = empirical_variogram(
      flat, data.graph, 0, memb, {KernelConfig::Kind::TileIndicator, 0.0}, cfg.bins);
  VariogramModel vg = fit_variogram(emp, cfg.family);
  TileModel<SpdManifold> tm;
  tm.tangent_point = psi;
  for (int i = 0; i < n; ++i) {
    tm.site_indices.push_back(i);
    tm.logs.push_back(chart.log(data.observations[i]));
  }
  tm.variogram = vg;
  std::vector<double> dm(static_cast<size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c)
      dm[static_cast<size_t>(a) * n + c] = data.graph.site_dist(a, c);
  KrigingSystem sys(vg, dm, n);
  auto tdists = compute_target_dists(data.graph, targets);
  double worst = 0.0;
  for (int t = 0; t < targets.size(); ++t)
    worst = std::max(worst, spd_dist(res.predictions[t], krige_predict(tm, sys, tdists[t])));
  tly.expect(worst <= 1e-12, "bagged k=1 differs from the direct stationary pipeline");

  std::ostringstream os;
  os << "ensemble variance identically 0 at " << targets.size()
     << " targets; largest distance to the direct stationary prediction "
     << num(worst, "%.2e");
  return {tly.failed == 0, tly.verdict(os.str())};
}

// -------------------------------------------------------- cli determinism

Outcome cli_workers_check() {
  fs::path dir = fs::temp_directory_path() / "rddmk_acceptance";
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir / "w1");
  fs::create_directories(dir / "w4");

  auto g = testutil::rng(806);
  std::vector<Site> sites;
  std::vector<std::string> ids;
  std::vector<SPDMatrix> obs;
  for (int i = 0; i < 40; ++i) {
    double x = (i % 8) * 0.7 + testutil::uniform(g, -0.2, 0.2);
    double y = (i / 8) * 0.7 + testutil::uniform(g, -0.2, 0.2);
    sites.push_back({"s" + std::to_string(i), x, y});
    ids.push_back(sites.back().id);
    SymMatrix s(2);
    s.set(0, 0, 1.6 + 0.15 * std::sin(x));
    s.set(1, 1, 1.3 + 0.1 * std::cos(y));
    s.set(0, 1, 0.25 + 0.05 * std::sin(x + y));
    obs.push_back(SPDMatrix::validated(s));
  }
  io::write_sites((dir / "sites.csv").string(), SiteSet::validated(sites));
  io::write_points((dir / "observations.csv").string(), ids, {}, obs);
  {
    std::ofstream cfg(dir / "krige.json");
    cfg << "{\n"
        << "  \"manifold\": \"spd\",\n"
        << "  \"run\": {\"k\": 4, \"b\": 48, \"kernel\": \"gaussian\", \"bandwidth\": 1.2,\n"
        << "          \"model\": \"spherical\", \"seed\": 17, \"min_tile_size\": 3},\n"
        << "  \"data\": {\"sites\": \"" << (dir / "sites.csv").string()
        << "\", \"observations\": \"" << (dir / "observations.csv").string() << "\"}\n"
        << "}\n";
  }
  auto run = [&](int workers, const std::string& out) {
    std::string cmd = std::string(RDDMK_CLI) + " krige --config " +
                      (dir / "krige.json").string() + " --workers " +
                      std::to_string(workers) + " --out-dir " + (dir / out).string() +
                      " 2>" + (dir / "stderr.txt").string();
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };

  Tally tly;
  tly.expect(run(1, "w1") == 0, "krige --workers 1 exited nonzero");
  tly.expect(run(4, "w4") == 0, "krige --workers 4 exited nonzero");
  std::string p1 = slurp(dir / "w1" / "predictions.csv");
  std::string p4 = slurp(dir / "w4" / "predictions.csv");
  std::string v1 = slurp(dir / "w1" / "variance.csv");
  std::string v4 = slurp(dir / "w4" / "variance.csv");
  tly.expect(!p1.empty() && p1 == p4, "prediction files differ between worker counts");
  tly.expect(!v1.empty() && v1 == v4, "variance files differ between worker counts");

  return {tly.failed == 0,
          tly.verdict("krige over 40 sites (k=4, b=48): predictions.csv and "
                      "variance.csv byte-identical for --workers 1 and --workers 4")};
}

// ------------------------------------------------------------ mc studies

McConfig study_base() {
  McConfig cfg;
  cfg.n_replicates = 30;
  cfg.n_sites = 100;
  cfg.k_values = {1, 2, 4, 6, 8, 10};
  cfg.run.b = 100;
  cfg.run.kernel = {KernelConfig::Kind::Gaussian, 1.5};
  cfg.run.family = VariogramModel::Family::Spherical;
  cfg.run.workers = study_workers();
  cfg.seed = 2026;
  return cfg;
}

// One shared field, 30 subsample replicates of 100 sites, plain distances
// averaged over the whole grid. The reference means and the +-0.05 band are
// the calibration contract for the field generator.
Outcome spd_study_check() {
  McConfig cfg = study_base();
  cfg.manifold = ManifoldKind::Spd;
  McStudyResult res = monte_carlo_study(cfg);

  double m1 = 0.0, m2 = 0.0, m4 = 0.0;
  std::ostringstream means;
  for (const McSummary& s : res.summary) {
    if (s.k == 1) m1 = s.mean;
    if (s.k == 2) m2 = s.mean;
    if (s.k == 4) m4 = s.mean;
    means << " K=" << s.k << ":" << num(s.mean, "%.4f");
  }
  const double want1 = 0.3127, want4 = 0.2387, band = 0.05;
  bool in1 = std::abs(m1 - want1) <= band;
  bool in4 = std::abs(m4 - want4) <= band;
  bool ordered = m4 < m2 && m2 < m1;
  std::ostringstream os;
  os << "mean error K=1 " << num(m1, "%.4f") << (in1 ? " within " : " OUTSIDE ")
     << want1 << "+-" << band << ", K=4 " << num(m4, "%.4f")
     << (in4 ? " within " : " OUTSIDE ") << want4 << "+-" << band
     << (ordered ? "; K4 < K2 < K1 holds" : "; ORDERING VIOLATED") << "; means:"
     << means.str();
  return {in1 && in4 && ordered, os.str()};
}

// Fresh field per replicate, squared distances at unobserved grid points;
// the sweep must bottom out at K=4.
Outcome chol_study_check() {
  McConfig cfg = study_base();
  cfg.manifold = ManifoldKind::Chol;
  cfg.new_field_per_replicate = true;
  cfg.squared_errors = true;
  cfg.exclude_observed = true;
  McStudyResult res = monte_carlo_study(cfg);

  int best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  std::ostringstream means;
  for (const McSummary& s : res.summary) {
    means << " K=" << s.k << ":" << num(s.mean, "%.5f");
    if (s.mean < best) {
      best = s.mean;
      best_k = s.k;
    }
  }
  std::ostringstream os;
  os << "minimum mean squared error at K=" << best_k << " (required K=4); means:"
     << means.str();
  return {best_k == 4, os.str()};
}

struct Check {
  const char* name;
  Outcome (*run)();
};

constexpr Check kChecks[] = {
    {"geometry round trips and metric axioms", geometry_check},
    {"intrinsic mean first-order optimality", mean_check},
    {"kriging exactness and optimality", kriging_check},
    {"variogram double-loop agreement", variogram_check},
    {"single-tile degeneracy", single_tile_check},
    {"cli worker-count determinism", cli_workers_check},
    {"spd simulation study accuracy", spd_study_check},
    {"correlation study tile selection", chol_study_check},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> filters;
  for (int i = 1; i < argc; ++i) filters.emplace_back(argv[i]);
  auto selected = [&](const std::string& name) {
    if (filters.empty()) return true;
    for (const auto& f : filters)
      if (name.find(f) != std::string::npos) return true;
    return false;
  };

  int ran = 0, failed = 0;
  for (const Check& c : kChecks) {
    if (!selected(c.name)) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("unhandled error: ") + e.what()};
    }
    if (!o.ok) ++failed;
    std::printf("%s  %-42s %s\n", o.ok ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d checks passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
