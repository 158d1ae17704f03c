#include "rddmk/simgen.hpp"

#include <cmath>
#include <string>

#include "rddmk/manifold.hpp"

namespace rddmk {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Frame {
  Point2 center;
  Point2 normal;  // left-hand unit normal of the centerline direction
};

// Upper arm runs right-to-left at y = bend_radius, the bend is the left
// semicircle of radius bend_radius about the origin, the lower arm runs
// left-to-right at y = -bend_radius. phi is arc length; values outside
// [0, phi_max] extrapolate along the end tangents.
Frame centerline(const CDomainSpec& spec, double phi) {
  double arm = 3.5;
  double bend = kPi * spec.bend_radius;
  if (phi <= arm) return {{arm - phi, spec.bend_radius}, {0.0, 1.0}};
  if (phi <= arm + bend) {
    double theta = kPi / 2.0 + (phi - arm) / spec.bend_radius;
    double c = std::cos(theta), s = std::sin(theta);
    return {{spec.bend_radius * c, spec.bend_radius * s}, {c, s}};
  }
  return {{phi - arm - bend, -spec.bend_radius}, {0.0, -1.0}};
}

}  // namespace

Point2 c_domain_map(const CDomainSpec& spec, double phi, double r) {
  Frame f = centerline(spec, phi);
  return {f.center.x + r * f.normal.x, f.center.y + r * f.normal.y};
}

std::vector<GridPoint> c_domain_grid(const CDomainSpec& spec) {
  if (spec.n_phi < 2 || spec.n_r < 2)
    fail(ErrorCode::PreconditionViolation, "grid needs at least 2x2 points");
  std::vector<GridPoint> out;
  out.reserve(static_cast<size_t>(spec.n_phi) * spec.n_r);
  for (int i = 0; i < spec.n_phi; ++i) {
    double phi = spec.phi_max * i / (spec.n_phi - 1);
    for (int j = 0; j < spec.n_r; ++j) {
      double r = spec.r_min + (spec.r_max - spec.r_min) * j / (spec.n_r - 1);
      Point2 p = c_domain_map(spec, phi, r);
      out.push_back({phi, r, p.x, p.y});
    }
  }
  return out;
}

Polygon c_domain_boundary(const CDomainSpec& spec, double margin,
                          int samples_per_side) {
  if (samples_per_side < 2)
    fail(ErrorCode::PreconditionViolation, "need at least 2 boundary samples");
  double lo = -margin;
  double hi = spec.phi_max + margin;
  double r_out = spec.r_max + margin;
  double r_in = spec.r_min - margin;
  std::vector<Point2> ring;
  ring.reserve(2 * samples_per_side + 2);
  // outer edge phi: lo -> hi, then end cap, then inner edge back, start cap
  for (int i = 0; i < samples_per_side; ++i) {
    double phi = lo + (hi - lo) * i / (samples_per_side - 1);
    ring.push_back(c_domain_map(spec, phi, r_out));
  }
  for (int i = 0; i < samples_per_side; ++i) {
    double phi = hi + (lo - hi) * i / (samples_per_side - 1);
    ring.push_back(c_domain_map(spec, phi, r_in));
  }
  return Polygon(std::move(ring));
}

GrfSampler::GrfSampler(std::span<const GridPoint> grid, const GrfSpec& spec) {
  if (grid.empty())
    fail(ErrorCode::PreconditionViolation, "empty grid for the field sampler");
  if (spec.range <= 0.0 || spec.sill <= 0.0)
    fail(ErrorCode::PreconditionViolation, "field range and sill must be positive");
  n_ = static_cast<int>(grid.size());
  size_t nn = static_cast<size_t>(n_) * n_;

  // spherical covariance on (phi, r); compactly supported at the range
  std::vector<double> cov(nn);
  for (int i = 0; i < n_; ++i) {
    cov[static_cast<size_t>(i) * n_ + i] = spec.sill;
    for (int j = 0; j < i; ++j) {
      double dphi = grid[i].phi - grid[j].phi;
      double dr = grid[i].r - grid[j].r;
      double h = std::sqrt(dphi * dphi + dr * dr);
      double c = 0.0;
      if (h < spec.range) {
        double u = h / spec.range;
        c = spec.sill * (1.0 - 1.5 * u + 0.5 * u * u * u);
      }
      cov[static_cast<size_t>(i) * n_ + j] = c;
      cov[static_cast<size_t>(j) * n_ + i] = c;
    }
  }

  // in-place lower Cholesky with escalating diagonal jitter
  for (int attempt = 0;; ++attempt) {
    double jitter = spec.jitter * std::pow(10.0, attempt);
    factor_.assign(cov.begin(), cov.end());
    for (int i = 0; i < n_; ++i)
      factor_[static_cast<size_t>(i) * n_ + i] += jitter;
    bool ok = true;
    for (int j = 0; j < n_ && ok; ++j) {
      double* colj = factor_.data();
      double d = factor_[static_cast<size_t>(j) * n_ + j];
      for (int k = 0; k < j; ++k) {
        double v = factor_[static_cast<size_t>(j) * n_ + k];
        d -= v * v;
      }
      if (d <= 0.0) {
        ok = false;
        break;
      }
      d = std::sqrt(d);
      factor_[static_cast<size_t>(j) * n_ + j] = d;
      for (int i = j + 1; i < n_; ++i) {
        double s = factor_[static_cast<size_t>(i) * n_ + j];
        const double* rowi = colj + static_cast<size_t>(i) * n_;
        const double* rowj = colj + static_cast<size_t>(j) * n_;
        for (int k = 0; k < j; ++k) s -= rowi[k] * rowj[k];
        factor_[static_cast<size_t>(i) * n_ + j] = s / d;
      }
    }
    if (ok) {
      for (int i = 0; i < n_; ++i)
        for (int j = i + 1; j < n_; ++j)
          factor_[static_cast<size_t>(i) * n_ + j] = 0.0;
      return;
    }
    if (attempt == 3)
      fail(ErrorCode::FactorizationFailure,
           "covariance factorization failed even with jitter " +
               std::to_string(jitter));
  }
}

std::vector<double> GrfSampler::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(n_);
  for (int i = 0; i < n_; ++i) z[i] = normal(rng);
  std::vector<double> out(n_);
  for (int i = 0; i < n_; ++i) {
    const double* row = factor_.data() + static_cast<size_t>(i) * n_;
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += row[j] * z[j];
    out[i] = s;
  }
  return out;
}

double alpha_scale(const CDomainSpec& spec, double phi) {
  return std::sqrt(0.1 + (spec.phi_max - phi) / spec.phi_max);
}

SymMatrix drift_a(const CDomainSpec& spec, double phi, double r) {
  double rev = spec.phi_max - phi;
  SymMatrix a(2);
  a.set(0, 0, 0.5 * phi + 0.2 * rev - 0.2 * r);
  a.set(0, 1, 0.4 * phi - 0.1 * rev + 0.1 * r);
  a.set(1, 1, 0.5 * phi + 0.2 * rev + 0.4 * r);
  return a;
}

SPDMatrix tangent_psi(const CDomainSpec& spec, double phi, double r) {
  SymMatrix sigma(2);
  sigma.set(0, 0, 2.0);
  sigma.set(0, 1, 1.0);
  sigma.set(1, 1, 2.0);
  SPDMatrix base = SPDMatrix::validated(sigma);
  SPDMatrix e = spd_exp(base, drift_a(spec, phi, r));
  SymMatrix scaled = e.sym();
  scaled.scale(0.5 * alpha_scale(spec, phi));
  return SPDMatrix::trusted(std::move(scaled));
}

std::vector<SPDMatrix> generate_spd_field(std::span<const GridPoint> grid,
                                          const GrfSampler& grf,
                                          const CDomainSpec& spec,
                                          std::uint64_t seed) {
  if (grf.size() != static_cast<int>(grid.size()))
    fail(ErrorCode::PreconditionViolation, "sampler/grid size mismatch");
  std::mt19937_64 rng(seed);
  std::vector<double> d11 = grf.sample(rng);
  std::vector<double> d12 = grf.sample(rng);
  std::vector<double> d22 = grf.sample(rng);

  std::vector<SPDMatrix> out;
  out.reserve(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    const GridPoint& g = grid[i];
    double a2 = alpha_scale(spec, g.phi);
    a2 *= a2;
    SymMatrix step = drift_a(spec, g.phi, g.r);
    step.set(0, 0, step(0, 0) + a2 * d11[i]);
    step.set(0, 1, step(0, 1) + a2 * d12[i]);
    step.set(1, 1, step(1, 1) + a2 * d22[i]);
    out.push_back(spd_exp(tangent_psi(spec, g.phi, g.r), step));
  }
  return out;
}

std::vector<CholFactor> generate_corr_field(std::span<const GridPoint> grid,
                                            const GrfSampler& grf,
                                            const CDomainSpec& spec,
                                            std::uint64_t seed) {
  std::vector<SPDMatrix> spd = generate_spd_field(grid, grf, spec, seed);
  std::vector<CholFactor> out;
  out.reserve(spd.size());
  for (const SPDMatrix& c : spd) {
    int p = c.dim();
    SymMatrix r(p);
    for (int i = 0; i < p; ++i) {
      r.set(i, i, 1.0);
      for (int j = i + 1; j < p; ++j)
        r.set(i, j, c(i, j) / std::sqrt(c(i, i) * c(j, j)));
    }
    out.push_back(corr_to_chol(r));
  }
  return out;
}

namespace {

DomainGraph grid_graph(const McConfig& cfg, const std::vector<GridPoint>& grid) {
  std::vector<Site> sites;
  sites.reserve(grid.size());
  for (size_t i = 0; i < grid.size(); ++i)
    sites.push_back({"g" + std::to_string(i), grid[i].x, grid[i].y});
  // ring samples double as mesh vertices; without them a sliver triangle can
  // span the mouth of the C with its centroid still inside an arm
  Polygon boundary = c_domain_boundary(cfg.domain);
  return build_delaunay(SiteSet::validated(std::move(sites)), boundary,
                        boundary.ring(), cfg.run.workers);
}

}  // namespace

McStudyResult monte_carlo_study(const McConfig& cfg) {
  std::vector<GridPoint> grid = c_domain_grid(cfg.domain);
  DomainGraph graph = grid_graph(cfg, grid);
  GrfSampler grf(grid, cfg.grf);

  if (cfg.manifold == ManifoldKind::Sphere)
    fail(ErrorCode::InvalidArgument,
         "the simulation study generates matrix-valued fields only");

  if (cfg.manifold == ManifoldKind::Chol) {
    std::vector<CholFactor> shared;
    if (!cfg.new_field_per_replicate)
      shared = generate_corr_field(grid, grf, cfg.domain,
                                   detail::mix_seed(cfg.seed, detail::kFieldStream));
    auto field = [&](int rep) {
      if (!cfg.new_field_per_replicate) return shared;
      return generate_corr_field(
          grid, grf, cfg.domain,
          detail::mix_seed(cfg.seed, detail::kFieldStream + rep));
    };
    return run_mc_study<CholManifold>(cfg, grid, graph, field);
  }

  std::vector<SPDMatrix> shared;
  if (!cfg.new_field_per_replicate)
    shared = generate_spd_field(grid, grf, cfg.domain,
                                detail::mix_seed(cfg.seed, detail::kFieldStream));
  auto field = [&](int rep) {
    if (!cfg.new_field_per_replicate) return shared;
    return generate_spd_field(grid, grf, cfg.domain,
                              detail::mix_seed(cfg.seed, detail::kFieldStream + rep));
  };
  return run_mc_study<SpdManifold>(cfg, grid, graph, field);
}

}  // namespace rddmk
