#include "rddmk/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_set>

#include "rddmk/parallel.hpp"

namespace rddmk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double hypot2(double dx, double dy) { return std::sqrt(dx * dx + dy * dy); }

}  // namespace

SiteSet SiteSet::validated(std::vector<Site> sites) {
  std::unordered_set<std::string> ids;
  for (const Site& s : sites) {
    if (s.id.empty())
      fail(ErrorCode::DegenerateInput, "site with empty id");
    if (!ids.insert(s.id).second)
      fail(ErrorCode::DegenerateInput, "duplicate site id", s.id);
  }
  for (size_t i = 0; i < sites.size(); ++i)
    for (size_t j = i + 1; j < sites.size(); ++j)
      if (hypot2(sites[i].x - sites[j].x, sites[i].y - sites[j].y) <= kDupTol)
        fail(ErrorCode::DegenerateInput, "sites closer than the duplicate tolerance",
             sites[i].id + "," + sites[j].id);
  SiteSet out;
  out.sites_ = std::move(sites);
  return out;
}

Polygon::Polygon(std::vector<Point2> ring) : ring_(std::move(ring)) {
  if (ring_.size() < 3)
    fail(ErrorCode::DegenerateInput, "boundary polygon needs at least 3 vertices");
}

bool Polygon::contains(double x, double y) const {
  bool inside = false;
  size_t n = ring_.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = ring_[i];
    const Point2& b = ring_[j];
    if ((a.y > y) != (b.y > y)) {
      double xi = (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x;
      if (x < xi) inside = !inside;
    }
  }
  return inside;
}

// ------------------------------------------------------------- triangulation

namespace {

struct Tri {
  int a, b, c;
  double ccx, ccy, r2;  // circumcircle, double precision for the fast test
  bool alive = true;
};

// Positive when p is strictly inside the circumcircle of CCW triangle (a,b,c).
long double incircle_det(double ax, double ay, double bx, double by, double cx,
                         double cy, double px, double py) {
  long double adx = (long double)ax - px, ady = (long double)ay - py;
  long double bdx = (long double)bx - px, bdy = (long double)by - py;
  long double cdx = (long double)cx - px, cdy = (long double)cy - py;
  long double ad = adx * adx + ady * ady;
  long double bd = bdx * bdx + bdy * bdy;
  long double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
         ad * (bdx * cdy - bdy * cdx);
}

struct Triangulator {
  std::vector<double> px, py;
  std::vector<Tri> tris;

  void make_tri(int a, int b, int c) {
    // orient CCW
    double cross = (px[b] - px[a]) * (py[c] - py[a]) - (py[b] - py[a]) * (px[c] - px[a]);
    if (cross == 0.0)
      fail(ErrorCode::DegenerateInput, "collinear points produce a degenerate triangle");
    if (cross < 0.0) std::swap(b, c);
    double ax = px[a], ay = py[a], bx = px[b], by = py[b], cx = px[c], cy = py[c];
    double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
    double ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
    double uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
    double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
    tris.push_back(Tri{a, b, c, ux, uy, r2});
  }

  bool in_circumcircle(const Tri& t, double x, double y) const {
    double d2 = (x - t.ccx) * (x - t.ccx) + (y - t.ccy) * (y - t.ccy);
    // wide double-precision band, exact-ish confirmation only when borderline
    if (d2 < t.r2 * (1.0 - 1e-9)) return true;
    if (d2 > t.r2 * (1.0 + 1e-9)) return false;
    return incircle_det(px[t.a], py[t.a], px[t.b], py[t.b], px[t.c], py[t.c], x, y) >
           1e-12L;
  }

  void insert(int p) {
    std::vector<int> bad;
    for (size_t i = 0; i < tris.size(); ++i)
      if (tris[i].alive && in_circumcircle(tris[i], px[p], py[p]))
        bad.push_back(static_cast<int>(i));
    if (bad.empty())
      fail(ErrorCode::DegenerateInput,
           "triangulation cavity is empty; input too degenerate");

    std::map<std::pair<int, int>, int> edge_count;
    auto touch = [&](int u, int v) { edge_count[{std::min(u, v), std::max(u, v)}]++; };
    for (int i : bad) {
      touch(tris[i].a, tris[i].b);
      touch(tris[i].b, tris[i].c);
      touch(tris[i].c, tris[i].a);
      tris[i].alive = false;
    }
    for (const auto& [e, cnt] : edge_count) {
      if (cnt > 2)
        fail(ErrorCode::DegenerateInput, "inconsistent triangulation cavity");
      if (cnt == 1) make_tri(e.first, e.second, p);
    }
  }
};

}  // namespace

DomainGraph build_delaunay(const SiteSet& sites,
                           const std::optional<Polygon>& boundary,
                           std::span<const Point2> extra_vertices, int workers) {
  DomainGraph g;
  g.mode_ = DomainGraph::Mode::Graph;
  g.sites_ = sites;

  // vertex list: sites first, extras deduplicated against everything before
  for (const Site& s : sites.sites()) {
    g.site_vertex_.push_back(static_cast<int>(g.vx_.size()));
    g.vx_.push_back(s.x);
    g.vy_.push_back(s.y);
  }
  for (const Point2& p : extra_vertices) {
    bool dup = false;
    for (size_t v = 0; v < g.vx_.size() && !dup; ++v)
      dup = hypot2(g.vx_[v] - p.x, g.vy_[v] - p.y) <= kDupTol;
    if (!dup) {
      g.vx_.push_back(p.x);
      g.vy_.push_back(p.y);
    }
  }

  int nv = static_cast<int>(g.vx_.size());
  if (nv < 3)
    fail(ErrorCode::DegenerateInput, "triangulation needs at least 3 vertices");

  Triangulator tr;
  tr.px = g.vx_;
  tr.py = g.vy_;

  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (int v = 0; v < nv; ++v) {
    xmin = std::min(xmin, g.vx_[v]);
    xmax = std::max(xmax, g.vx_[v]);
    ymin = std::min(ymin, g.vy_[v]);
    ymax = std::max(ymax, g.vy_[v]);
  }
  double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
  double span = std::max({xmax - xmin, ymax - ymin, 1.0});
  int s0 = nv, s1 = nv + 1, s2 = nv + 2;
  tr.px.insert(tr.px.end(), {cx - 20.0 * span, cx + 20.0 * span, cx});
  tr.py.insert(tr.py.end(), {cy - 10.0 * span, cy - 10.0 * span, cy + 20.0 * span});
  tr.make_tri(s0, s1, s2);

  std::vector<int> order(nv);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(0x9E3779B97F4A7C15ULL);  // fixed: deterministic mesh
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  for (int p : order) tr.insert(p);

  // keep real triangles whose centroid is inside the boundary
  std::set<std::pair<int, int>> edge_set;
  auto keep_edge = [&](int u, int v) { edge_set.insert({std::min(u, v), std::max(u, v)}); };
  int kept = 0;
  for (const Tri& t : tr.tris) {
    if (!t.alive || t.a >= nv || t.b >= nv || t.c >= nv) continue;
    if (boundary) {
      double gx = (g.vx_[t.a] + g.vx_[t.b] + g.vx_[t.c]) / 3.0;
      double gy = (g.vy_[t.a] + g.vy_[t.b] + g.vy_[t.c]) / 3.0;
      if (!boundary->contains(gx, gy)) continue;
    }
    ++kept;
    keep_edge(t.a, t.b);
    keep_edge(t.b, t.c);
    keep_edge(t.c, t.a);
  }
  if (kept == 0)
    fail(ErrorCode::DegenerateInput, "no triangles survive boundary trimming");

  std::vector<std::vector<std::pair<int, double>>> adj(nv);
  for (const auto& [u, v] : edge_set) {
    double len = hypot2(g.vx_[u] - g.vx_[v], g.vy_[u] - g.vy_[v]);
    g.edges_.push_back(Edge{u, v, len});
    adj[u].push_back({v, len});
    adj[v].push_back({u, len});
  }

  // connected component of the sites
  g.anchor_.assign(nv, 0);
  {
    std::vector<int> stack{g.site_vertex_[0]};
    g.anchor_[g.site_vertex_[0]] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (auto [v, len] : adj[u])
        if (!g.anchor_[v]) {
          g.anchor_[v] = 1;
          stack.push_back(v);
        }
    }
    for (int i = 0; i < sites.size(); ++i)
      if (!g.anchor_[g.site_vertex_[i]])
        fail(ErrorCode::DisconnectedGraph,
             "boundary trimming disconnects the site set", sites[i].id);
  }

  // all-pairs shortest paths, one Dijkstra per source vertex
  g.dist_.assign(static_cast<size_t>(nv) * nv, kInf);
  parallel_for(nv, workers, [&](int src) {
    double* row = g.dist_.data() + static_cast<size_t>(src) * nv;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    row[src] = 0.0;
    heap.push({0.0, src});
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (d > row[u]) continue;
      for (auto [v, len] : adj[u]) {
        double nd = d + len;
        if (nd < row[v]) {
          row[v] = nd;
          heap.push({nd, v});
        }
      }
    }
  });
  // exact symmetry regardless of per-source summation order
  for (int u = 0; u < nv; ++u)
    for (int v = u + 1; v < nv; ++v) {
      double m = std::min(g.vertex_dist(u, v), g.vertex_dist(v, u));
      g.dist_[static_cast<size_t>(u) * nv + v] = m;
      g.dist_[static_cast<size_t>(v) * nv + u] = m;
    }
  return g;
}

DomainGraph euclidean_graph(const SiteSet& sites) {
  DomainGraph g;
  g.mode_ = DomainGraph::Mode::Euclidean;
  g.sites_ = sites;
  int n = sites.size();
  for (int i = 0; i < n; ++i) {
    g.site_vertex_.push_back(i);
    g.vx_.push_back(sites[i].x);
    g.vy_.push_back(sites[i].y);
  }
  g.dist_.assign(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double d = hypot2(sites[i].x - sites[j].x, sites[i].y - sites[j].y);
      g.dist_[static_cast<size_t>(i) * n + j] = d;
      g.dist_[static_cast<size_t>(j) * n + i] = d;
    }
  return g;
}

DomainGraph graph_from_matrix(const SiteSet& sites, std::vector<double> dist) {
  int n = sites.size();
  if (static_cast<int>(dist.size()) != n * n)
    fail(ErrorCode::InvalidArgument, "distance matrix size mismatch");
  for (int i = 0; i < n; ++i) {
    if (dist[static_cast<size_t>(i) * n + i] != 0.0)
      fail(ErrorCode::InvalidArgument, "distance matrix diagonal must be zero");
    for (int j = 0; j < n; ++j) {
      double dij = dist[static_cast<size_t>(i) * n + j];
      if (!(dij >= 0.0) || dij != dist[static_cast<size_t>(j) * n + i])
        fail(ErrorCode::InvalidArgument, "distance matrix must be symmetric nonnegative");
    }
  }
  DomainGraph g;
  g.mode_ = DomainGraph::Mode::MatrixOnly;
  g.sites_ = sites;
  for (int i = 0; i < n; ++i) {
    g.site_vertex_.push_back(i);
    g.vx_.push_back(sites[i].x);
    g.vy_.push_back(sites[i].y);
  }
  g.dist_ = std::move(dist);
  return g;
}

std::vector<double> DomainGraph::distances_to_sites(double x, double y) const {
  int n = site_count();
  std::vector<double> out(n);
  switch (mode_) {
    case Mode::Euclidean:
      for (int i = 0; i < n; ++i)
        out[i] = hypot2(x - sites_[i].x, y - sites_[i].y);
      return out;
    case Mode::MatrixOnly: {
      for (int i = 0; i < n; ++i)
        if (hypot2(x - sites_[i].x, y - sites_[i].y) <= kDupTol) {
          for (int j = 0; j < n; ++j) out[j] = site_dist(i, j);
          return out;
        }
      fail(ErrorCode::InvalidArgument,
           "with a precomputed distance matrix, targets must coincide with sites");
    }
    case Mode::Graph: {
      int best = -1;
      double best_d = kInf;
      for (int v = 0; v < vertex_count(); ++v) {
        if (!anchor_[v]) continue;
        double d = hypot2(x - vx_[v], y - vy_[v]);
        if (d < best_d) {
          best_d = d;
          best = v;
        }
      }
      if (best < 0) fail(ErrorCode::DisconnectedGraph, "no reachable vertex for target");
      double hop = best_d <= kDupTol ? 0.0 : best_d;
      for (int j = 0; j < n; ++j)
        out[j] = hop + vertex_dist(best, site_vertex_[j]);
      return out;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown graph mode");
}

Partition draw_partition(const DomainGraph& graph, int k, std::mt19937_64& rng,
                         int min_tile_size, int max_attempts) {
  int n = graph.site_count();
  if (k < 1 || k > n)
    fail(ErrorCode::PreconditionViolation, "tile count must be between 1 and the site count");
  min_tile_size = std::max(1, min_tile_size);

  std::vector<int> pool(n);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::iota(pool.begin(), pool.end(), 0);
    Partition part;
    part.k = k;
    for (int i = 0; i < k; ++i) {
      int j = i + std::uniform_int_distribution<int>(0, n - 1 - i)(rng);
      std::swap(pool[i], pool[j]);
      part.nuclei.push_back(pool[i]);
    }
    part.assignment.resize(n);
    part.tiles.assign(k, {});
    for (int s = 0; s < n; ++s) {
      int best = 0;
      double best_d = graph.site_dist(s, part.nuclei[0]);
      for (int t = 1; t < k; ++t) {
        double d = graph.site_dist(s, part.nuclei[t]);
        if (d < best_d) {  // ties keep the lowest nucleus index
          best_d = d;
          best = t;
        }
      }
      part.assignment[s] = best;
      part.tiles[best].push_back(s);
    }
    bool ok = true;
    for (const auto& tile : part.tiles)
      ok = ok && static_cast<int>(tile.size()) >= min_tile_size;
    if (ok) return part;
  }
  fail(ErrorCode::PartitionInfeasible,
       "could not draw a partition with the requested minimum tile size");
}

int assign_target_from_dists(const Partition& partition,
                             std::span<const double> site_dists) {
  int best = 0;
  double best_d = site_dists[partition.nuclei[0]];
  for (int t = 1; t < partition.k; ++t) {
    double d = site_dists[partition.nuclei[t]];
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  return best;
}

int assign_target(const DomainGraph& graph, const Partition& partition, double x,
                  double y) {
  std::vector<double> d = graph.distances_to_sites(x, y);
  return assign_target_from_dists(partition, d);
}

}  // namespace rddmk
