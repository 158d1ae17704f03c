#pragma once

// Spatial support: site sets, the domain metric (shortest paths over a
// boundary-trimmed Delaunay triangulation, plain Euclidean, or a user-supplied
// distance matrix), random Voronoi partitions and target/tile assignment.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rddmk/error.hpp"

namespace rddmk {

inline constexpr double kDupTol = 1e-9;

struct Site {
  std::string id;
  double x = 0.0;
  double y = 0.0;
};

class SiteSet {
 public:
  SiteSet() = default;
  // unique ids, pairwise separation > kDupTol
  static SiteSet validated(std::vector<Site> sites);

  int size() const { return static_cast<int>(sites_.size()); }
  const Site& operator[](int i) const { return sites_[static_cast<size_t>(i)]; }
  const std::vector<Site>& sites() const { return sites_; }

 private:
  std::vector<Site> sites_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(std::vector<Point2> ring);
  bool contains(double x, double y) const;  // even-odd rule
  const std::vector<Point2>& ring() const { return ring_; }

 private:
  std::vector<Point2> ring_;
};

struct Edge {
  int a = 0;
  int b = 0;
  double length = 0.0;
};

// The metric container. In graph mode it holds every triangulation vertex and
// the full vertex-to-vertex shortest-path matrix; sites map onto vertices.
class DomainGraph {
 public:
  enum class Mode { Graph, Euclidean, MatrixOnly };

  Mode mode() const { return mode_; }
  int site_count() const { return static_cast<int>(site_vertex_.size()); }
  int vertex_count() const { return static_cast<int>(vx_.size()); }
  const SiteSet& sites() const { return sites_; }
  const std::vector<Edge>& edges() const { return edges_; }

  double site_dist(int i, int j) const {
    return vertex_dist(site_vertex_[static_cast<size_t>(i)],
                       site_vertex_[static_cast<size_t>(j)]);
  }
  double vertex_dist(int u, int v) const {
    return dist_[static_cast<size_t>(u) * static_cast<size_t>(vx_.size()) +
                 static_cast<size_t>(v)];
  }

  // Distances from an arbitrary location to every site. Graph mode hops from
  // the location to its Euclidean-nearest vertex; a location that coincides
  // with a vertex therefore gets exact graph distances.
  std::vector<double> distances_to_sites(double x, double y) const;

  friend DomainGraph build_delaunay(const SiteSet& sites,
                                    const std::optional<Polygon>& boundary,
                                    std::span<const Point2> extra_vertices,
                                    int workers);
  friend DomainGraph euclidean_graph(const SiteSet& sites);
  friend DomainGraph graph_from_matrix(const SiteSet& sites,
                                       std::vector<double> dist);

 private:
  Mode mode_ = Mode::Euclidean;
  SiteSet sites_;
  std::vector<double> vx_, vy_;
  std::vector<int> site_vertex_;
  std::vector<char> anchor_;  // vertex usable as a hop anchor (site component)
  std::vector<Edge> edges_;
  std::vector<double> dist_;  // vertex_count^2, symmetric
};

// Delaunay triangulation of sites plus extra vertices, trimmed by dropping
// every triangle whose centroid falls outside the boundary polygon; edge
// lengths are Euclidean and the metric is all-pairs shortest path.
DomainGraph build_delaunay(const SiteSet& sites,
                           const std::optional<Polygon>& boundary = std::nullopt,
                           std::span<const Point2> extra_vertices = {},
                           int workers = 1);

DomainGraph euclidean_graph(const SiteSet& sites);

// Precomputed site-to-site distances (row-major n x n). Targets must then
// coincide with sites; there is no geometry to attach anything else to.
DomainGraph graph_from_matrix(const SiteSet& sites, std::vector<double> dist);

struct Partition {
  int k = 0;
  std::vector<int> nuclei;      // site indices, in draw order
  std::vector<int> assignment;  // site index -> tile (0-based)
  std::vector<std::vector<int>> tiles;
};

// K nuclei drawn uniformly without replacement; sites join the tile of the
// nearest nucleus under the domain metric, ties to the lowest nucleus index.
// Redraws until every tile has at least min_tile_size sites.
Partition draw_partition(const DomainGraph& graph, int k, std::mt19937_64& rng,
                         int min_tile_size = 3, int max_attempts = 100);

// Tile for an arbitrary location under the same nearest-nucleus rule.
int assign_target(const DomainGraph& graph, const Partition& partition,
                  double x, double y);
int assign_target_from_dists(const Partition& partition,
                             std::span<const double> site_dists);

}  // namespace rddmk
