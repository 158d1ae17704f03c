#pragma once

// Ordinary kriging of tangent vectors within one tile. The saddle system is
// factored once per tile and reused for every target.

#include <optional>
#include <span>
#include <vector>

#include "rddmk/linalg.hpp"
#include "rddmk/variogram.hpp"

namespace rddmk {

struct KrigingWeights {
  std::vector<double> weights;  // sums to 1
  double lagrange_multiplier = 0.0;
  double kriging_variance = 0.0;  // lambda'gamma0 + mu, clamped at 0
};

class KrigingSystem {
 public:
  // dists: row-major n x n pairwise distances among the tile's sites.
  // Throws SingularSystem when the saddle matrix cannot be factored, e.g. a
  // zero variogram over two or more sites.
  KrigingSystem(const VariogramModel& model, std::span<const double> dists, int n);

  int size() const { return n_; }
  const VariogramModel& model() const { return model_; }

  // target_dists[i] = distance from the target to tile site i. A target
  // within 1e-12 of a site under a zero-nugget model short-circuits to the
  // indicator weights (exact interpolation without touching the solver).
  KrigingWeights weights(std::span<const double> target_dists) const;

 private:
  VariogramModel model_;
  int n_ = 0;
  std::optional<SaddleSolver> solver_;
};

// Last-resort weights when even a refitted system is singular.
KrigingWeights uniform_weights(int n);

template <class M>
struct TileModel {
  int tile_index = 0;
  typename M::Point tangent_point;
  std::vector<int> site_indices;           // sites in the tile
  std::vector<typename M::Tangent> logs;   // aligned with site_indices
  VariogramModel variogram;
};

// Weighted combination of the tile's log vectors.
template <class M>
typename M::Tangent krige_tangent(const TileModel<M>& model,
                                  const KrigingWeights& w) {
  typename M::Tangent acc = model.logs[0];
  acc.scale(w.weights[0]);
  for (size_t i = 1; i < model.logs.size(); ++i)
    M::tangent_add_scaled(acc, w.weights[i], model.logs[i]);
  return acc;
}

// Full prediction: weights, tangent combination, exponential map back.
template <class M>
typename M::Point krige_predict(const TileModel<M>& model,
                                const KrigingSystem& sys,
                                std::span<const double> target_dists) {
  KrigingWeights w = sys.weights(target_dists);
  typename M::Chart chart(model.tangent_point);
  return chart.exp(krige_tangent(model, w));
}

}  // namespace rddmk
