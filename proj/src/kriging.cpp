#include "rddmk/kriging.hpp"

#include <algorithm>
#include <cmath>

namespace rddmk {

KrigingSystem::KrigingSystem(const VariogramModel& model,
                             std::span<const double> dists, int n)
    : model_(model), n_(n) {
  if (n < 1) fail(ErrorCode::PreconditionViolation, "tile has no sites");
  if (static_cast<int>(dists.size()) != n * n)
    fail(ErrorCode::PreconditionViolation, "distance block does not match tile size");
  if (n == 1) return;  // constraint forces the single weight to 1
  Matrix gamma(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double g = model_eval(model_, dists[static_cast<size_t>(i) * n + j]);
      gamma(i, j) = g;
      gamma(j, i) = g;
    }
  solver_.emplace(gamma);
}

KrigingWeights KrigingSystem::weights(std::span<const double> target_dists) const {
  if (static_cast<int>(target_dists.size()) != n_)
    fail(ErrorCode::PreconditionViolation, "target distance vector size mismatch");
  KrigingWeights out;
  if (n_ == 1) {
    out.weights = {1.0};
    out.kriging_variance =
        std::max(0.0, model_eval(model_, target_dists[0]));
    return out;
  }
  if (model_.nugget == 0.0) {
    for (int i = 0; i < n_; ++i)
      if (target_dists[i] < 1e-12) {
        out.weights.assign(n_, 0.0);
        out.weights[i] = 1.0;
        return out;
      }
  }
  std::vector<double> gamma0(n_);
  for (int i = 0; i < n_; ++i) gamma0[i] = model_eval(model_, target_dists[i]);
  SaddleSolution sol = solver_->solve(gamma0);
  out.weights = std::move(sol.weights);
  out.lagrange_multiplier = sol.multiplier;
  double var = sol.multiplier;
  for (int i = 0; i < n_; ++i) var += out.weights[i] * gamma0[i];
  out.kriging_variance = std::max(0.0, var);
  return out;
}

KrigingWeights uniform_weights(int n) {
  if (n < 1) fail(ErrorCode::PreconditionViolation, "tile has no sites");
  KrigingWeights out;
  out.weights.assign(n, 1.0 / n);
  return out;
}

}  // namespace rddmk
