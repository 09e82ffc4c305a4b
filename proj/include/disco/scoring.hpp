#pragma once

#include <span>
#include <vector>

#include "disco/tensor.hpp"

namespace disco {

struct CandidateSet;

/// Weighted beta-norm loss  Delta(y, y') = (sum_i w_i (y_i - y'_i)^2)^(beta/2).
/// Strictly proper as an energy score only for 0 < beta < 2, so both ends are
/// rejected. Empty weights mean all ones.
class LossSpec {
 public:
  explicit LossSpec(double beta = 1.0, std::vector<double> weights = {});

  /// Unweighted Euclidean norm raised to `beta`.
  static LossSpec euclidean(double beta = 1.0) { return LossSpec(beta); }
  /// Weights (10, 0.1), beta 1: emphasises the first coordinate.
  static LossSpec delta_a() { return LossSpec(1.0, {10.0, 0.1}); }
  /// Weights (0.1, 10), beta 1: emphasises the second coordinate.
  static LossSpec delta_b() { return LossSpec(1.0, {0.1, 10.0}); }

  double beta() const { return beta_; }
  const std::vector<double>& weights() const { return weights_; }
  /// Weights as a tensor for the autodiff norm ops (empty when unweighted).
  Tensor weight_tensor() const;

  double operator()(std::span<const double> y, std::span<const double> y2) const;

 private:
  double beta_;
  std::vector<double> weights_;
};

inline double delta(const LossSpec& spec, const Tensor& y, const Tensor& y2) {
  return spec(y.data(), y2.data());
}

/// Per-example energy score
///   (1/K) sum_k Delta(y, g_k) - 1/(2K(K-1)) sum_k sum_{k' != k} Delta(g_k', g_k).
/// Throws EstimatorError when K < 2.
double energy_score_sample(const CandidateSet& candidates, const Tensor& y_true,
                           const LossSpec& spec);

/// Finite-support distribution; probabilities sum to 1 within 1e-12.
struct DiscreteDistribution {
  std::vector<std::vector<double>> support;
  std::vector<double> probabilities;

  /// Throws ContractError unless normalised, non-negative and free of
  /// duplicate support points; DimensionError on mixed dimensions.
  void validate() const;
  static DiscreteDistribution point_mass(std::vector<double> y);
};

/// Expected loss E[Delta(A, B)] for independent A ~ p, B ~ q (exact double sum).
double expected_loss(const DiscreteDistribution& p, const DiscreteDistribution& q,
                     const LossSpec& spec);

/// Score divergence of forecast q against truth p:
///   DIV(P,Q) - DIV(Q,Q)/2 - DIV(P,P)/2.
double divergence_discrete(const DiscreteDistribution& q, const DiscreteDistribution& p,
                           const LossSpec& spec);

}  // namespace disco
