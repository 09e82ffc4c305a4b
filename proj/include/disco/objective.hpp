#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "disco/graph.hpp"
#include "disco/netgen.hpp"
#include "disco/scoring.hpp"
#include "disco/tensor.hpp"

namespace disco {

/// One supervised pair (x_n, y_n).
struct Example {
  Tensor x;
  Tensor y;
};
using Dataset = std::vector<Example>;

struct ObjectiveConfig {
  double gamma = 0.5;
  std::size_t k = 16;
  LossSpec loss{};

  /// gamma in [0, 1]; K >= 1, and K >= 2 whenever gamma > 0.
  void validate() const;
};

/// (1/N) sum_n (1/K) sum_k Delta(y_n, g_{n,k}).
double div_pq_hat(std::span<const Example> batch, std::span<const CandidateSet> candidate_sets,
                  const LossSpec& loss);

/// (1/N) sum_n 1/(K(K-1)) sum_k sum_{k' != k} Delta(g_{n,k}, g_{n,k'}).
/// Throws EstimatorError when K < 2.
double div_qq_hat(std::span<const CandidateSet> candidate_sets, const LossSpec& loss);

/// div_pq_hat - gamma * div_qq_hat. The diversity term is skipped when gamma is 0.
double disco_objective(std::span<const Example> batch,
                       std::span<const CandidateSet> candidate_sets,
                       const ObjectiveConfig& config);

/// Per-example noise draws: noises[n][k] feeds candidate k of example n.
using NoiseBatch = std::vector<std::vector<Tensor>>;

/// Draws K noises for each of `n` examples in example-major order. Returns
/// empty tensors when the network has no noise input.
NoiseBatch draw_noises(const NetConfig& config, std::size_t n, std::size_t k, Rng& rng);

/// Scalar graph node for the objective on the candidates induced by `noises`.
/// The noises are constants of the graph, so backward gives the gradient with
/// respect to the bound parameters only. K = 1 is accepted when gamma is 0.
NodeId disco_objective_node(Graph& g, const NetConfig& net, const BoundParams& params,
                            std::span<const Example> batch, const NoiseBatch& noises,
                            const ObjectiveConfig& config);

/// Candidate sets produced by the same noises, evaluated without a graph.
std::vector<CandidateSet> candidates_from_noises(const NetworkParams& params,
                                                 std::span<const Example> batch,
                                                 const NoiseBatch& noises);

}  // namespace disco
