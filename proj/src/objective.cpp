#include "disco/objective.hpp"

#include <fmt/format.h>

#include "disco/errors.hpp"

namespace disco {

void ObjectiveConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError(fmt::format("gamma must lie in [0, 1], got {}", gamma));
  }
  if (k == 0) throw ConfigError("K must be at least 1");
  if (gamma > 0.0 && k < 2) throw ConfigError("K must be at least 2 when gamma > 0");
}

namespace {

std::size_t common_k(std::span<const CandidateSet> sets) {
  if (sets.empty()) throw ContractError("objective over an empty batch");
  const std::size_t k = sets.front().k();
  if (k == 0) throw ContractError("candidate set is empty");
  for (const CandidateSet& s : sets) {
    if (s.k() != k) throw ContractError("candidate sets in a batch must share K");
  }
  return k;
}

}  // namespace

double div_pq_hat(std::span<const Example> batch, std::span<const CandidateSet> candidate_sets,
                  const LossSpec& loss) {
  if (batch.empty()) throw ContractError("objective over an empty batch");
  if (batch.size() != candidate_sets.size()) {
    throw ContractError(fmt::format("{} examples but {} candidate sets", batch.size(),
                                    candidate_sets.size()));
  }
  const double k = static_cast<double>(common_k(candidate_sets));
  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    double per_example = 0.0;
    for (const Tensor& c : candidate_sets[n].candidates) per_example += loss(batch[n].y.data(), c.data());
    total += per_example / k;
  }
  return total / static_cast<double>(batch.size());
}

double div_qq_hat(std::span<const CandidateSet> candidate_sets, const LossSpec& loss) {
  const std::size_t k = common_k(candidate_sets);
  if (k < 2) throw EstimatorError(fmt::format("DIV(Q,Q) estimator needs K >= 2, got {}", k));
  const double pairs = static_cast<double>(k * (k - 1));
  double total = 0.0;
  for (const CandidateSet& set : candidate_sets) {
    double per_example = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a != b) per_example += loss(set.candidates[a].data(), set.candidates[b].data());
      }
    }
    total += per_example / pairs;
  }
  return total / static_cast<double>(candidate_sets.size());
}

double disco_objective(std::span<const Example> batch,
                       std::span<const CandidateSet> candidate_sets,
                       const ObjectiveConfig& config) {
  config.validate();
  const double fit = div_pq_hat(batch, candidate_sets, config.loss);
  if (config.gamma == 0.0) return fit;
  return fit - config.gamma * div_qq_hat(candidate_sets, config.loss);
}

NoiseBatch draw_noises(const NetConfig& config, std::size_t n, std::size_t k, Rng& rng) {
  NoiseBatch noises(n);
  for (auto& per_example : noises) {
    per_example.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      per_example.push_back(config.noise_enabled ? sample_noise(config.z_dim, rng) : Tensor());
    }
  }
  return noises;
}

namespace {

// Stacks inputs (each repeated K times) and noises into the batched layout
// used by forward_batch: row n*K + k holds example n, candidate k.
std::pair<Tensor, Tensor> stack_inputs(const NetConfig& net, std::span<const Example> batch,
                                       const NoiseBatch& noises, std::size_t k) {
  std::vector<double> xs, zs;
  xs.reserve(batch.size() * k * net.x_dim);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    if (noises[n].size() != k) throw ContractError("every example needs the same number of noises");
    if (batch[n].x.size() != net.x_dim) {
      throw DimensionError(fmt::format("example {} has x of length {}, expected {}", n,
                                       batch[n].x.size(), net.x_dim));
    }
    for (std::size_t i = 0; i < k; ++i) {
      xs.insert(xs.end(), batch[n].x.data().begin(), batch[n].x.data().end());
      if (net.noise_enabled) {
        const Tensor& z = noises[n][i];
        if (z.size() != net.z_dim) throw DimensionError("noise vector has the wrong length");
        zs.insert(zs.end(), z.data().begin(), z.data().end());
      }
    }
  }
  const std::size_t rows = batch.size() * k;
  return {Tensor({rows, net.x_dim}, std::move(xs)),
          net.noise_enabled ? Tensor({rows, net.z_dim}, std::move(zs)) : Tensor()};
}

}  // namespace

NodeId disco_objective_node(Graph& g, const NetConfig& net, const BoundParams& params,
                            std::span<const Example> batch, const NoiseBatch& noises,
                            const ObjectiveConfig& config) {
  config.validate();
  if (batch.empty()) throw ContractError("objective over an empty batch");
  if (noises.size() != batch.size()) throw ContractError("one noise list per example required");
  const std::size_t k = noises.front().size();
  if (k == 0) throw ContractError("candidate set is empty");
  if (config.gamma > 0.0 && k < 2) throw EstimatorError("DIV(Q,Q) estimator needs K >= 2");

  const auto [xs, zs] = stack_inputs(net, batch, noises, k);
  const NodeId pred = forward_batch(g, net, params, xs, zs);

  std::vector<double> ys;
  ys.reserve(batch.size() * net.y_dim);
  for (const Example& e : batch) {
    if (e.y.size() != net.y_dim) throw DimensionError("example y has the wrong length");
    ys.insert(ys.end(), e.y.data().begin(), e.y.data().end());
  }
  const NodeId truth = g.leaf(Tensor({batch.size(), net.y_dim}, std::move(ys)));

  const double n = static_cast<double>(batch.size());
  const double kd = static_cast<double>(k);
  std::vector<PairTerm> fit_terms;
  fit_terms.reserve(batch.size() * k);
  for (std::size_t e = 0; e < batch.size(); ++e) {
    for (std::size_t i = 0; i < k; ++i) fit_terms.push_back({e, e * k + i, 1.0 / (n * kd)});
  }
  const Tensor weights = config.loss.weight_tensor();
  const NodeId fit = pairwise_pow_norm(g, truth, pred, std::move(fit_terms), weights, config.loss.beta());
  if (config.gamma == 0.0) return fit;

  std::vector<PairTerm> spread_terms;
  spread_terms.reserve(batch.size() * k * (k - 1));
  const double pair_coef = 1.0 / (n * kd * (kd - 1.0));
  for (std::size_t e = 0; e < batch.size(); ++e) {
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a != b) spread_terms.push_back({e * k + a, e * k + b, pair_coef});
      }
    }
  }
  const NodeId spread = pairwise_pow_norm(g, pred, pred, std::move(spread_terms), weights, config.loss.beta());
  return add(g, fit, scale(g, spread, -config.gamma));
}

std::vector<CandidateSet> candidates_from_noises(const NetworkParams& params,
                                                 std::span<const Example> batch,
                                                 const NoiseBatch& noises) {
  if (noises.size() != batch.size()) throw ContractError("one noise list per example required");
  std::vector<CandidateSet> sets;
  sets.reserve(batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) {
    CandidateSet set;
    set.input_index = n;
    for (const Tensor& z : noises[n]) {
      set.candidates.push_back(generate(params, batch[n].x, z));
      set.noises.push_back(z);
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace disco
