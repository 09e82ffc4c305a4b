#include "disco/scoring.hpp"

#include <cmath>
#include <string>

#include "disco/errors.hpp"
#include "disco/netgen.hpp"

namespace disco {

LossSpec::LossSpec(double beta, std::vector<double> weights)
    : beta_(beta), weights_(std::move(weights)) {
  if (!(beta_ > 0.0 && beta_ < 2.0)) {
    throw ParameterError("loss beta must lie strictly between 0 and 2, got " +
                         std::to_string(beta_));
  }
  if (!weights_.empty()) {
    bool any_positive = false;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("loss weights must be non-negative");
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) throw ParameterError("loss weights must not all be zero");
  }
}

Tensor LossSpec::weight_tensor() const {
  return weights_.empty() ? Tensor() : Tensor::vector(weights_);
}

double LossSpec::operator()(std::span<const double> y, std::span<const double> y2) const {
  if (y.size() != y2.size()) {
    throw DimensionError("loss operands have lengths " + std::to_string(y.size()) + " and " +
                         std::to_string(y2.size()));
  }
  if (!weights_.empty() && weights_.size() != y.size()) {
    throw DimensionError("loss has " + std::to_string(weights_.size()) +
                         " weights for vectors of length " + std::to_string(y.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y2[i];
    s += (weights_.empty() ? 1.0 : weights_[i]) * d * d;
  }
  return std::pow(s, 0.5 * beta_);
}

double energy_score_sample(const CandidateSet& candidates, const Tensor& y_true,
                           const LossSpec& spec) {
  const std::size_t k = candidates.k();
  if (k < 2) throw EstimatorError("energy score needs at least 2 candidates, got " + std::to_string(k));
  double fit = 0.0;
  for (const Tensor& c : candidates.candidates) fit += spec(y_true.data(), c.data());
  double spread = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (a != b) spread += spec(candidates.candidates[b].data(), candidates.candidates[a].data());
    }
  }
  const double kd = static_cast<double>(k);
  return fit / kd - spread / (2.0 * kd * (kd - 1.0));
}

void DiscreteDistribution::validate() const {
  if (support.empty() || support.size() != probabilities.size()) {
    throw ContractError("distribution needs one probability per support point");
  }
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw ContractError("distribution has a negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ContractError("distribution is not normalised (sum " + std::to_string(total) + ")");
  }
  const std::size_t dim = support.front().size();
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i].size() != dim) throw DimensionError("support points differ in dimension");
    for (std::size_t j = 0; j < i; ++j) {
      if (support[i] == support[j]) throw ContractError("distribution has duplicate support points");
    }
  }
}

DiscreteDistribution DiscreteDistribution::point_mass(std::vector<double> y) {
  return {{std::move(y)}, {1.0}};
}

double expected_loss(const DiscreteDistribution& p, const DiscreteDistribution& q,
                     const LossSpec& spec) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.support.size(); ++i) {
    for (std::size_t j = 0; j < q.support.size(); ++j) {
      total += p.probabilities[i] * q.probabilities[j] * spec(p.support[i], q.support[j]);
    }
  }
  return total;
}

double divergence_discrete(const DiscreteDistribution& q, const DiscreteDistribution& p,
                           const LossSpec& spec) {
  q.validate();
  p.validate();
  if (q.support.front().size() != p.support.front().size()) {
    throw DimensionError("distributions live in different dimensions");
  }
  return expected_loss(p, q, spec) - 0.5 * expected_loss(q, q, spec) -
         0.5 * expected_loss(p, p, spec);
}

}  // namespace disco
