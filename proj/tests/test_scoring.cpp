#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "disco/errors.hpp"
#include "disco/metrics.hpp"
#include "disco/netgen.hpp"
#include "disco/rng.hpp"
#include "disco/scoring.hpp"

using namespace disco;

namespace {

CandidateSet make_set(std::vector<std::vector<double>> rows) {
  CandidateSet s;
  for (auto& r : rows) {
    s.candidates.push_back(Tensor::vector(r));
    s.noises.emplace_back();
  }
  return s;
}

}  // namespace

TEST(LossSpec, RejectsOutOfRangeBeta) {
  EXPECT_THROW(LossSpec(0.0), ParameterError);
  EXPECT_THROW(LossSpec(2.0), ParameterError);
  EXPECT_THROW(LossSpec(-1.0), ParameterError);
  EXPECT_THROW(LossSpec(std::nan("")), ParameterError);
  EXPECT_NO_THROW(LossSpec(1.999));
  EXPECT_NO_THROW(LossSpec(1e-3));
}

TEST(LossSpec, RejectsBadWeights) {
  EXPECT_THROW(LossSpec(1.0, {1.0, -0.1}), ParameterError);
  EXPECT_THROW(LossSpec(1.0, {0.0, 0.0}), ParameterError);
  EXPECT_NO_THROW(LossSpec(1.0, {0.0, 1.0}));
}

TEST(LossSpec, PresetWeights) {
  EXPECT_EQ(LossSpec::delta_a().weights(), (std::vector<double>{10.0, 0.1}));
  EXPECT_EQ(LossSpec::delta_b().weights(), (std::vector<double>{0.1, 10.0}));
  EXPECT_EQ(LossSpec::euclidean().beta(), 1.0);
  EXPECT_TRUE(LossSpec().weights().empty());
}

TEST(Delta, Values) {
  const Tensor o = Tensor::vector({0, 0});
  EXPECT_DOUBLE_EQ(delta(LossSpec(), o, Tensor::vector({3, 4})), 5.0);
  EXPECT_EQ(delta(LossSpec(), Tensor::vector({1.5, -2}), Tensor::vector({1.5, -2})), 0.0);
  const Tensor e1 = Tensor::vector({1, 0});
  EXPECT_NEAR(delta(LossSpec::delta_a(), o, e1), 3.1622776601683795, 1e-12);
  EXPECT_NEAR(delta(LossSpec::delta_b(), o, e1), 0.31622776601683794, 1e-12);
}

TEST(Delta, DimensionMismatch) {
  EXPECT_THROW(delta(LossSpec(), Tensor::vector({0, 0}), Tensor::vector({1})), DimensionError);
  EXPECT_THROW(delta(LossSpec(1.0, {1, 1, 1}), Tensor::vector({0, 0}), Tensor::vector({1, 1})), DimensionError);
}

TEST(Delta, SymmetryNonNegativityAndScaling) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const double beta = rng.uniform(0.05, 1.95);
    const LossSpec spec(beta, {rng.uniform(0, 3), rng.uniform(0.1, 3), rng.uniform(0, 3)});
    std::vector<double> y(3), y2(3);
    for (double& v : y) v = rng.normal();
    for (double& v : y2) v = rng.normal();
    const double c = rng.uniform(-3, 3);
    std::vector<double> cy(3), cy2(3);
    for (int i = 0; i < 3; ++i) {
      cy[i] = c * y[i];
      cy2[i] = c * y2[i];
    }
    const double d = spec(y, y2);
    EXPECT_GE(d, 0.0);
    EXPECT_DOUBLE_EQ(d, spec(y2, y));
    EXPECT_NEAR(spec(cy, cy2), std::pow(std::abs(c), beta) * d, 1e-10 * (1 + d));
  }
}

TEST(EnergyScore, HandEnumeratedExamples) {
  const LossSpec l1;
  EXPECT_DOUBLE_EQ(energy_score_sample(make_set({{1}, {3}}), Tensor::vector({0}), l1), 1.0);
  EXPECT_DOUBLE_EQ(energy_score_sample(make_set({{2}, {2}, {2}}), Tensor::vector({2}), l1), 0.0);
  EXPECT_DOUBLE_EQ(energy_score_sample(make_set({{0}, {0}}), Tensor::vector({5}), l1), 5.0);
}

TEST(EnergyScore, WeightedFixture) {
  // Frozen from an independent numpy enumeration of both sums.
  const LossSpec spec(1.3, {2.0, 0.5});
  const double got =
      energy_score_sample(make_set({{0.5, 1}, {-1, 2}, {3, -0.5}}), Tensor::vector({1, 1}), spec);
  EXPECT_NEAR(got, -0.11429431024573944, 1e-12);
}

TEST(EnergyScore, NeedsTwoCandidates) {
  EXPECT_THROW(energy_score_sample(make_set({{1}}), Tensor::vector({0}), LossSpec()), EstimatorError);
}

TEST(Discrete, Validation) {
  DiscreteDistribution d{{{0.0}, {1.0}}, {0.5, 0.4}};
  EXPECT_THROW(d.validate(), ContractError);
  d.probabilities = {0.5, 0.5};
  EXPECT_NO_THROW(d.validate());
  d.support = {{0.0}, {0.0}};
  EXPECT_THROW(d.validate(), ContractError);
  d.support = {{0.0}, {1.0, 2.0}};
  EXPECT_THROW(d.validate(), DimensionError);
  d = DiscreteDistribution{{{0.0}, {1.0}}, {1.5, -0.5}};
  EXPECT_THROW(d.validate(), ContractError);
}

TEST(Divergence, Examples) {
  const LossSpec l1;
  const auto at0 = DiscreteDistribution::point_mass({0.0});
  const auto at1 = DiscreteDistribution::point_mass({1.0});
  EXPECT_EQ(divergence_discrete(at0, at0, l1), 0.0);
  EXPECT_DOUBLE_EQ(divergence_discrete(at1, at0, l1), 1.0);
  const DiscreteDistribution half{{{0.0}, {1.0}}, {0.5, 0.5}};
  EXPECT_DOUBLE_EQ(divergence_discrete(at0, half, l1), 0.25);
}

TEST(Divergence, TwoDimensionalFixture) {
  // Frozen from an independent numpy double sum.
  const DiscreteDistribution p{{{0, 0}, {1, 2}, {-1, 0.5}}, {0.2, 0.5, 0.3}};
  const DiscreteDistribution q{{{0, 1}, {2, 2}}, {0.6, 0.4}};
  EXPECT_NEAR(divergence_discrete(q, p, LossSpec()), 0.37193144094164454, 1e-12);
}

TEST(Divergence, UnnormalisedIsContractError) {
  const DiscreteDistribution bad{{{0.0}, {1.0}}, {0.5, 0.6}};
  const auto ok = DiscreteDistribution::point_mass({0.0});
  EXPECT_THROW(divergence_discrete(bad, ok, LossSpec()), ContractError);
  EXPECT_THROW(divergence_discrete(ok, bad, LossSpec()), ContractError);
}

TEST(Divergence, StrictlyPositiveForDistinctDistributions) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    auto random_dist = [&] {
      DiscreteDistribution d;
      const std::size_t n = 1 + static_cast<std::size_t>(rng.next_u64() % 4);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d.support.push_back({rng.normal(), rng.normal()});
        d.probabilities.push_back(rng.uniform(0.1, 1.0));
        total += d.probabilities.back();
      }
      for (double& p : d.probabilities) p /= total;
      return d;
    };
    const auto p = random_dist(), q = random_dist();
    EXPECT_GT(divergence_discrete(q, p, LossSpec()), 1e-10);
    EXPECT_LT(std::abs(divergence_discrete(p, p, LossSpec())), 1e-12);
  }
}

TEST(EnergyScore, MonteCarloMatchesExactExpectation) {
  // E[ES] over y ~ P and K candidates from Q equals d(Q, P) + DIV(P,P)/2.
  const DiscreteDistribution q{{{0, 0}, {1, 0}, {0, 2}, {-1, -1}}, {0.1, 0.4, 0.3, 0.2}};
  const DiscreteDistribution p{{{0.5, 0.5}, {1, 1}}, {0.7, 0.3}};
  const LossSpec spec(1.0);
  const double exact = divergence_discrete(q, p, spec) + 0.5 * expected_loss(p, p, spec);

  Rng rng(2024);
  auto draw = [&rng](const DiscreteDistribution& d) {
    double u = rng.uniform(0.0, 1.0);
    std::size_t i = 0;
    while (i + 1 < d.probabilities.size() && u >= d.probabilities[i]) u -= d.probabilities[i++];
    return d.support[i];
  };
  const int reps = 20000;
  std::vector<double> values;
  values.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    CandidateSet set;
    for (int k = 0; k < 3; ++k) {
      set.candidates.push_back(Tensor::vector(draw(q)));
      set.noises.emplace_back();
    }
    values.push_back(energy_score_sample(set, Tensor::vector(draw(p)), spec));
  }
  const MeanSem m = mean_sem(values);
  EXPECT_LT(std::abs(m.mean - exact), 3.0 * m.sem) << m.mean << " vs " << exact;
}
