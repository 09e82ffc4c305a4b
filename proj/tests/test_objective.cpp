#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "disco/errors.hpp"
#include "disco/metrics.hpp"
#include "disco/objective.hpp"

using namespace disco;

namespace {

CandidateSet make_set(std::vector<std::vector<double>> rows, std::size_t index = 0) {
  CandidateSet s;
  s.input_index = index;
  for (auto& r : rows) {
    s.candidates.push_back(Tensor::vector(r));
    s.noises.emplace_back();
  }
  return s;
}

Example ex(std::vector<double> x, std::vector<double> y) { return {Tensor::vector(x), Tensor::vector(y)}; }

NetConfig two_layer() {
  NetConfig c;
  c.x_dim = 2;
  c.y_dim = 2;
  c.z_dim = 4;
  c.encoder_widths = {6};
  c.decoder_widths = {};
  return c;
}

Dataset random_batch(std::size_t n, std::size_t x_dim, std::size_t y_dim, Rng& rng) {
  Dataset batch;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(x_dim), y(y_dim);
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal();
    batch.push_back(ex(x, y));
  }
  return batch;
}

}  // namespace

TEST(ObjectiveConfig, Validation) {
  ObjectiveConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma = 1.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.gamma = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.gamma = 0.5;
  c.k = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.gamma = 0.0;
  EXPECT_NO_THROW(c.validate());
  c.k = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(DivPQ, Examples) {
  const LossSpec l1;
  const std::vector<Example> one{ex({0}, {0})};
  EXPECT_DOUBLE_EQ(div_pq_hat(one, std::vector{make_set({{1}, {3}})}, l1), 2.0);
  EXPECT_EQ(div_pq_hat(one, std::vector{make_set({{0}, {0}, {0}})}, l1), 0.0);
  const std::vector<Example> two{ex({0}, {0}), ex({0}, {0})};
  EXPECT_DOUBLE_EQ(div_pq_hat(two, std::vector{make_set({{2}, {-2}}), make_set({{4}, {4}}, 1)}, l1), 3.0);
}

TEST(DivPQ, Errors) {
  EXPECT_THROW(div_pq_hat({}, {}, LossSpec()), ContractError);
  const std::vector<Example> one{ex({0}, {0})};
  EXPECT_THROW(div_pq_hat(one, std::vector{make_set({{1}}), make_set({{1}})}, LossSpec()), ContractError);
  const std::vector<Example> two{ex({0}, {0}), ex({0}, {0})};
  EXPECT_THROW(div_pq_hat(two, std::vector{make_set({{1}}), make_set({{1}, {2}})}, LossSpec()), ContractError);
}

TEST(DivQQ, Examples) {
  const LossSpec l1;
  EXPECT_DOUBLE_EQ(div_qq_hat(std::vector{make_set({{1}, {3}})}, l1), 2.0);
  EXPECT_EQ(div_qq_hat(std::vector{make_set({{5}, {5}, {5}})}, l1), 0.0);
  EXPECT_DOUBLE_EQ(div_qq_hat(std::vector{make_set({{0}, {1}, {2}})}, l1), 4.0 / 3.0);
  EXPECT_THROW(div_qq_hat(std::vector{make_set({{1}})}, l1), EstimatorError);
}

TEST(Objective, Examples) {
  const std::vector<Example> one{ex({0}, {0})};
  const std::vector sets{make_set({{1}, {3}})};
  EXPECT_DOUBLE_EQ(disco_objective(one, sets, ObjectiveConfig{0.5, 2, LossSpec()}), 1.0);
  EXPECT_EQ(disco_objective(one, sets, ObjectiveConfig{0.0, 2, LossSpec()}), div_pq_hat(one, sets, LossSpec()));
  const std::vector same{make_set({{2}, {2}})};
  EXPECT_EQ(disco_objective(one, same, ObjectiveConfig{1.0, 2, LossSpec()}), div_pq_hat(one, same, LossSpec()));
}

TEST(Objective, WeightedFixture) {
  // Frozen from an independent numpy enumeration.
  const std::vector<Example> batch{ex({0}, {0, 0}), ex({0}, {1, -1})};
  const std::vector sets{make_set({{0.5, 0.2}, {-0.3, 1}, {2, 2}}), make_set({{1, 1}, {0, -1}, {1.5, -0.5}}, 1)};
  const LossSpec spec(0.7, {1, 4});
  EXPECT_NEAR(div_pq_hat(batch, sets, spec), 1.6571293553021247, 1e-12);
  EXPECT_NEAR(div_qq_hat(sets, spec), 2.110262212192146, 1e-12);
  EXPECT_NEAR(disco_objective(batch, sets, ObjectiveConfig{0.3, 3, spec}), 1.0240506916444807, 1e-12);
}

TEST(Objective, GammaZeroSkipsDiversityTerm) {
  const std::vector<Example> one{ex({0}, {0})};
  EXPECT_DOUBLE_EQ(disco_objective(one, std::vector{make_set({{2}})}, ObjectiveConfig{0.0, 1, LossSpec()}), 2.0);
}

TEST(Objective, EqualsMeanEnergyScoreAtHalf) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Example> batch;
    std::vector<CandidateSet> sets;
    std::vector<double> scores;
    for (std::size_t n = 0; n < 4; ++n) {
      batch.push_back(ex({0}, {rng.normal(), rng.normal()}));
      std::vector<std::vector<double>> rows;
      for (int k = 0; k < 5; ++k) rows.push_back({rng.normal(), rng.normal()});
      sets.push_back(make_set(rows, n));
      scores.push_back(energy_score_sample(sets.back(), batch.back().y, LossSpec()));
    }
    const double mean = mean_sem(scores).mean;
    EXPECT_NEAR(disco_objective(batch, sets, ObjectiveConfig{0.5, 5, LossSpec()}), mean, 1e-12);
    EXPECT_NEAR(probloss(sets, std::vector<Tensor>{batch[0].y, batch[1].y, batch[2].y, batch[3].y}).mean, mean,
                1e-12);
  }
}

TEST(Noises, ShapesAndDisabledNoise) {
  Rng rng(1);
  const NoiseBatch nb = draw_noises(two_layer(), 3, 4, rng);
  ASSERT_EQ(nb.size(), 3u);
  for (const auto& row : nb) {
    ASSERT_EQ(row.size(), 4u);
    for (const Tensor& z : row) EXPECT_EQ(z.size(), 4u);
  }
  NetConfig off = two_layer();
  off.noise_enabled = false;
  const NoiseBatch empty = draw_noises(off, 2, 3, rng);
  for (const auto& row : empty)
    for (const Tensor& z : row) EXPECT_EQ(z.size(), 0u);
}

TEST(ObjectiveNode, ValueMatchesGraphFreeObjective) {
  Rng rng(5);
  const NetConfig net = NetConfig::desk(2, 2);
  const NetworkParams params = init_params(net, 3);
  const Dataset batch = random_batch(5, 2, 2, rng);
  const NoiseBatch noises = draw_noises(net, 5, 4, rng);
  for (double gamma : {0.0, 0.3, 0.5, 1.0}) {
    const ObjectiveConfig config{gamma, 4, LossSpec(1.4, {2, 0.5})};
    Graph g;
    const BoundParams bound = bind_params(g, params);
    const double node = g.value(disco_objective_node(g, net, bound, batch, noises, config)).item();
    const auto sets = candidates_from_noises(params, batch, noises);
    EXPECT_NEAR(node, disco_objective(batch, sets, config), 1e-12) << "gamma " << gamma;
  }
}

TEST(ObjectiveNode, GradientMatchesDifferences) {
  const NetConfig net = two_layer();
  Rng rng(77);
  const Dataset batch = random_batch(4, 2, 2, rng);
  const NoiseBatch noises = draw_noises(net, 4, 3, rng);
  const NetworkParams params = init_params(net, 13);
  const Tensor theta = Tensor::vector(std::vector<double>(params.flat().begin(), params.flat().end()));
  for (double gamma : {0.0, 0.25, 0.5}) {
    for (double beta : {0.5, 1.0, 1.5, 1.9}) {
      const ObjectiveConfig config{gamma, 3, LossSpec(beta)};
      const GraphBuilder f = [&](Graph& g, NodeId p) {
        return disco_objective_node(g, net, bind_params(g, p, net), batch, noises, config);
      };
      EXPECT_LT(grad_check(f, theta, 1e-6), 1e-4) << "gamma " << gamma << " beta " << beta;
    }
  }
}

TEST(ObjectiveNode, WeightedLossGradientMatchesDifferences) {
  const NetConfig net = two_layer();
  Rng rng(78);
  const Dataset batch = random_batch(4, 2, 2, rng);
  const NoiseBatch noises = draw_noises(net, 4, 3, rng);
  const NetworkParams params = init_params(net, 14);
  const Tensor theta = Tensor::vector(std::vector<double>(params.flat().begin(), params.flat().end()));
  const ObjectiveConfig config{0.5, 3, LossSpec(1.0, {10.0, 0.1})};
  const GraphBuilder f = [&](Graph& g, NodeId p) {
    return disco_objective_node(g, net, bind_params(g, p, net), batch, noises, config);
  };
  EXPECT_LT(grad_check(f, theta, 1e-6), 1e-4);
}

TEST(ObjectiveNode, SingleCandidateRegression) {
  // gamma 0, K 1: mean Euclidean distance between G(z, x) and y.
  const NetConfig net = two_layer();
  Rng rng(79);
  const Dataset batch = random_batch(3, 2, 2, rng);
  const NoiseBatch noises = draw_noises(net, 3, 1, rng);
  const NetworkParams params = init_params(net, 15);
  const ObjectiveConfig config{0.0, 1, LossSpec()};
  Graph g;
  const BoundParams bound = bind_params(g, params);
  const NodeId root = disco_objective_node(g, net, bound, batch, noises, config);
  double expected = 0.0;
  for (std::size_t n = 0; n < 3; ++n) expected += delta(LossSpec(), generate(params, batch[n].x, noises[n][0]), batch[n].y);
  EXPECT_NEAR(g.value(root).item(), expected / 3.0, 1e-12);

  const Tensor theta = Tensor::vector(std::vector<double>(params.flat().begin(), params.flat().end()));
  const GraphBuilder f = [&](Graph& gg, NodeId p) {
    return disco_objective_node(gg, net, bind_params(gg, p, net), batch, noises, config);
  };
  EXPECT_LT(grad_check(f, theta, 1e-6), 1e-4);
}

TEST(ObjectiveNode, GammaPositiveNeedsTwoCandidates) {
  const NetConfig net = two_layer();
  Rng rng(80);
  const Dataset batch = random_batch(2, 2, 2, rng);
  const NoiseBatch noises = draw_noises(net, 2, 1, rng);
  Graph g;
  const BoundParams bound = bind_params(g, init_params(net, 0));
  EXPECT_THROW(disco_objective_node(g, net, bound, batch, noises, ObjectiveConfig{0.5, 1, LossSpec()}),
               ConfigError);
}

TEST(DivQQ, UnbiasedForLookupGenerator) {
  // Q uniform over five fixed outputs; each draw picks K = 3 of them with replacement.
  const std::vector<std::vector<double>> table{{0, 0}, {1, 0}, {0, 2}, {-1, 1}, {3, -2}};
  const LossSpec spec(1.0);
  double exact = 0.0;
  for (const auto& a : table)
    for (const auto& b : table) exact += spec(a, b);
  exact /= 25.0;

  Rng rng(123);
  std::vector<double> draws;
  for (int r = 0; r < 10000; ++r) {
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < 3; ++k) rows.push_back(table[rng.next_u64() % 5]);
    draws.push_back(div_qq_hat(std::vector{make_set(rows)}, spec));
  }
  const MeanSem m = mean_sem(draws);
  EXPECT_LT(std::abs(m.mean - exact), 3.0 * m.sem) << m.mean << " vs " << exact;
}
