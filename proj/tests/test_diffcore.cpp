#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "disco/errors.hpp"
#include "disco/graph.hpp"
#include "disco/rng.hpp"
#include "disco/tensor.hpp"

using namespace disco;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Values bounded away from zero so relu kinks stay outside the FD stencil.
std::vector<double> away_from_zero(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) {
    const double mag = rng.uniform(0.1, 1.0);
    x = rng.bernoulli(0.5) ? mag : -mag;
  }
  return v;
}

void expect_tensor(const Tensor& t, std::vector<std::size_t> shape, std::vector<double> data) {
  EXPECT_EQ(t.shape(), shape);
  ASSERT_EQ(t.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_DOUBLE_EQ(t[i], data[i]) << "entry " << i;
}

}  // namespace

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor({0}, {}), DimensionError);
  EXPECT_THROW(Tensor({1, 1, 1}, {1}), DimensionError);
  EXPECT_NO_THROW(Tensor({2, 3}, std::vector<double>(6, 0.0)));
}

TEST(Tensor, RejectsNonFinite) {
  EXPECT_THROW(Tensor::vector({1.0, std::nan("")}), NumericError);
  EXPECT_THROW(Tensor::vector({INFINITY}), NumericError);
}

TEST(Tensor, MatrixViewOfVector) {
  const Tensor v = Tensor::vector({1, 2, 3});
  EXPECT_EQ(v.rows(), 1u);
  EXPECT_EQ(v.cols(), 3u);
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(m.at(1, 0), 3.0);
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), DimensionError);
}

TEST(Matmul, HandCheckedProduct) {
  Graph g;
  const NodeId a = g.leaf(Tensor::matrix({{1, 2}, {3, 4}}));
  const NodeId b = g.leaf(Tensor::matrix({{1}, {1}}));
  expect_tensor(g.value(matmul(g, a, b)), {2, 1}, {3, 7});
}

TEST(Matmul, IdentityIsNeutral) {
  Graph g;
  const Tensor a = Tensor::matrix({{1.5, -2}, {0.25, 4}, {7, 8}});
  const NodeId na = g.leaf(a);
  const NodeId id = g.leaf(Tensor::matrix({{1, 0}, {0, 1}}));
  EXPECT_EQ(g.value(matmul(g, na, id)), a);
}

TEST(Matmul, ShapeMismatchNamesShapes) {
  Graph g;
  const NodeId a = g.leaf(Tensor::zeros({2, 3}));
  const NodeId b = g.leaf(Tensor::zeros({2, 3}));
  try {
    matmul(g, a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2, 3]"), std::string::npos) << e.what();
  }
}

TEST(Matmul, GradientOfSumIsTransposeBroadcast) {
  Graph g;
  const Tensor bval = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  const NodeId a = g.leaf(Tensor::matrix({{0.5, -1}, {2, 0.25}}));
  const NodeId b = g.leaf(bval);
  g.backward(reduce_sum(g, matmul(g, a, b)));
  // d/dA_ij sum(AB) = sum_n B_jn
  expect_tensor(g.grad(a), {2, 2}, {6, 15, 6, 15});
}

TEST(Ops, ReluSignCases) {
  Graph g;
  const NodeId x = g.leaf(Tensor::vector({-1, 0, 2}));
  const NodeId r = relu(g, x);
  expect_tensor(g.value(r), {3}, {0, 0, 2});
  g.backward(reduce_sum(g, r));
  expect_tensor(g.grad(x), {3}, {0, 0, 1});
}

TEST(Ops, ReluGradientMatchesDifferences) {
  const GraphBuilder f = [](Graph& g, NodeId p) { return reduce_sum(g, relu(g, p)); };
  const Tensor x = Tensor::vector({-1, 2});
  const auto [value, grad] = value_and_grad(f, x);
  EXPECT_DOUBLE_EQ(value, 2.0);
  EXPECT_EQ(grad, (std::vector<double>{0, 1}));
  EXPECT_LT(grad_check(f, x, 1e-6), 1e-9);
}

TEST(Ops, ConcatVectors) {
  Graph g;
  const NodeId a = g.leaf(Tensor::vector({1, 2}));
  const NodeId b = g.leaf(Tensor::vector({3}));
  expect_tensor(g.value(concat(g, a, b, 0)), {3}, {1, 2, 3});
}

TEST(Ops, ConcatMatricesBothAxes) {
  Graph g;
  const NodeId a = g.leaf(Tensor::matrix({{1, 2}, {3, 4}}));
  const NodeId b = g.leaf(Tensor::matrix({{5}, {6}}));
  expect_tensor(g.value(concat(g, a, b, 1)), {2, 3}, {1, 2, 5, 3, 4, 6});
  const NodeId c = g.leaf(Tensor::matrix({{7, 8}}));
  expect_tensor(g.value(concat(g, a, c, 0)), {3, 2}, {1, 2, 3, 4, 7, 8});
  EXPECT_THROW(concat(g, a, b, 0), DimensionError);
  EXPECT_THROW(concat(g, a, c, 2), DimensionError);
}

TEST(Ops, AddBroadcastsRow) {
  Graph g;
  const NodeId a = g.leaf(Tensor::matrix({{1, 2}, {3, 4}}));
  const NodeId b = g.leaf(Tensor::vector({10, 20}));
  const NodeId s = add(g, a, b);
  expect_tensor(g.value(s), {2, 2}, {11, 22, 13, 24});
  g.backward(reduce_sum(g, s));
  expect_tensor(g.grad(b), {2}, {2, 2});
  const NodeId bad = g.leaf(Tensor::vector({1, 2, 3}));
  EXPECT_THROW(add(g, a, bad), DimensionError);
}

TEST(Backward, ScaleOfScalar) {
  Graph g;
  const NodeId x = g.leaf(Tensor::scalar(2.0));
  g.backward(scale(g, x, 3.0));
  EXPECT_DOUBLE_EQ(g.grad(x).item(), 3.0);
}

TEST(Backward, DiamondSumsBothPaths) {
  Graph g;
  const NodeId x = g.leaf(Tensor::scalar(1.5));
  const NodeId root = add(g, scale(g, x, 2.0), scale(g, x, 5.0));
  g.backward(root);
  EXPECT_DOUBLE_EQ(g.grad(x).item(), 7.0);
}

TEST(Backward, NonScalarRootIsContractError) {
  Graph g;
  const NodeId x = g.leaf(Tensor::vector({1, 2}));
  EXPECT_THROW(g.backward(x), ContractError);
}

TEST(Backward, UnreachableNodesGetZeroGradient) {
  Graph g;
  const NodeId x = g.leaf(Tensor::scalar(1.0));
  const NodeId unrelated = g.leaf(Tensor::vector({4, 5}));
  g.backward(scale(g, x, 2.0));
  expect_tensor(g.grad(unrelated), {2}, {0, 0});
}

TEST(Backward, GradientBeforeBackwardThrows) {
  Graph g;
  const NodeId x = g.leaf(Tensor::scalar(1.0));
  EXPECT_THROW(g.grad(x), ContractError);
}

TEST(Backward, RepeatedCallsAreIdentical) {
  Graph g;
  const NodeId a = g.leaf(Tensor::matrix({{0.3, -0.7}, {1.1, 0.2}}));
  const NodeId b = g.leaf(Tensor::matrix({{0.5}, {-0.4}}));
  const NodeId root = reduce_sum(g, relu(g, matmul(g, a, b)));
  g.backward(root);
  const Tensor first = g.grad(a);
  const Tensor value = g.value(root);
  g.backward(root);
  EXPECT_EQ(g.grad(a), first);
  EXPECT_EQ(g.value(root), value);
}

TEST(Backward, GradientShapesMatchValues) {
  Graph g;
  const NodeId a = g.leaf(Tensor::matrix({{0.3, -0.7, 0.1}, {1.1, 0.2, -2}}));
  const NodeId w = g.leaf(Tensor::matrix({{0.5}, {-0.4}, {2}}));
  const NodeId h = relu(g, matmul(g, a, w));
  const NodeId root = reduce_sum(g, h);
  g.backward(root);
  for (NodeId id = 0; id < g.size(); ++id) EXPECT_EQ(g.grad(id).shape(), g.value(id).shape()) << "node " << id;
}

TEST(Backward, MatmulChainMatchesDifferences) {
  // sum(A x B) with A [3,2], B [2,4] packed into one parameter vector.
  const GraphBuilder f = [](Graph& g, NodeId p) {
    const NodeId a = view(g, p, 0, {3, 2});
    const NodeId b = view(g, p, 6, {2, 4});
    return reduce_sum(g, matmul(g, a, b));
  };
  EXPECT_LT(grad_check(f, Tensor::vector(random_values(14, 1)), 1e-6), 1e-6);
}

TEST(Backward, EveryOpMatchesDifferences) {
  // One graph exercising every op, with relu inputs kept away from 0.
  const GraphBuilder f = [](Graph& g, NodeId p) {
    const NodeId a = view(g, p, 0, {2, 3});
    const NodeId w = view(g, p, 6, {3, 2});
    const NodeId bias = view(g, p, 12, {2});
    const NodeId extra = view(g, p, 14, {2, 1});
    const NodeId h = add(g, matmul(g, a, w), bias);
    const NodeId c = concat(g, h, extra, 1);
    const NodeId r = relu(g, c);
    const NodeId n = weighted_pow_norm(g, view(g, r, 0, {3}), view(g, c, 3, {3}), Tensor::vector({1, 2, 0.5}), 1.3);
    return add(g, scale(g, reduce_sum(g, r), 0.7), n);
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<double> v = away_from_zero(16, seed);
    // Skip draws where a relu pre-activation lands near its kink.
    Graph g;
    const NodeId p = g.leaf(Tensor::vector(v));
    const NodeId pre = add(g, matmul(g, view(g, p, 0, {2, 3}), view(g, p, 6, {3, 2})), view(g, p, 12, {2}));
    bool near_kink = false;
    for (double x : g.value(pre).data()) near_kink = near_kink || std::abs(x) < 1e-4;
    if (near_kink) continue;
    EXPECT_LT(grad_check(f, Tensor::vector(v), 1e-6), 1e-5) << "seed " << seed;
  }
}

TEST(WeightedPowNorm, Values) {
  Graph g;
  const NodeId o = g.leaf(Tensor::vector({0, 0}));
  const NodeId b = g.leaf(Tensor::vector({3, 4}));
  EXPECT_DOUBLE_EQ(g.value(weighted_pow_norm(g, o, b, Tensor(), 1.0)).item(), 5.0);
  const NodeId ones = g.leaf(Tensor::vector({1, 1}));
  EXPECT_NEAR(g.value(weighted_pow_norm(g, o, ones, Tensor::vector({10, 0.1}), 1.0)).item(), 3.1780497164141406,
              1e-12);
  EXPECT_NEAR(g.value(weighted_pow_norm(g, o, b, Tensor(), 0.5)).item(), std::sqrt(5.0), 1e-12);
}

TEST(WeightedPowNorm, CoincidentPointsHaveZeroGradient) {
  Graph g;
  const NodeId a = g.leaf(Tensor::vector({1, -2}));
  const NodeId b = g.leaf(Tensor::vector({1, -2}));
  const NodeId n = weighted_pow_norm(g, a, b, Tensor(), 1.0);
  EXPECT_EQ(g.value(n).item(), 0.0);
  g.backward(n);
  expect_tensor(g.grad(a), {2}, {0, 0});
  expect_tensor(g.grad(b), {2}, {0, 0});
}

TEST(WeightedPowNorm, RejectsBadParameters) {
  Graph g;
  const NodeId a = g.leaf(Tensor::vector({0, 0}));
  const NodeId b = g.leaf(Tensor::vector({1, 1}));
  EXPECT_THROW(weighted_pow_norm(g, a, b, Tensor(), 0.0), ParameterError);
  EXPECT_THROW(weighted_pow_norm(g, a, b, Tensor(), 2.0), ParameterError);
  EXPECT_THROW(weighted_pow_norm(g, a, b, Tensor::vector({1, -1}), 1.0), ParameterError);
  EXPECT_THROW(weighted_pow_norm(g, a, b, Tensor::vector({0, 0}), 1.0), ParameterError);
  EXPECT_THROW(weighted_pow_norm(g, a, b, Tensor::vector({1, 1, 1}), 1.0), DimensionError);
  const NodeId c = g.leaf(Tensor::vector({1, 1, 1}));
  EXPECT_THROW(weighted_pow_norm(g, a, c, Tensor(), 1.0), DimensionError);
}

TEST(WeightedPowNorm, AnalyticGradientFormula) {
  // d/db = beta * s^(beta/2 - 1) * w * (b - a)
  Graph g;
  const NodeId a = g.leaf(Tensor::vector({0.5, -1}));
  const NodeId b = g.leaf(Tensor::vector({2, 1}));
  const double beta = 1.5;
  g.backward(weighted_pow_norm(g, a, b, Tensor::vector({2, 0.5}), beta));
  const double s = 2 * 1.5 * 1.5 + 0.5 * 2 * 2;
  const double c = beta * std::pow(s, beta / 2 - 1);
  EXPECT_NEAR(g.grad(b)[0], c * 2 * 1.5, 1e-12);
  EXPECT_NEAR(g.grad(b)[1], c * 0.5 * 2, 1e-12);
  EXPECT_NEAR(g.grad(a)[0], -c * 2 * 1.5, 1e-12);
}

TEST(WeightedPowNorm, GradientMatchesDifferencesAcrossBeta) {
  for (double beta : {0.5, 1.0, 1.5, 1.9}) {
    const GraphBuilder f = [beta](Graph& g, NodeId p) {
      return weighted_pow_norm(g, view(g, p, 0, {3}), view(g, p, 3, {3}), Tensor::vector({1, 3, 0.2}), beta);
    };
    EXPECT_LT(grad_check(f, Tensor::vector(random_values(6, 7)), 1e-6), 1e-5) << "beta " << beta;
  }
}

TEST(PairwisePowNorm, MatchesSumOfSingleNorms) {
  const Tensor m = Tensor::matrix({{0, 0}, {3, 4}, {1, 1}});
  Graph g;
  const NodeId a = g.leaf(m);
  const std::vector<PairTerm> terms{{0, 1, 0.5}, {1, 2, 2.0}, {2, 0, -1.0}};
  const double got = g.value(pairwise_pow_norm(g, a, a, terms, Tensor(), 1.0)).item();
  const double want = 0.5 * 5.0 + 2.0 * std::sqrt(4.0 + 9.0) - std::sqrt(2.0);
  EXPECT_NEAR(got, want, 1e-12);
}

TEST(PairwisePowNorm, SelfPairsGradientMatchesDifferences) {
  const GraphBuilder f = [](Graph& g, NodeId p) {
    const NodeId m = view(g, p, 0, {3, 2});
    const NodeId y = view(g, p, 6, {1, 2});
    std::vector<PairTerm> spread;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        if (i != j) spread.push_back({i, j, -0.25});
    const NodeId fit = pairwise_pow_norm(g, y, m, {{0, 0, 1.0}, {0, 1, 1.0}, {0, 2, 1.0}}, Tensor(), 1.2);
    return add(g, fit, pairwise_pow_norm(g, m, m, spread, Tensor::vector({2, 0.5}), 1.2));
  };
  EXPECT_LT(grad_check(f, Tensor::vector(random_values(8, 3)), 1e-6), 1e-5);
}

TEST(GradCheck, QuadraticIsExact) {
  const GraphBuilder f = [](Graph& g, NodeId p) {
    const std::size_t n = g.value(p).size();
    const NodeId col = view(g, p, 0, {n, 1});
    const NodeId row = view(g, p, 0, {1, n});
    return reduce_sum(g, matmul(g, row, col));
  };
  EXPECT_LT(grad_check(f, Tensor::vector(random_values(5, 11)), 1e-6), 1e-9);
}

TEST(GradCheck, ConstantHasZeroError) {
  const GraphBuilder f = [](Graph& g, NodeId) { return g.leaf(Tensor::scalar(4.0)); };
  EXPECT_EQ(grad_check(f, Tensor::vector({1, 2, 3}), 1e-6), 0.0);
}

TEST(GradCheck, WrongAnalyticGradientIsDetected) {
  const GraphBuilder f = [](Graph& g, NodeId p) { return scale(g, reduce_sum(g, p), 2.0); };
  const std::vector<double> wrong{2.0, 2.1};
  EXPECT_GT(grad_check_against(f, Tensor::vector({1, 1}), wrong, 1e-6), 1e-3);
}

TEST(GradCheck, NonFiniteObjectiveIsNumericError) {
  // The forward step p + h overflows the product.
  const GraphBuilder f = [](Graph& g, NodeId p) {
    const NodeId big = g.leaf(Tensor::matrix({{1.7976e308}}));
    return reduce_sum(g, matmul(g, view(g, p, 0, {1, 1}), big));
  };
  EXPECT_THROW(grad_check(f, Tensor::vector({1.0}), 1e-3), NumericError);
}

TEST(Graph, DeterministicConstruction) {
  auto run = [] {
    Graph g;
    const NodeId a = g.leaf(Tensor::matrix({{0.1, 0.2}, {0.3, 0.4}}));
    const NodeId b = g.leaf(Tensor::matrix({{1.7}, {-0.3}}));
    const NodeId root = weighted_pow_norm(g, view(g, matmul(g, a, b), 0, {2}), g.leaf(Tensor::vector({1, 1})),
                                          Tensor(), 1.5);
    g.backward(root);
    return std::make_pair(g.value(root), g.grad(a));
  };
  EXPECT_EQ(run(), run());
}
