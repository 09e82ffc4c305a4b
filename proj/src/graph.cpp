#include "disco/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "disco/errors.hpp"

namespace disco {

namespace {

std::vector<double> norm_weights(const Tensor& weights, std::size_t dim) {
  if (weights.size() == 0) return std::vector<double>(dim, 1.0);
  if (weights.size() != dim) {
    throw DimensionError("norm weights have length " + std::to_string(weights.size()) +
                         ", operands have length " + std::to_string(dim));
  }
  bool any_positive = false;
  for (double w : weights.data()) {
    if (w < 0.0) throw ParameterError("norm weights must be non-negative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw ParameterError("norm weights must not all be zero");
  return {weights.data().begin(), weights.data().end()};
}

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 2.0)) {
    throw ParameterError("beta must lie strictly between 0 and 2, got " + std::to_string(beta));
  }
}

double squared_distance(const double* a, const double* b, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = a[i] - b[i];
    s += w[i] * d * d;
  }
  return s;
}

// Adds coef * d/da of the norm to ga and its negation to gb.
void accumulate_norm_grad(const double* a, const double* b, const std::vector<double>& w,
                          double beta, double coef, double* ga, double* gb) {
  const double s = squared_distance(a, b, w);
  if (s < kNormSingularity) return;
  const double factor = coef * beta * std::pow(s, 0.5 * beta - 1.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double g = factor * w[i] * (a[i] - b[i]);
    ga[i] += g;
    gb[i] -= g;
  }
}

void matmul_into(const double* a, const double* b, double* out, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

}  // namespace

NodeId Graph::push(OpKind kind, std::vector<NodeId> inputs, Tensor value, Attr attr) {
  nodes_.push_back(Node{kind, std::move(inputs), std::move(value), std::move(attr)});
  grads_.clear();
  return nodes_.size() - 1;
}

void Graph::check_id(NodeId id) const {
  if (id >= nodes_.size()) {
    throw ContractError("node id " + std::to_string(id) + " does not exist (graph has " +
                        std::to_string(nodes_.size()) + " nodes)");
  }
}

NodeId Graph::leaf(Tensor value) { return push(OpKind::kLeaf, {}, std::move(value)); }

const Tensor& Graph::value(NodeId id) const {
  check_id(id);
  return nodes_[id].value;
}

const Tensor& Graph::grad(NodeId id) const {
  check_id(id);
  if (grads_.size() != nodes_.size()) throw ContractError("grad() requested before backward()");
  return grads_[id];
}

OpKind Graph::kind(NodeId id) const {
  check_id(id);
  return nodes_[id].kind;
}

NodeId matmul(Graph& g, NodeId a, NodeId b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw DimensionError("matmul of " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  std::vector<double> out(m * n, 0.0);
  matmul_into(av.data().data(), bv.data().data(), out.data(), m, k, n);
  return g.push(OpKind::kMatmul, {a, b}, Tensor({m, n}, std::move(out)));
}

NodeId add(Graph& g, NodeId a, NodeId b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  const bool same = av.shape() == bv.shape();
  const bool row_broadcast = av.rank() == 2 && bv.rows() == 1 && bv.cols() == av.cols();
  if (!same && !row_broadcast) {
    throw DimensionError("add of " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  std::vector<double> out(av.data().begin(), av.data().end());
  const std::size_t n = bv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
  return g.push(OpKind::kAdd, {a, b}, Tensor(av.shape(), std::move(out)));
}

NodeId relu(Graph& g, NodeId a) {
  const Tensor& av = g.value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return g.push(OpKind::kRelu, {a}, Tensor(av.shape(), std::move(out)));
}

NodeId concat(Graph& g, NodeId a, NodeId b, std::size_t axis) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  const auto mismatch = [&] {
    return DimensionError("concat of " + shape_string(av.shape()) + " and " +
                          shape_string(bv.shape()) + " along axis " + std::to_string(axis));
  };
  if (av.rank() != bv.rank() || axis >= av.rank()) throw mismatch();
  std::vector<double> out;
  out.reserve(av.size() + bv.size());
  if (axis == 0) {
    if (av.rank() == 2 && av.cols() != bv.cols()) throw mismatch();
    out.insert(out.end(), av.data().begin(), av.data().end());
    out.insert(out.end(), bv.data().begin(), bv.data().end());
    std::vector<std::size_t> shape = av.shape();
    shape[0] += bv.shape()[0];
    return g.push(OpKind::kConcat, {a, b}, Tensor(std::move(shape), std::move(out)),
                  Graph::ConcatAttr{axis});
  }
  if (av.rows() != bv.rows()) throw mismatch();
  for (std::size_t r = 0; r < av.rows(); ++r) {
    const auto arow = av.data().subspan(r * av.cols(), av.cols());
    const auto brow = bv.data().subspan(r * bv.cols(), bv.cols());
    out.insert(out.end(), arow.begin(), arow.end());
    out.insert(out.end(), brow.begin(), brow.end());
  }
  return g.push(OpKind::kConcat, {a, b},
                Tensor({av.rows(), av.cols() + bv.cols()}, std::move(out)), Graph::ConcatAttr{axis});
}

NodeId reduce_sum(Graph& g, NodeId a) {
  const Tensor& av = g.value(a);
  double s = 0.0;
  for (double v : av.data()) s += v;
  return g.push(OpKind::kReduceSum, {a}, Tensor::scalar(s));
}

NodeId scale(Graph& g, NodeId a, double c) {
  const Tensor& av = g.value(a);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * av[i];
  return g.push(OpKind::kScale, {a}, Tensor(av.shape(), std::move(out)), Graph::ScaleAttr{c});
}

NodeId view(Graph& g, NodeId a, std::size_t offset, std::vector<std::size_t> shape) {
  const Tensor& av = g.value(a);
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (offset + n > av.size()) {
    throw DimensionError("view of " + std::to_string(n) + " entries at offset " +
                         std::to_string(offset) + " exceeds tensor " + shape_string(av.shape()));
  }
  const auto slice = av.data().subspan(offset, n);
  return g.push(OpKind::kView, {a},
                Tensor(std::move(shape), std::vector<double>(slice.begin(), slice.end())),
                Graph::ViewAttr{offset});
}

NodeId weighted_pow_norm(Graph& g, NodeId a, NodeId b, const Tensor& weights, double beta) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.size() != bv.size()) {
    throw DimensionError("norm operands " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()) + " differ in length");
  }
  check_beta(beta);
  std::vector<double> w = norm_weights(weights, av.size());
  const double s = squared_distance(av.data().data(), bv.data().data(), w);
  return g.push(OpKind::kWeightedPowNorm, {a, b}, Tensor::scalar(std::pow(s, 0.5 * beta)),
                Graph::NormAttr{std::move(w), beta, {}});
}

NodeId pairwise_pow_norm(Graph& g, NodeId a, NodeId b, std::vector<PairTerm> terms,
                         const Tensor& weights, double beta) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.cols() != bv.cols()) {
    throw DimensionError("pairwise norm of " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()) + ": column counts differ");
  }
  check_beta(beta);
  std::vector<double> w = norm_weights(weights, av.cols());
  const std::size_t d = av.cols();
  double total = 0.0;
  for (const PairTerm& t : terms) {
    if (t.lhs_row >= av.rows() || t.rhs_row >= bv.rows()) {
      throw DimensionError("pairwise norm term references a row outside the operands");
    }
    const double s = squared_distance(av.data().data() + t.lhs_row * d,
                                      bv.data().data() + t.rhs_row * d, w);
    total += t.coef * std::pow(s, 0.5 * beta);
  }
  return g.push(OpKind::kPairwisePowNorm, {a, b}, Tensor::scalar(total),
                Graph::NormAttr{std::move(w), beta, std::move(terms)});
}

void Graph::backward(NodeId root) {
  check_id(root);
  if (nodes_[root].value.size() != 1) {
    throw ContractError("backward() needs a scalar root, got shape " +
                        shape_string(nodes_[root].value.shape()));
  }
  std::vector<std::vector<double>> acc(nodes_.size());
  for (std::size_t i = 0; i <= root; ++i) acc[i].assign(nodes_[i].value.size(), 0.0);
  acc[root][0] = 1.0;

  for (std::size_t id = root + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    const std::vector<double>& gy = acc[id];
    if (node.kind == OpKind::kLeaf) continue;
    if (std::all_of(gy.begin(), gy.end(), [](double v) { return v == 0.0; })) continue;

    switch (node.kind) {
      case OpKind::kLeaf:
        break;
      case OpKind::kMatmul: {
        const Tensor& av = nodes_[node.inputs[0]].value;
        const Tensor& bv = nodes_[node.inputs[1]].value;
        const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
        std::vector<double>& ga = acc[node.inputs[0]];
        std::vector<double>& gb = acc[node.inputs[1]];
        // dA = dY * B^T
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += gy[i * n + j] * bv[p * n + j];
            ga[i * k + p] += s;
          }
        }
        // dB = A^T * dY
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * gy[i * n + j];
          }
        }
        break;
      }
      case OpKind::kAdd: {
        std::vector<double>& ga = acc[node.inputs[0]];
        std::vector<double>& gb = acc[node.inputs[1]];
        const std::size_t nb = gb.size();
        for (std::size_t i = 0; i < gy.size(); ++i) {
          ga[i] += gy[i];
          gb[i % nb] += gy[i];
        }
        break;
      }
      case OpKind::kRelu: {
        const Tensor& av = nodes_[node.inputs[0]].value;
        std::vector<double>& ga = acc[node.inputs[0]];
        for (std::size_t i = 0; i < gy.size(); ++i) {
          if (av[i] > 0.0) ga[i] += gy[i];
        }
        break;
      }
      case OpKind::kConcat: {
        const Tensor& av = nodes_[node.inputs[0]].value;
        const Tensor& bv = nodes_[node.inputs[1]].value;
        std::vector<double>& ga = acc[node.inputs[0]];
        std::vector<double>& gb = acc[node.inputs[1]];
        if (std::get<ConcatAttr>(node.attr).axis == 0) {
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[ga.size() + i];
        } else {
          const std::size_t ca = av.cols(), cb = bv.cols();
          for (std::size_t r = 0; r < av.rows(); ++r) {
            const double* row = gy.data() + r * (ca + cb);
            for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] += row[c];
            for (std::size_t c = 0; c < cb; ++c) gb[r * cb + c] += row[ca + c];
          }
        }
        break;
      }
      case OpKind::kReduceSum: {
        std::vector<double>& ga = acc[node.inputs[0]];
        for (double& v : ga) v += gy[0];
        break;
      }
      case OpKind::kScale: {
        const double c = std::get<ScaleAttr>(node.attr).factor;
        std::vector<double>& ga = acc[node.inputs[0]];
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += c * gy[i];
        break;
      }
      case OpKind::kView: {
        const std::size_t offset = std::get<ViewAttr>(node.attr).offset;
        std::vector<double>& ga = acc[node.inputs[0]];
        for (std::size_t i = 0; i < gy.size(); ++i) ga[offset + i] += gy[i];
        break;
      }
      case OpKind::kWeightedPowNorm:
      case OpKind::kPairwisePowNorm: {
        const NormAttr& attr = std::get<NormAttr>(node.attr);
        const NodeId ia = node.inputs[0], ib = node.inputs[1];
        const double* a = nodes_[ia].value.data().data();
        const double* b = nodes_[ib].value.data().data();
        const std::size_t d = attr.weights.size();
        // Separate buffers so that a == b accumulates both contributions.
        std::vector<double> ga(acc[ia].size(), 0.0), gb(acc[ib].size(), 0.0);
        if (node.kind == OpKind::kWeightedPowNorm) {
          accumulate_norm_grad(a, b, attr.weights, attr.beta, gy[0], ga.data(), gb.data());
        } else {
          for (const PairTerm& t : attr.terms) {
            accumulate_norm_grad(a + t.lhs_row * d, b + t.rhs_row * d, attr.weights, attr.beta,
                                 gy[0] * t.coef, ga.data() + t.lhs_row * d,
                                 gb.data() + t.rhs_row * d);
          }
        }
        for (std::size_t i = 0; i < ga.size(); ++i) acc[ia][i] += ga[i];
        for (std::size_t i = 0; i < gb.size(); ++i) acc[ib][i] += gb[i];
        break;
      }
    }
  }

  grads_.clear();
  grads_.reserve(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (acc[i].empty()) {
      grads_.push_back(Tensor::zeros(nodes_[i].value.shape()));
    } else {
      grads_.emplace_back(nodes_[i].value.shape(), std::move(acc[i]));
    }
  }
}

std::pair<double, std::vector<double>> value_and_grad(const GraphBuilder& build,
                                                      const Tensor& params) {
  Graph g;
  const NodeId p = g.leaf(params);
  const NodeId root = build(g, p);
  g.backward(root);
  const auto grad = g.grad(p).data();
  return {g.value(root).item(), std::vector<double>(grad.begin(), grad.end())};
}

namespace {

double evaluate(const GraphBuilder& build, const std::vector<double>& params,
                const std::vector<std::size_t>& shape) {
  Graph g;
  const NodeId p = g.leaf(Tensor(shape, params));
  const double v = g.value(build(g, p)).item();
  if (!std::isfinite(v)) throw NumericError("objective is not finite at a perturbed point");
  return v;
}

}  // namespace

double grad_check_against(const GraphBuilder& build, const Tensor& params,
                          std::span<const double> analytic, double step) {
  if (!(step > 0.0)) throw ParameterError("grad_check step must be positive");
  if (analytic.size() != params.size()) {
    throw DimensionError("analytic gradient length differs from the parameter count");
  }
  std::vector<double> x(params.data().begin(), params.data().end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = evaluate(build, x, params.shape());
    x[i] = saved - step;
    const double down = evaluate(build, x, params.shape());
    x[i] = saved;
    const double central = (up - down) / (2.0 * step);
    const double err = std::abs(analytic[i] - central) /
                       std::max(1e-8, std::abs(analytic[i]) + std::abs(central));
    worst = std::max(worst, err);
  }
  return worst;
}

double grad_check(const GraphBuilder& build, const Tensor& params, double step) {
  const auto [value, analytic] = value_and_grad(build, params);
  if (!std::isfinite(value)) throw NumericError("objective is not finite at the base point");
  return grad_check_against(build, params, analytic, step);
}

}  // namespace disco
