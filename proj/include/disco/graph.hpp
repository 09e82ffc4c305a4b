#pragma once

// Reverse-mode automatic differentiation over rank-1/rank-2 tensors.
//
// A Graph is an append-only tape. Every op appends one node whose value is
// computed eagerly; backward(root) walks the tape in reverse and fills a
// gradient for every node. Inputs always refer to earlier nodes, so the tape
// is acyclic by construction.

#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "disco/tensor.hpp"

namespace disco {

using NodeId = std::size_t;

/// Squared norms below this are treated as coincident points: the norm's
/// gradient there is the zero vector.
inline constexpr double kNormSingularity = 1e-24;

/// One weighted term c * Delta(lhs_row, rhs_row) of a pairwise norm sum.
struct PairTerm {
  std::size_t lhs_row;
  std::size_t rhs_row;
  double coef;
};

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kRelu,
  kConcat,
  kReduceSum,
  kScale,
  kView,
  kWeightedPowNorm,
  kPairwisePowNorm,
};

class Graph {
 public:
  NodeId leaf(Tensor value);

  const Tensor& value(NodeId id) const;
  /// Gradient of the last backward() root with respect to node `id`.
  /// Zero for nodes the root does not depend on.
  const Tensor& grad(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Populate gradients of the scalar node `root` with respect to every node.
  void backward(NodeId root);

 private:
  struct ConcatAttr {
    std::size_t axis;
  };
  struct ScaleAttr {
    double factor;
  };
  struct ViewAttr {
    std::size_t offset;
  };
  struct NormAttr {
    std::vector<double> weights;
    double beta;
    std::vector<PairTerm> terms;  // empty for the single-pair norm
  };
  using Attr = std::variant<std::monostate, ConcatAttr, ScaleAttr, ViewAttr, NormAttr>;

  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    Attr attr;
  };

  NodeId push(OpKind kind, std::vector<NodeId> inputs, Tensor value, Attr attr = {});
  void check_id(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;

  friend NodeId matmul(Graph&, NodeId, NodeId);
  friend NodeId add(Graph&, NodeId, NodeId);
  friend NodeId relu(Graph&, NodeId);
  friend NodeId concat(Graph&, NodeId, NodeId, std::size_t);
  friend NodeId reduce_sum(Graph&, NodeId);
  friend NodeId scale(Graph&, NodeId, double);
  friend NodeId view(Graph&, NodeId, std::size_t, std::vector<std::size_t>);
  friend NodeId weighted_pow_norm(Graph&, NodeId, NodeId, const Tensor&, double);
  friend NodeId pairwise_pow_norm(Graph&, NodeId, NodeId, std::vector<PairTerm>,
                                  const Tensor&, double);
};

/// [m,k] x [k,n] -> [m,n].
NodeId matmul(Graph& g, NodeId a, NodeId b);
/// Elementwise sum. `b` may also be a single row ([n] or [1,n]) broadcast over
/// the rows of an [m,n] `a` (bias addition).
NodeId add(Graph& g, NodeId a, NodeId b);
/// max(x, 0); the derivative at exactly 0 is 0.
NodeId relu(Graph& g, NodeId a);
/// Concatenate along `axis`. Rank-1 inputs only admit axis 0.
NodeId concat(Graph& g, NodeId a, NodeId b, std::size_t axis);
/// Sum of all entries, shape [1].
NodeId reduce_sum(Graph& g, NodeId a);
NodeId scale(Graph& g, NodeId a, double c);
/// Contiguous slice of `a`'s flat storage starting at `offset`, reshaped.
NodeId view(Graph& g, NodeId a, std::size_t offset, std::vector<std::size_t> shape);

/// (sum_i w_i (a_i - b_i)^2)^(beta/2) for equal-length a, b; shape [1].
/// Requires 0 < beta < 2 and non-negative, not-all-zero weights. An empty
/// weight tensor means all ones.
NodeId weighted_pow_norm(Graph& g, NodeId a, NodeId b, const Tensor& weights, double beta);

/// sum_t coef_t * (sum_i w_i (a[lhs_t, i] - b[rhs_t, i])^2)^(beta/2) over row
/// pairs of two matrices with equal column counts; shape [1]. `a` and `b` may
/// be the same node.
NodeId pairwise_pow_norm(Graph& g, NodeId a, NodeId b, std::vector<PairTerm> terms,
                         const Tensor& weights, double beta);

/// Builds a scalar objective from a leaf holding the parameter vector and
/// returns the root node.
using GraphBuilder = std::function<NodeId(Graph&, NodeId params)>;

/// Maximum over coordinates of |analytic - central| / max(1e-8, |analytic| + |central|)
/// where central differences use step `step`. Throws NumericError if the
/// objective is non-finite at any perturbed point.
double grad_check(const GraphBuilder& build, const Tensor& params, double step);

/// Same check against a caller-supplied analytic gradient; lets tests feed a
/// deliberately wrong gradient.
double grad_check_against(const GraphBuilder& build, const Tensor& params,
                          std::span<const double> analytic, double step);

/// Value and gradient of `build` at `params`.
std::pair<double, std::vector<double>> value_and_grad(const GraphBuilder& build,
                                                      const Tensor& params);

}  // namespace disco
