#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "disco/graph.hpp"
#include "disco/rng.hpp"
#include "disco/tensor.hpp"

namespace disco {

/// Dense generator layout: x -> encoder (relu) -> [h, z] -> decoder (relu) -> y (linear).
struct NetConfig {
  std::size_t x_dim = 1;
  std::size_t y_dim = 1;
  std::size_t z_dim = 8;
  std::vector<std::size_t> encoder_widths{64};
  std::vector<std::size_t> decoder_widths{64, 64};
  bool noise_enabled = true;

  /// Desk-scale default for the synthetic tasks.
  static NetConfig desk(std::size_t x_dim, std::size_t y_dim);
  /// z_dim 200 with two 1024-wide decoder layers.
  static NetConfig wide(std::size_t x_dim, std::size_t y_dim);

  /// Width of the noise block actually concatenated (0 when noise is off).
  std::size_t effective_z_dim() const { return noise_enabled ? z_dim : 0; }
  void validate() const;
  bool operator==(const NetConfig&) const = default;
};

struct LayerShape {
  std::size_t fan_in;
  std::size_t fan_out;
  bool relu;
  std::size_t weight_offset;
  std::size_t bias_offset;
};

/// Layer shapes in order; the noise block joins the input of the first
/// decoder-side layer.
std::vector<LayerShape> layer_shapes(const NetConfig& config);
std::size_t parameter_count(const NetConfig& config);

/// All weights and biases in one flat vector. Layer l's weight is a
/// row-major [fan_in, fan_out] block followed by its bias of length fan_out.
class NetworkParams {
 public:
  NetworkParams(NetConfig config, std::vector<double> values);

  const NetConfig& config() const { return config_; }
  std::span<const double> flat() const { return values_; }
  const std::vector<LayerShape>& layers() const { return layers_; }
  Tensor weight(std::size_t layer) const;
  Tensor bias(std::size_t layer) const;
  /// 1 for weight entries, 0 for biases; the L2 penalty only touches weights.
  std::vector<double> weight_mask() const;

  bool operator==(const NetworkParams& other) const {
    return config_ == other.config_ && values_ == other.values_;
  }

 private:
  NetConfig config_;
  std::vector<LayerShape> layers_;
  std::vector<double> values_;
};

/// Glorot-uniform weights, zero biases.
NetworkParams init_params(const NetConfig& config, std::uint64_t seed);

/// i.i.d. Uniform[-1, 1] coordinates.
Tensor sample_noise(std::size_t z_dim, Rng& rng);

/// Parameters bound into a graph: one leaf for the flat vector plus a view per
/// weight and bias.
struct BoundParams {
  NodeId flat;
  std::vector<NodeId> weights;
  std::vector<NodeId> biases;
};

BoundParams bind_params(Graph& g, const NetworkParams& params);
/// Binds a raw parameter node (e.g. the leaf handed out by grad_check).
BoundParams bind_params(Graph& g, NodeId flat, const NetConfig& config);

/// Batched forward pass: `x` is [m, x_dim], `z` is [m, z_dim] (ignored and
/// may be empty when noise is disabled). Returns the [m, y_dim] output node.
NodeId forward_batch(Graph& g, const NetConfig& config, const BoundParams& params,
                     const Tensor& x, const Tensor& z);

/// Single-example forward; x has x_dim entries, z has z_dim entries or is
/// empty when noise is disabled. Returns a [1, y_dim] node.
NodeId forward(Graph& g, const NetworkParams& params, const Tensor& x, const Tensor& z);

/// Graph-free evaluation of G(z, x).
Tensor generate(const NetworkParams& params, const Tensor& x, const Tensor& z);

/// K outputs for one input together with the noises that produced them.
struct CandidateSet {
  std::size_t input_index = 0;
  std::vector<Tensor> candidates;
  std::vector<Tensor> noises;

  std::size_t k() const { return candidates.size(); }
};

/// K forward passes with fresh noise. With noise disabled every candidate is
/// the same deterministic output and `noises` holds empty tensors.
CandidateSet sample_candidates(const NetworkParams& params, const Tensor& x, std::size_t k,
                               Rng& rng, std::size_t input_index = 0);

/// Versioned text format:
///   disco-params 1
///   x_dim <n> / y_dim <n> / z_dim <n> / noise <0|1>
///   encoder <w...> / decoder <w...>
///   values <count>
///   one value per line, shortest round-trip decimal
/// Header lines may be preceded by '#' comment lines.
void save_params(std::ostream& out, const NetworkParams& params);
NetworkParams load_params(std::istream& in);
void save_params(const std::string& path, const NetworkParams& params);
NetworkParams load_params(const std::string& path);

}  // namespace disco
