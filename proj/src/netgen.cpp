#include "disco/netgen.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "disco/errors.hpp"

namespace disco {

NetConfig NetConfig::desk(std::size_t x_dim, std::size_t y_dim) {
  NetConfig c;
  c.x_dim = x_dim;
  c.y_dim = y_dim;
  return c;
}

NetConfig NetConfig::wide(std::size_t x_dim, std::size_t y_dim) {
  NetConfig c;
  c.x_dim = x_dim;
  c.y_dim = y_dim;
  c.z_dim = 200;
  c.encoder_widths = {};
  c.decoder_widths = {1024, 1024};
  return c;
}

void NetConfig::validate() const {
  if (x_dim == 0 || y_dim == 0) throw ConfigError("x_dim and y_dim must be positive");
  if (noise_enabled && z_dim == 0) throw ConfigError("z_dim must be positive when noise is enabled");
  for (std::size_t w : encoder_widths) {
    if (w == 0) throw ConfigError("encoder widths must be positive");
  }
  for (std::size_t w : decoder_widths) {
    if (w == 0) throw ConfigError("decoder widths must be positive");
  }
}

std::vector<LayerShape> layer_shapes(const NetConfig& config) {
  config.validate();
  std::vector<LayerShape> layers;
  std::size_t offset = 0;
  const auto push = [&](std::size_t in, std::size_t out, bool relu) {
    layers.push_back({in, out, relu, offset, offset + in * out});
    offset += in * out + out;
  };
  std::size_t width = config.x_dim;
  for (std::size_t w : config.encoder_widths) {
    push(width, w, true);
    width = w;
  }
  width += config.effective_z_dim();
  for (std::size_t w : config.decoder_widths) {
    push(width, w, true);
    width = w;
  }
  push(width, config.y_dim, false);
  return layers;
}

std::size_t parameter_count(const NetConfig& config) {
  const auto layers = layer_shapes(config);
  const LayerShape& last = layers.back();
  return last.bias_offset + last.fan_out;
}

NetworkParams::NetworkParams(NetConfig config, std::vector<double> values)
    : config_(std::move(config)), layers_(layer_shapes(config_)), values_(std::move(values)) {
  if (values_.size() != parameter_count(config_)) {
    throw DimensionError(fmt::format("network needs {} parameters, got {}",
                                     parameter_count(config_), values_.size()));
  }
}

Tensor NetworkParams::weight(std::size_t layer) const {
  const LayerShape& s = layers_.at(layer);
  const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(s.weight_offset);
  return Tensor({s.fan_in, s.fan_out},
                std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(s.fan_in * s.fan_out)));
}

Tensor NetworkParams::bias(std::size_t layer) const {
  const LayerShape& s = layers_.at(layer);
  const auto begin = values_.begin() + static_cast<std::ptrdiff_t>(s.bias_offset);
  return Tensor({s.fan_out}, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(s.fan_out)));
}

std::vector<double> NetworkParams::weight_mask() const {
  std::vector<double> mask(values_.size(), 0.0);
  for (const LayerShape& s : layers_) {
    for (std::size_t i = 0; i < s.fan_in * s.fan_out; ++i) mask[s.weight_offset + i] = 1.0;
  }
  return mask;
}

NetworkParams init_params(const NetConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const auto layers = layer_shapes(config);
  std::vector<double> values(parameter_count(config), 0.0);
  for (const LayerShape& s : layers) {
    const double a = std::sqrt(6.0 / static_cast<double>(s.fan_in + s.fan_out));
    for (std::size_t i = 0; i < s.fan_in * s.fan_out; ++i) {
      values[s.weight_offset + i] = rng.uniform(-a, a);
    }
  }
  return NetworkParams(config, std::move(values));
}

Tensor sample_noise(std::size_t z_dim, Rng& rng) {
  if (z_dim == 0) throw ParameterError("noise dimension must be positive");
  std::vector<double> z(z_dim);
  for (double& v : z) v = rng.uniform(-1.0, 1.0);
  return Tensor::vector(std::move(z));
}

BoundParams bind_params(Graph& g, NodeId flat, const NetConfig& config) {
  const auto layers = layer_shapes(config);
  if (g.value(flat).size() != parameter_count(config)) {
    throw DimensionError(fmt::format("parameter node has {} entries, network needs {}",
                                     g.value(flat).size(), parameter_count(config)));
  }
  BoundParams bound{flat, {}, {}};
  for (const LayerShape& s : layers) {
    bound.weights.push_back(view(g, flat, s.weight_offset, {s.fan_in, s.fan_out}));
    bound.biases.push_back(view(g, flat, s.bias_offset, {s.fan_out}));
  }
  return bound;
}

BoundParams bind_params(Graph& g, const NetworkParams& params) {
  const NodeId flat = g.leaf(Tensor::vector(std::vector<double>(params.flat().begin(), params.flat().end())));
  return bind_params(g, flat, params.config());
}

NodeId forward_batch(Graph& g, const NetConfig& config, const BoundParams& params,
                     const Tensor& x, const Tensor& z) {
  if (x.rank() != 2 || x.cols() != config.x_dim) {
    throw DimensionError(fmt::format("forward input has shape {}, expected [m, {}]",
                                     shape_string(x.shape()), config.x_dim));
  }
  if (config.noise_enabled &&
      (z.rank() != 2 || z.cols() != config.z_dim || z.rows() != x.rows())) {
    throw DimensionError(fmt::format("forward noise has shape {}, expected [{}, {}]",
                                     shape_string(z.shape()), x.rows(), config.z_dim));
  }
  const std::size_t n_encoder = config.encoder_widths.size();
  NodeId h = g.leaf(x);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (l == n_encoder && config.noise_enabled) h = concat(g, h, g.leaf(z), 1);
    h = add(g, matmul(g, h, params.weights[l]), params.biases[l]);
    if (l + 1 < params.weights.size()) h = relu(g, h);
  }
  return h;
}

namespace {

Tensor as_row(const Tensor& v) { return Tensor({1, v.size()}, {v.data().begin(), v.data().end()}); }

}  // namespace

NodeId forward(Graph& g, const NetworkParams& params, const Tensor& x, const Tensor& z) {
  const NetConfig& config = params.config();
  if (x.size() != config.x_dim) {
    throw DimensionError(fmt::format("x has {} entries, expected {}", x.size(), config.x_dim));
  }
  if (config.noise_enabled && z.size() != config.z_dim) {
    throw DimensionError(fmt::format("z has {} entries, expected {}", z.size(), config.z_dim));
  }
  const BoundParams bound = bind_params(g, params);
  return forward_batch(g, config, bound, as_row(x), config.noise_enabled ? as_row(z) : Tensor());
}

Tensor generate(const NetworkParams& params, const Tensor& x, const Tensor& z) {
  Graph g;
  const Tensor& y = g.value(forward(g, params, x, z));
  return Tensor::vector({y.data().begin(), y.data().end()});
}

CandidateSet sample_candidates(const NetworkParams& params, const Tensor& x, std::size_t k,
                               Rng& rng, std::size_t input_index) {
  if (k == 0) throw ContractError("sample_candidates needs K >= 1");
  const NetConfig& config = params.config();
  CandidateSet set;
  set.input_index = input_index;
  for (std::size_t i = 0; i < k; ++i) {
    set.noises.push_back(config.noise_enabled ? sample_noise(config.z_dim, rng) : Tensor());
  }
  // One batched pass; rows are independent so this equals K single passes.
  std::vector<double> xs, zs;
  for (std::size_t i = 0; i < k; ++i) {
    xs.insert(xs.end(), x.data().begin(), x.data().end());
    if (config.noise_enabled) zs.insert(zs.end(), set.noises[i].data().begin(), set.noises[i].data().end());
  }
  if (x.size() != config.x_dim) {
    throw DimensionError(fmt::format("x has {} entries, expected {}", x.size(), config.x_dim));
  }
  Graph g;
  const BoundParams bound = bind_params(g, params);
  const Tensor& y = g.value(forward_batch(
      g, config, bound, Tensor({k, config.x_dim}, std::move(xs)),
      config.noise_enabled ? Tensor({k, config.z_dim}, std::move(zs)) : Tensor()));
  for (std::size_t i = 0; i < k; ++i) {
    const auto row = y.data().subspan(i * config.y_dim, config.y_dim);
    set.candidates.push_back(Tensor::vector({row.begin(), row.end()}));
  }
  return set;
}

namespace {

constexpr const char* kParamsMagic = "disco-params";
constexpr int kParamsVersion = 1;

std::string join_widths(const std::vector<std::size_t>& widths) {
  std::string out;
  for (std::size_t w : widths) out += fmt::format(" {}", w);
  return out;
}

std::vector<std::size_t> read_widths(std::istringstream& line) {
  std::vector<std::size_t> widths;
  std::size_t w;
  while (line >> w) widths.push_back(w);
  return widths;
}

std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  do {
    if (!std::getline(in, line)) throw ParseError("parameter file ends before '" + key + "'");
  } while (!line.empty() && line[0] == '#');
  if (line.rfind(key, 0) != 0) {
    throw SchemaError("parameter file: expected '" + key + "', found '" + line + "'");
  }
  return line.substr(key.size());
}

std::size_t parse_size(const std::string& text, const std::string& key) {
  std::istringstream s(text);
  std::size_t v;
  if (!(s >> v)) throw ParseError("parameter file: bad value for '" + key + "'");
  return v;
}

}  // namespace

void save_params(std::ostream& out, const NetworkParams& params) {
  const NetConfig& c = params.config();
  out << kParamsMagic << ' ' << kParamsVersion << '\n';
  out << fmt::format("x_dim {}\ny_dim {}\nz_dim {}\nnoise {}\n", c.x_dim, c.y_dim, c.z_dim,
                     c.noise_enabled ? 1 : 0);
  out << "encoder" << join_widths(c.encoder_widths) << '\n';
  out << "decoder" << join_widths(c.decoder_widths) << '\n';
  out << "values " << params.flat().size() << '\n';
  for (double v : params.flat()) out << fmt::format("{}\n", v);
}

NetworkParams load_params(std::istream& in) {
  const std::string version = expect_line(in, kParamsMagic);
  if (parse_size(version, kParamsMagic) != kParamsVersion) {
    throw SchemaError("unsupported parameter file version" + version);
  }
  NetConfig c;
  c.x_dim = parse_size(expect_line(in, "x_dim "), "x_dim");
  c.y_dim = parse_size(expect_line(in, "y_dim "), "y_dim");
  c.z_dim = parse_size(expect_line(in, "z_dim "), "z_dim");
  c.noise_enabled = parse_size(expect_line(in, "noise "), "noise") != 0;
  std::istringstream enc(expect_line(in, "encoder"));
  c.encoder_widths = read_widths(enc);
  std::istringstream dec(expect_line(in, "decoder"));
  c.decoder_widths = read_widths(dec);
  const std::size_t count = parse_size(expect_line(in, "values "), "values");
  std::vector<double> values;
  values.reserve(count);
  std::string line;
  while (values.size() < count && std::getline(in, line)) {
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0') {
      throw ParseError("parameter file: bad value '" + line + "'");
    }
    values.push_back(v);
  }
  if (values.size() != count) throw ParseError("parameter file truncated");
  return NetworkParams(c, std::move(values));
}

void save_params(const std::string& path, const NetworkParams& params) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  save_params(out, params);
}

NetworkParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return load_params(in);
}

}  // namespace disco
