#include "cli/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "disco/errors.hpp"
#include "disco/rng.hpp"

namespace disco::cli {

namespace {

std::vector<std::string> tokens(const std::string& text) {
  std::string spaced = text;
  for (char& c : spaced) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(spaced);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || errno == ERANGE) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || *end != '\0' || errno == ERANGE) {
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, text));
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, text));
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& t : tokens(text)) out.push_back(to_double(key, t));
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& t : tokens(text)) out.push_back(to_uint(key, t));
  return out;
}

std::vector<std::uint64_t> to_u64s(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& t : tokens(text)) out.push_back(to_uint(key, t));
  return out;
}

GridAxis to_axis(const std::string& key, const std::string& text) {
  const auto t = tokens(text);
  if (t.size() != 3) throw ConfigError(fmt::format("{}: expected 'lo hi steps'", key));
  return {to_double(key, t[0]), to_double(key, t[1]), to_uint(key, t[2])};
}

Point2 to_point(const std::string& key, const std::string& text) {
  const auto v = to_doubles(key, text);
  if (v.size() != 2) throw ConfigError(fmt::format("{}: expected two numbers", key));
  return {v[0], v[1]};
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (const auto& v : values) out += fmt::format("{}{}", out.empty() ? "" : " ", v);
  return out;
}

std::string axis_text(const GridAxis& a) { return fmt::format("{} {} {}", a.lo, a.hi, a.steps); }

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;
using Schema = std::map<std::string, std::map<std::string, Setter>>;

const Schema& schema() {
  static const Schema s = {
      {"experiment",
       {
           {"schema_version",
            [](ExperimentConfig&, const std::string& k, const std::string& v) {
              if (to_uint(k, v) != kSchemaVersion) {
                throw ConfigError(fmt::format("{}: unsupported version {}", k, v));
              }
            }},
           {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.seed = to_uint(k, v);
              c.train.seed = c.seed;
            }},
       }},
      {"net",
       {
           {"x_dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.net.x_dim = to_uint(k, v); }},
           {"y_dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.net.y_dim = to_uint(k, v); }},
           {"z_dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.net.z_dim = to_uint(k, v); }},
           {"encoder", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.net.encoder_widths = to_sizes(k, v); }},
           {"decoder", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.net.decoder_widths = to_sizes(k, v); }},
           {"noise", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.net.noise_enabled = to_bool(k, v); }},
       }},
      {"objective",
       {
           {"gamma", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.objective.gamma = to_double(k, v); }},
           {"k", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.objective.k = to_uint(k, v); }},
           {"beta", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.train.objective.loss = LossSpec(to_double(k, v), c.train.objective.loss.weights());
            }},
           {"weights", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.train.objective.loss = LossSpec(c.train.objective.loss.beta(), to_doubles(k, v));
            }},
       }},
      {"train",
       {
           {"lr", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.lr = to_double(k, v); }},
           {"momentum", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.momentum = to_double(k, v); }},
           {"l2", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.l2 = to_double(k, v); }},
           {"batch_size", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = to_uint(k, v); }},
           {"epochs", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.epochs = to_uint(k, v); }},
           {"val_count", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.val_count = to_uint(k, v); }},
           {"checkpoint_every", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train.checkpoint_every = to_uint(k, v); }},
       }},
      {"data",
       {
           {"generator", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v != "bimodal" && v != "csv") throw ConfigError(fmt::format("{}: unknown generator '{}'", k, v));
              c.data.generator = v;
            }},
           {"path", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.data.path = v; }},
           {"n", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.data.n = to_uint(k, v); }},
           {"noise", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.data.noise = to_double(k, v); }},
       }},
      {"eval",
       {
           {"k", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.eval.k = to_uint(k, v); }},
           {"layout", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v != "singletons" && v != "pose") throw ConfigError(fmt::format("{}: unknown layout '{}'", k, v));
              c.eval.layout = v;
            }},
           {"distances", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.eval.distances = to_doubles(k, v); }},
           {"zero_noise", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.eval.zero_noise = to_bool(k, v); }},
           {"base_sigmas", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.eval.base_sigmas = to_doubles(k, v); }},
       }},
      {"toy",
       {
           {"seeds", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.seeds = to_u64s(k, v); }},
           {"n_train", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.n_train = to_uint(k, v); }},
           {"n_test", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.n_test = to_uint(k, v); }},
           {"m", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.m = to_uint(k, v); }},
           {"m_eval", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.m_eval = to_uint(k, v); }},
           {"gamma", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.gamma = to_double(k, v); }},
           {"mu1", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.grid.mu1 = to_axis(k, v); }},
           {"mu2", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.grid.mu2 = to_axis(k, v); }},
           {"sigma1", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.grid.sigma1 = to_axis(k, v); }},
           {"sigma2", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.grid.sigma2 = to_axis(k, v); }},
           {"mean1", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.mixture.components[0].mean = to_point(k, v); }},
           {"mean2", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.mixture.components[1].mean = to_point(k, v); }},
           {"stddev1", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.mixture.components[0].stddev = to_point(k, v); }},
           {"stddev2", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.mixture.components[1].stddev = to_point(k, v); }},
           {"weight1", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              const double w = to_double(k, v);
              c.toy.mixture.components[0].weight = w;
              c.toy.mixture.components[1].weight = 1.0 - w;
            }},
       }},
      {"gradcheck",
       {
           {"x_dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.x_dim = to_uint(k, v); }},
           {"y_dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.y_dim = to_uint(k, v); }},
           {"z_dim", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.z_dim = to_uint(k, v); }},
           {"hidden", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.hidden = to_uint(k, v); }},
           {"weights", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.weights = to_doubles(k, v); }},
           {"gammas", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.gammas = to_doubles(k, v); }},
           {"betas", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.betas = to_doubles(k, v); }},
           {"n", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.n = to_uint(k, v); }},
           {"k", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.k = to_uint(k, v); }},
           {"step", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.step = to_double(k, v); }},
           {"tolerance", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.tolerance = to_double(k, v); }},
           {"corrupt", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gradcheck.corrupt = to_bool(k, v); }},
       }},
      {"sweep",
       {
           {"seeds", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.sweep.seeds = to_u64s(k, v); }},
           {"l2", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.sweep.l2 = to_doubles(k, v); }},
       }},
  };
  return s;
}

void validate(const ExperimentConfig& c) {
  c.net.validate();
  c.train.validate();
  const auto& weights = c.train.objective.loss.weights();
  if (!weights.empty() && weights.size() != c.net.y_dim) {
    throw ConfigError(fmt::format("objective.weights has {} entries, net.y_dim is {}", weights.size(), c.net.y_dim));
  }
  if (c.data.n == 0) throw ConfigError("data.n must be positive");
  if (c.data.noise < 0.0) throw ConfigError("data.noise must be non-negative");
  if (c.eval.k == 0) throw ConfigError("eval.k must be positive");
  for (double d : c.eval.distances) {
    if (d < 0.0) throw ConfigError("eval.distances must be non-negative");
  }
  for (double s : c.eval.base_sigmas) {
    if (!(s > 0.0)) throw ConfigError("eval.base_sigmas must be positive");
  }
  c.toy.grid.validate();
  try {
    c.toy.mixture.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("toy mixture: ") + e.what());
  }
  if (c.toy.m < 2 || c.toy.m_eval < 2) throw ConfigError("toy.m and toy.m_eval must be at least 2");
  if (c.toy.n_train == 0 || c.toy.n_test == 0) throw ConfigError("toy sample sizes must be positive");
  if (c.toy.seeds.empty()) throw ConfigError("toy.seeds must not be empty");
  if (c.gradcheck.n == 0 || c.gradcheck.k == 0) throw ConfigError("gradcheck.n and gradcheck.k must be positive");
  c.gradcheck.net().validate();
  if (!c.gradcheck.weights.empty() && c.gradcheck.weights.size() != c.gradcheck.y_dim) {
    throw ConfigError("gradcheck.weights needs one entry per output coordinate");
  }
  if (!(c.gradcheck.step > 0.0)) throw ConfigError("gradcheck.step must be positive");
  if (c.sweep.seeds.empty() || c.sweep.l2.empty()) throw ConfigError("sweep needs seeds and l2 values");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig config;
  bool has_version = false;
  try {
    for (const auto& [section, body] : tree) {
      const auto found = schema().find(section);
      if (found == schema().end() || !body.data().empty()) {
        throw ConfigError(fmt::format("unknown config section or top-level key '{}'", section));
      }
      for (const auto& [key, value] : body) {
        const auto setter = found->second.find(key);
        if (setter == found->second.end()) throw ConfigError(fmt::format("unknown config key '{}.{}'", section, key));
        setter->second(config, section + "." + key, value.get_value<std::string>());
        has_version = has_version || (section == "experiment" && key == "schema_version");
      }
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (!has_version) throw ConfigError("missing required key 'experiment.schema_version'");
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

NetConfig GradcheckConfig::net() const {
  NetConfig n;
  n.x_dim = x_dim;
  n.y_dim = y_dim;
  n.z_dim = z_dim;
  n.encoder_widths = {hidden};
  n.decoder_widths = {};
  n.noise_enabled = true;
  return n;
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  train.seed = s;
  toy.seeds = {s};
  sweep.seeds = {s};
}

std::string ExperimentConfig::canonical() const {
  const auto& o = train.objective;
  const auto& m = toy.mixture.components;
  std::string out;
  out += fmt::format("[experiment]\nschema_version = {}\nseed = {}\n", kSchemaVersion, seed);
  out += fmt::format("[net]\nx_dim = {}\ny_dim = {}\nz_dim = {}\nencoder = {}\ndecoder = {}\nnoise = {}\n",
                     net.x_dim, net.y_dim, net.z_dim, join(net.encoder_widths), join(net.decoder_widths),
                     net.noise_enabled);
  out += fmt::format("[objective]\ngamma = {}\nk = {}\nbeta = {}\nweights = {}\n", o.gamma, o.k, o.loss.beta(),
                     join(o.loss.weights()));
  out += fmt::format(
      "[train]\nlr = {}\nmomentum = {}\nl2 = {}\nbatch_size = {}\nepochs = {}\nval_count = {}\ncheckpoint_every = {}\n",
      train.lr, train.momentum, train.l2, train.batch_size, train.epochs, train.val_count, train.checkpoint_every);
  out += fmt::format("[data]\ngenerator = {}\npath = {}\nn = {}\nnoise = {}\n", data.generator, data.path, data.n,
                     data.noise);
  out += fmt::format("[eval]\nk = {}\nlayout = {}\ndistances = {}\nzero_noise = {}\nbase_sigmas = {}\n", eval.k,
                     eval.layout, join(eval.distances), eval.zero_noise, join(eval.base_sigmas));
  out += fmt::format(
      "[toy]\nseeds = {}\nn_train = {}\nn_test = {}\nm = {}\nm_eval = {}\ngamma = {}\nmu1 = {}\nmu2 = {}\n"
      "sigma1 = {}\nsigma2 = {}\nmean1 = {} {}\nmean2 = {} {}\nstddev1 = {} {}\nstddev2 = {} {}\nweight1 = {}\n",
      join(toy.seeds), toy.n_train, toy.n_test, toy.m, toy.m_eval, toy.gamma, axis_text(toy.grid.mu1),
      axis_text(toy.grid.mu2), axis_text(toy.grid.sigma1), axis_text(toy.grid.sigma2), m[0].mean[0], m[0].mean[1],
      m[1].mean[0], m[1].mean[1], m[0].stddev[0], m[0].stddev[1], m[1].stddev[0], m[1].stddev[1], m[0].weight);
  out += fmt::format("[gradcheck]\nx_dim = {}\ny_dim = {}\nz_dim = {}\nhidden = {}\nweights = {}\n", gradcheck.x_dim,
                     gradcheck.y_dim, gradcheck.z_dim, gradcheck.hidden, join(gradcheck.weights));
  out += fmt::format("gammas = {}\nbetas = {}\nn = {}\nk = {}\nstep = {}\ntolerance = {}\ncorrupt = {}\n",
                     join(gradcheck.gammas), join(gradcheck.betas), gradcheck.n, gradcheck.k, gradcheck.step,
                     gradcheck.tolerance, gradcheck.corrupt);
  out += fmt::format("[sweep]\nseeds = {}\nl2 = {}\n", join(sweep.seeds), join(sweep.l2));
  return out;
}

std::string ExperimentConfig::hash() const { return fmt::format("{:016x}", fnv1a64(canonical())); }

}  // namespace disco::cli
