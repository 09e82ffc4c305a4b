#pragma once

// Experiment configuration: an INI document with sections
//   [experiment] [net] [objective] [train] [data] [eval] [toy] [gradcheck] [sweep]
// Unknown sections or keys are rejected; every key has a default except
// experiment.schema_version, which must be present and equal to 1.

#include <cstdint>
#include <string>
#include <vector>

#include "disco/netgen.hpp"
#include "disco/synthdata.hpp"
#include "disco/trainer.hpp"

namespace disco::cli {

inline constexpr int kSchemaVersion = 1;

struct DataConfig {
  std::string generator = "bimodal";  // "bimodal" or "csv"
  std::string path;                   // csv path (the --data flag overrides)
  std::size_t n = 2000;
  double noise = kBimodalNoise;
};

struct EvalConfig {
  std::size_t k = 16;
  std::string layout = "singletons";  // "singletons" or "pose"
  std::vector<double> distances{0.1, 0.25, 0.5, 1.0};
  bool zero_noise = false;
  std::vector<double> base_sigmas{0.01, 0.05, 0.1};
};

struct GradcheckConfig {
  // Small two-layer generator: x -> relu(6) -> [h, z] -> y.
  std::size_t x_dim = 2;
  std::size_t y_dim = 2;
  std::size_t z_dim = 4;
  std::size_t hidden = 6;
  std::vector<double> weights;  // loss weights; empty means unweighted
  std::vector<double> gammas{0.0, 0.25, 0.5};
  std::vector<double> betas{0.5, 1.0, 1.5, 1.9};
  std::size_t n = 4;
  std::size_t k = 3;
  double step = 1e-6;
  double tolerance = 1e-4;
  bool corrupt = false;  // test hook: perturbs the analytic gradient

  NetConfig net() const;
};

struct SweepConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<double> l2{0.0001, 0.001, 0.01};
};

inline TrainConfig default_train() {
  TrainConfig t;
  t.epochs = 30;
  t.val_count = 500;
  return t;
}

struct ExperimentConfig {
  std::uint64_t seed = 0;
  NetConfig net = NetConfig::desk(1, 1);
  TrainConfig train = default_train();
  DataConfig data;
  EvalConfig eval;
  ToyConfig toy;
  GradcheckConfig gradcheck;
  SweepConfig sweep;

  /// Canonical INI rendering of every resolved field; stable across runs.
  std::string canonical() const;
  /// 16 hex digits of FNV-1a over canonical().
  std::string hash() const;
  /// Replaces the master seed and the training seed derived from it.
  void set_seed(std::uint64_t seed);
};

/// Parses and validates; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace disco::cli
