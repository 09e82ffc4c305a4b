#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "disco/metrics.hpp"
#include "disco/netgen.hpp"
#include "disco/objective.hpp"

namespace disco {

struct TrainConfig {
  ObjectiveConfig objective{};
  double lr = 0.01;
  double momentum = 0.9;
  double l2 = 0.001;  // C
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::size_t val_count = 0;  // 0: no validation split
  /// Checkpoint interval in epochs (0 disables); used together with checkpoint_path.
  std::size_t checkpoint_every = 0;
  std::string checkpoint_path;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch;
  double train_objective;  // size-weighted mean of per-batch objectives before each update
  double val_objective;    // NaN when there is no validation split
  double seconds;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

/// History as CSV with header "epoch,train_obj,val_obj,seconds". Wall time is
/// omitted (written as 0) when `include_time` is false, which keeps the file
/// byte-identical across reruns.
std::string history_csv(const TrainHistory& history, bool include_time = false);

/// Deterministic shuffled split into (train, validation) with |validation| = val_count.
std::pair<Dataset, Dataset> train_val_split(const Dataset& data, std::size_t val_count,
                                            std::uint64_t seed);

/// v <- momentum * v - lr * (g + l2 * mask * theta); theta <- theta + v.
/// An empty mask applies the L2 term to every coordinate.
void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum, double l2,
                       std::span<const double> l2_mask = {});

/// Observes each minibatch before its parameter update.
struct BatchEvent {
  std::size_t epoch;
  std::size_t batch;
  const NetworkParams& params;
  std::span<const Example> examples;
  const NoiseBatch& noises;
  double objective;
};
using BatchObserver = std::function<void(const BatchEvent&)>;

struct TrainResult {
  NetworkParams params;
  TrainHistory history;
  Dataset train;
  Dataset val;
};

/// Minibatch SGD with momentum over the dissimilarity objective. Randomness is
/// drawn from named substreams of config.seed: "init", "split", "shuffle",
/// "noise" and "val_noise". Throws NumericError (naming epoch and batch) if the
/// objective becomes non-finite.
TrainResult train(const NetConfig& net, const TrainConfig& config, const Dataset& data,
                  const BatchObserver& observer = {});

/// Objective on a fixed dataset with noises drawn from `rng`.
double evaluate_objective(const NetworkParams& params, std::span<const Example> data,
                          const ObjectiveConfig& config, Rng& rng);

struct ProbLossSummary {
  MeanSem probloss;
  /// Noise scale of the winning BASE candidate construction; empty for
  /// networks with a noise input.
  std::optional<double> base_sigma;
};

/// ProbLoss of a trained network on `data` with K candidates per input. Noise
/// networks are sampled directly; pointwise networks get Gaussian candidates
/// around their prediction for each sigma in `base_sigmas`, and the best sigma
/// is reported.
ProbLossSummary model_probloss(const NetworkParams& params, std::span<const Example> data, std::size_t k,
                               std::span<const double> base_sigmas, std::uint64_t seed);

}  // namespace disco
