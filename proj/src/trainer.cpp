#include "disco/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "disco/errors.hpp"

namespace disco {

void TrainConfig::validate() const {
  objective.validate();
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(l2 >= 0.0)) throw ConfigError("l2 coefficient must be non-negative");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
}

std::string history_csv(const TrainHistory& history, bool include_time) {
  std::string out = "epoch,train_obj,val_obj,seconds\n";
  for (const EpochRecord& r : history.epochs) {
    const std::string val = std::isnan(r.val_objective) ? "" : fmt::format("{}", r.val_objective);
    out += fmt::format("{},{},{},{}\n", r.epoch, r.train_objective, val, include_time ? r.seconds : 0.0);
  }
  return out;
}

namespace {

// Fisher-Yates driven by our own stream; std::shuffle is implementation-defined.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

std::pair<Dataset, Dataset> train_val_split(const Dataset& data, std::size_t val_count,
                                            std::uint64_t seed) {
  if (val_count == 0 || val_count >= data.size()) {
    throw ContractError(fmt::format("validation count must lie in (0, {}), got {}", data.size(), val_count));
  }
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::substream(seed, "split");
  shuffle_indices(idx, rng);
  Dataset train, val;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (i < val_count ? val : train).push_back(data[idx[i]]);
  }
  return {std::move(train), std::move(val)};
}

void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum, double l2,
                       std::span<const double> l2_mask) {
  if (grads.size() != params.size() || velocity.size() != params.size() ||
      (!l2_mask.empty() && l2_mask.size() != params.size())) {
    throw DimensionError(fmt::format("optimizer sizes differ: params {}, grads {}, velocity {}",
                                     params.size(), grads.size(), velocity.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double decay = l2 * (l2_mask.empty() ? 1.0 : l2_mask[i]) * params[i];
    velocity[i] = momentum * velocity[i] - lr * (grads[i] + decay);
    params[i] += velocity[i];
  }
}

double evaluate_objective(const NetworkParams& params, std::span<const Example> data,
                          const ObjectiveConfig& config, Rng& rng) {
  const NoiseBatch noises = draw_noises(params.config(), data.size(), config.k, rng);
  Graph g;
  const BoundParams bound = bind_params(g, params);
  return g.value(disco_objective_node(g, params.config(), bound, data, noises, config)).item();
}

TrainResult train(const NetConfig& net, const TrainConfig& config, const Dataset& data,
                  const BatchObserver& observer) {
  net.validate();
  config.validate();
  if (data.empty()) throw ContractError("training data is empty");

  Dataset train_set, val_set;
  if (config.val_count > 0) {
    std::tie(train_set, val_set) = train_val_split(data, config.val_count, config.seed);
  } else {
    train_set = data;
  }

  NetworkParams params = init_params(net, Rng::substream(config.seed, "init").next_u64());
  std::vector<double> theta(params.flat().begin(), params.flat().end());
  std::vector<double> velocity(theta.size(), 0.0);
  const std::vector<double> mask = params.weight_mask();

  Rng shuffle_rng = Rng::substream(config.seed, "shuffle");
  Rng noise_rng = Rng::substream(config.seed, "noise");
  const Rng val_rng_start = Rng::substream(config.seed, "val_noise");

  TrainHistory history;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle_indices(order, shuffle_rng);
    double weighted_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      Dataset batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train_set[order[i]]);
      const NoiseBatch noises = draw_noises(net, batch.size(), config.objective.k, noise_rng);

      Graph g;
      const BoundParams bound = bind_params(g, params);
      double objective = std::numeric_limits<double>::quiet_NaN();
      try {
        const NodeId root = disco_objective_node(g, net, bound, batch, noises, config.objective);
        objective = g.value(root).item();
        g.backward(root);
      } catch (const NumericError&) {
        objective = std::numeric_limits<double>::quiet_NaN();
      }
      if (!std::isfinite(objective)) {
        throw NumericError(fmt::format("non-finite objective at epoch {}, batch {}", epoch, batch_index));
      }
      if (observer) observer(BatchEvent{epoch, batch_index, params, batch, noises, objective});

      const auto grad = g.grad(bound.flat).data();
      sgd_momentum_step(theta, grad, velocity, config.lr, config.momentum, config.l2, mask);
      for (double v : theta) {
        if (!std::isfinite(v)) {
          throw NumericError(fmt::format("non-finite parameters after epoch {}, batch {}", epoch, batch_index));
        }
      }
      params = NetworkParams(net, theta);
      weighted_sum += objective * static_cast<double>(batch.size());
    }

    double val_objective = std::numeric_limits<double>::quiet_NaN();
    if (!val_set.empty()) {
      Rng val_rng = val_rng_start;  // same validation noises every epoch
      val_objective = evaluate_objective(params, val_set, config.objective, val_rng);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.epochs.push_back(
        {epoch, weighted_sum / static_cast<double>(train_set.size()), val_objective, seconds});

    if (config.checkpoint_every > 0 && !config.checkpoint_path.empty() &&
        epoch % config.checkpoint_every == 0) {
      save_params(config.checkpoint_path, params);
    }
  }
  return {std::move(params), std::move(history), std::move(train_set), std::move(val_set)};
}

ProbLossSummary model_probloss(const NetworkParams& params, std::span<const Example> data, std::size_t k,
                               std::span<const double> base_sigmas, std::uint64_t seed) {
  if (k < 2) throw EstimatorError("ProbLoss needs K >= 2");
  if (data.empty()) throw ContractError("ProbLoss over an empty dataset");
  std::vector<Tensor> gts;
  gts.reserve(data.size());
  for (const Example& e : data) gts.push_back(e.y);

  Rng rng = Rng::substream(seed, "eval");
  if (params.config().noise_enabled) {
    std::vector<CandidateSet> sets;
    sets.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) sets.push_back(sample_candidates(params, data[i].x, k, rng, i));
    return {probloss(sets, gts), std::nullopt};
  }
  if (base_sigmas.empty()) throw ContractError("pointwise network needs at least one BASE sigma");
  std::vector<Tensor> pointwise;
  pointwise.reserve(data.size());
  for (const Example& e : data) pointwise.push_back(generate(params, e.x, Tensor()));
  std::optional<ProbLossSummary> best;
  for (double sigma : base_sigmas) {
    Rng sigma_rng = rng;  // same Gaussian draws for every sigma
    std::vector<CandidateSet> sets;
    sets.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) sets.push_back(base_candidates(pointwise[i], k, sigma, sigma_rng, i));
    const MeanSem value = probloss(sets, gts);
    if (!best || value.mean < best->probloss.mean) best = ProbLossSummary{value, sigma};
  }
  return *best;
}

}  // namespace disco
