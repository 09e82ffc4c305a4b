#pragma once

// Pointwise prediction (MEU) and evaluation metrics.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "disco/netgen.hpp"
#include "disco/rng.hpp"
#include "disco/scoring.hpp"
#include "disco/tensor.hpp"

namespace disco {

/// Partition of the output coordinates into joints.
class JointLayout {
 public:
  /// Consecutive groups of 3 coordinates; y_dim must be a multiple of 3.
  static JointLayout pose(std::size_t y_dim);
  /// One group per coordinate (non-pose tasks).
  static JointLayout singletons(std::size_t y_dim);

  std::size_t joint_count() const { return groups_.size(); }
  std::size_t y_dim() const { return y_dim_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& groups() const { return groups_; }
  bool degenerate() const { return degenerate_; }

  /// Euclidean error of each joint between two outputs.
  std::vector<double> joint_errors(std::span<const double> pred, std::span<const double> gt) const;

 private:
  std::vector<std::pair<std::size_t, std::size_t>> groups_;  // [begin, end)
  std::size_t y_dim_ = 0;
  bool degenerate_ = false;
};

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
};

/// Mean and standard error (population stddev / sqrt(n)) of `values`.
MeanSem mean_sem(std::span<const double> values);

/// Minimum-expected-loss candidate: argmin_k sum_k' Delta(y_k, y_k'); ties go to
/// the lowest index.
std::pair<std::size_t, Tensor> meu_predict(const CandidateSet& candidates, const LossSpec& task_loss);

MeanSem mejee(std::span<const Tensor> preds, std::span<const Tensor> gts, const JointLayout& layout);
MeanSem majee(std::span<const Tensor> preds, std::span<const Tensor> gts, const JointLayout& layout);
/// Fraction of frames whose worst joint error is at most `d`.
double ff(std::span<const Tensor> preds, std::span<const Tensor> gts, const JointLayout& layout, double d);

/// Energy score with beta 1 and unit weights, averaged over frames.
MeanSem probloss(std::span<const CandidateSet> candidate_sets, std::span<const Tensor> gts);

/// J x J matrix; std::nullopt marks entries undefined because a joint had zero
/// variance across candidates for every input.
struct PearsonMatrix {
  std::size_t size = 0;
  std::vector<std::optional<double>> entries;

  const std::optional<double>& at(std::size_t i, std::size_t j) const { return entries[i * size + j]; }
};

/// Correlation across the K candidates of each input, averaged over inputs.
/// For pose layouts each joint contributes its Euclidean deviation from the
/// candidate mean; for singleton layouts the raw coordinate is used.
/// Per-input entries with zero variance are excluded from the average.
PearsonMatrix pearson_matrix(std::span<const CandidateSet> candidate_sets, const JointLayout& layout);

/// K draws of pointwise + N(0, sigma^2 I): candidate sets for pointwise models.
CandidateSet base_candidates(const Tensor& pointwise, std::size_t k, double sigma, Rng& rng,
                             std::size_t input_index = 0);

struct MetricsReport {
  std::optional<MeanSem> probloss;  // absent when K < 2
  MeanSem mejee;
  MeanSem majee;
  std::map<double, double> ff;
  std::optional<PearsonMatrix> pearson;
  std::size_t frames = 0;
  std::size_t k = 0;
  std::string pointwise_method;  // "meu" or "zero_noise"
  std::string config_hash;
};

/// Computes every metric from candidate sets; pointwise predictions come from
/// `pointwise` when given, otherwise from MEU over the candidates with the
/// Euclidean task loss.
MetricsReport compute_report(std::span<const CandidateSet> candidate_sets, std::span<const Tensor> gts,
                             const JointLayout& layout, std::span<const double> distances,
                             std::span<const Tensor> pointwise = {});

/// JSON document with keys probloss, mejee, majee, ff, pearson, counts.
/// Undefined Pearson entries and a missing ProbLoss serialise as null.
std::string report_json(const MetricsReport& report);
/// Flat "metric,value,sem" CSV.
std::string report_csv(const MetricsReport& report);

}  // namespace disco
