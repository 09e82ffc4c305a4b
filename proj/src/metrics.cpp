#include "disco/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "disco/errors.hpp"

namespace disco {

JointLayout JointLayout::pose(std::size_t y_dim) {
  if (y_dim == 0 || y_dim % 3 != 0) {
    throw DimensionError(fmt::format("pose layout needs y_dim divisible by 3, got {}", y_dim));
  }
  JointLayout layout;
  layout.y_dim_ = y_dim;
  for (std::size_t b = 0; b < y_dim; b += 3) layout.groups_.emplace_back(b, b + 3);
  return layout;
}

JointLayout JointLayout::singletons(std::size_t y_dim) {
  if (y_dim == 0) throw DimensionError("layout needs a positive y_dim");
  JointLayout layout;
  layout.y_dim_ = y_dim;
  layout.degenerate_ = true;
  for (std::size_t b = 0; b < y_dim; ++b) layout.groups_.emplace_back(b, b + 1);
  return layout;
}

std::vector<double> JointLayout::joint_errors(std::span<const double> pred,
                                              std::span<const double> gt) const {
  if (pred.size() != y_dim_ || gt.size() != y_dim_) {
    throw DimensionError(fmt::format("layout covers {} coordinates, got outputs of length {} and {}",
                                     y_dim_, pred.size(), gt.size()));
  }
  std::vector<double> errors;
  errors.reserve(groups_.size());
  for (const auto& [begin, end] : groups_) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += (pred[i] - gt[i]) * (pred[i] - gt[i]);
    errors.push_back(std::sqrt(s));
  }
  return errors;
}

MeanSem mean_sem(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  return {mean, std::sqrt(var) / std::sqrt(n)};
}

std::pair<std::size_t, Tensor> meu_predict(const CandidateSet& candidates, const LossSpec& task_loss) {
  const std::size_t k = candidates.k();
  if (k == 0) throw ContractError("MEU prediction over an empty candidate set");
  std::size_t best = 0;
  double best_total = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    double total = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      total += task_loss(candidates.candidates[a].data(), candidates.candidates[b].data());
    }
    if (a == 0 || total < best_total) {
      best = a;
      best_total = total;
    }
  }
  return {best, candidates.candidates[best]};
}

namespace {

std::vector<std::vector<double>> frame_errors(std::span<const Tensor> preds, std::span<const Tensor> gts,
                                              const JointLayout& layout) {
  if (preds.size() != gts.size()) {
    throw DimensionError(fmt::format("{} predictions for {} ground truths", preds.size(), gts.size()));
  }
  std::vector<std::vector<double>> out;
  out.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) out.push_back(layout.joint_errors(preds[i].data(), gts[i].data()));
  return out;
}

}  // namespace

MeanSem mejee(std::span<const Tensor> preds, std::span<const Tensor> gts, const JointLayout& layout) {
  std::vector<double> per_frame;
  for (const auto& errors : frame_errors(preds, gts, layout)) {
    double s = 0.0;
    for (double e : errors) s += e;
    per_frame.push_back(s / static_cast<double>(errors.size()));
  }
  return mean_sem(per_frame);
}

MeanSem majee(std::span<const Tensor> preds, std::span<const Tensor> gts, const JointLayout& layout) {
  std::vector<double> per_frame;
  for (const auto& errors : frame_errors(preds, gts, layout)) {
    per_frame.push_back(*std::max_element(errors.begin(), errors.end()));
  }
  return mean_sem(per_frame);
}

double ff(std::span<const Tensor> preds, std::span<const Tensor> gts, const JointLayout& layout, double d) {
  if (!(d >= 0.0)) throw ParameterError("FF distance must be non-negative");
  const auto errors = frame_errors(preds, gts, layout);
  if (errors.empty()) return 0.0;
  std::size_t within = 0;
  for (const auto& e : errors) {
    if (*std::max_element(e.begin(), e.end()) <= d) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(errors.size());
}

MeanSem probloss(std::span<const CandidateSet> candidate_sets, std::span<const Tensor> gts) {
  if (candidate_sets.size() != gts.size()) {
    throw DimensionError(fmt::format("{} candidate sets for {} ground truths", candidate_sets.size(), gts.size()));
  }
  const LossSpec euclid = LossSpec::euclidean(1.0);
  std::vector<double> per_frame;
  per_frame.reserve(gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    per_frame.push_back(energy_score_sample(candidate_sets[i], gts[i], euclid));
  }
  return mean_sem(per_frame);
}

PearsonMatrix pearson_matrix(std::span<const CandidateSet> candidate_sets, const JointLayout& layout) {
  const std::size_t j_count = layout.joint_count();
  std::vector<double> sums(j_count * j_count, 0.0);
  std::vector<std::size_t> counts(j_count * j_count, 0);

  for (const CandidateSet& set : candidate_sets) {
    const std::size_t k = set.k();
    if (k < 2) throw EstimatorError("Pearson correlation across candidates needs K >= 2");
    // features[j][c]: scalar summary of joint j in candidate c.
    std::vector<std::vector<double>> features(j_count, std::vector<double>(k, 0.0));
    if (layout.degenerate()) {
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < j_count; ++j) features[j][c] = set.candidates[c][layout.groups()[j].first];
      }
    } else {
      std::vector<double> mean(layout.y_dim(), 0.0);
      for (const Tensor& c : set.candidates) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += c[i] / static_cast<double>(k);
      }
      for (std::size_t c = 0; c < k; ++c) {
        const auto dev = layout.joint_errors(set.candidates[c].data(), mean);
        for (std::size_t j = 0; j < j_count; ++j) features[j][c] = dev[j];
      }
    }
    // A spread at rounding level relative to the feature's magnitude counts as
    // zero variance.
    std::vector<double> centred_norm(j_count, 0.0), tolerance(j_count, 0.0);
    for (std::size_t j = 0; j < j_count; ++j) {
      double largest = 0.0;
      for (double v : features[j]) largest = std::max(largest, std::abs(v));
      tolerance[j] = 1e-12 * (1.0 + largest) * std::sqrt(static_cast<double>(k));
    }
    for (auto& f : features) {
      double m = 0.0;
      for (double v : f) m += v;
      m /= static_cast<double>(k);
      for (double& v : f) v -= m;
    }
    for (std::size_t j = 0; j < j_count; ++j) {
      double s = 0.0;
      for (double v : features[j]) s += v * v;
      centred_norm[j] = std::sqrt(s);
    }
    for (std::size_t a = 0; a < j_count; ++a) {
      for (std::size_t b = 0; b < j_count; ++b) {
        if (centred_norm[a] <= tolerance[a] || centred_norm[b] <= tolerance[b]) continue;
        double dot = 0.0;
        for (std::size_t c = 0; c < k; ++c) dot += features[a][c] * features[b][c];
        const double r = std::clamp(dot / (centred_norm[a] * centred_norm[b]), -1.0, 1.0);
        sums[a * j_count + b] += r;
        counts[a * j_count + b] += 1;
      }
    }
  }

  PearsonMatrix m;
  m.size = j_count;
  m.entries.resize(j_count * j_count);
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (counts[i] > 0) m.entries[i] = sums[i] / static_cast<double>(counts[i]);
  }
  return m;
}

CandidateSet base_candidates(const Tensor& pointwise, std::size_t k, double sigma, Rng& rng,
                             std::size_t input_index) {
  if (!(sigma > 0.0)) throw ParameterError("BASE candidate sigma must be positive");
  if (k == 0) throw ContractError("base_candidates needs K >= 1");
  CandidateSet set;
  set.input_index = input_index;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> y(pointwise.data().begin(), pointwise.data().end());
    for (double& v : y) v += sigma * rng.normal();
    set.candidates.push_back(Tensor::vector(std::move(y)));
    set.noises.emplace_back();
  }
  return set;
}

MetricsReport compute_report(std::span<const CandidateSet> candidate_sets, std::span<const Tensor> gts,
                             const JointLayout& layout, std::span<const double> distances,
                             std::span<const Tensor> pointwise) {
  if (candidate_sets.size() != gts.size()) {
    throw DimensionError(fmt::format("{} candidate sets for {} ground truths", candidate_sets.size(), gts.size()));
  }
  MetricsReport report;
  report.frames = gts.size();
  report.k = candidate_sets.empty() ? 0 : candidate_sets.front().k();

  std::vector<Tensor> preds;
  if (!pointwise.empty()) {
    preds.assign(pointwise.begin(), pointwise.end());
    report.pointwise_method = "zero_noise";
  } else {
    const LossSpec task = LossSpec::euclidean(1.0);
    for (const CandidateSet& set : candidate_sets) preds.push_back(meu_predict(set, task).second);
    report.pointwise_method = "meu";
  }
  report.mejee = mejee(preds, gts, layout);
  report.majee = majee(preds, gts, layout);
  for (double d : distances) report.ff[d] = ff(preds, gts, layout, d);
  if (report.k >= 2) {
    report.probloss = probloss(candidate_sets, gts);
    report.pearson = pearson_matrix(candidate_sets, layout);
  }
  return report;
}

namespace {

nlohmann::ordered_json mean_sem_json(const MeanSem& m) {
  return {{"mean", m.mean}, {"sem", m.sem}};
}

std::string ff_key(double d) { return fmt::format("{}", d); }

}  // namespace

std::string report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["probloss"] = report.probloss ? mean_sem_json(*report.probloss) : nlohmann::ordered_json(nullptr);
  j["mejee"] = mean_sem_json(report.mejee);
  j["majee"] = mean_sem_json(report.majee);
  nlohmann::ordered_json ffj = nlohmann::ordered_json::object();
  for (const auto& [d, frac] : report.ff) ffj[ff_key(d)] = frac;
  j["ff"] = ffj;
  if (report.pearson) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < report.pearson->size; ++a) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t b = 0; b < report.pearson->size; ++b) {
        const auto& e = report.pearson->at(a, b);
        row.push_back(e ? nlohmann::ordered_json(*e) : nlohmann::ordered_json(nullptr));
      }
      rows.push_back(row);
    }
    j["pearson"] = rows;
  } else {
    j["pearson"] = nullptr;
  }
  j["counts"] = {{"frames", report.frames}, {"k", report.k}};
  j["pointwise_method"] = report.pointwise_method;
  if (!report.config_hash.empty()) j["config_hash"] = report.config_hash;
  return j.dump(2) + "\n";
}

std::string report_csv(const MetricsReport& report) {
  std::string out;
  if (!report.config_hash.empty()) out += fmt::format("# config_hash {}\n", report.config_hash);
  out += "metric,value,sem\n";
  if (report.probloss) {
    out += fmt::format("probloss,{},{}\n", report.probloss->mean, report.probloss->sem);
  } else {
    out += "probloss,,\n";
  }
  out += fmt::format("mejee,{},{}\n", report.mejee.mean, report.mejee.sem);
  out += fmt::format("majee,{},{}\n", report.majee.mean, report.majee.sem);
  for (const auto& [d, frac] : report.ff) out += fmt::format("ff@{},{},\n", ff_key(d), frac);
  if (report.pearson) {
    for (std::size_t a = 0; a < report.pearson->size; ++a) {
      for (std::size_t b = 0; b < report.pearson->size; ++b) {
        const auto& e = report.pearson->at(a, b);
        out += e ? fmt::format("pearson[{}][{}],{},\n", a, b, *e) : fmt::format("pearson[{}][{}],,\n", a, b);
      }
    }
  }
  out += fmt::format("frames,{},\nk,{},\n", report.frames, report.k);
  return out;
}

}  // namespace disco
