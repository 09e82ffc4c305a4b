#include "disco/synthdata.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "disco/errors.hpp"

namespace disco {

void GmmSpec::validate() const {
  double total = 0.0;
  for (const GmmComponent& c : components) {
    if (!(c.stddev[0] > 0.0 && c.stddev[1] > 0.0)) throw ParameterError("mixture stddevs must be positive");
    if (!(c.weight > 0.0 && c.weight < 1.0)) throw ParameterError("mixture weights must lie in (0, 1)");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError("mixture weights must sum to 1");
}

Point2 GmmSpec::mean() const {
  Point2 m{0.0, 0.0};
  for (const GmmComponent& c : components) {
    m[0] += c.weight * c.mean[0];
    m[1] += c.weight * c.mean[1];
  }
  return m;
}

GmmSpec GmmSpec::toy_default() {
  return {{GmmComponent{{-2.0, -2.0}, {0.5, 0.5}, 0.5}, GmmComponent{{2.0, 2.0}, {0.5, 0.5}, 0.5}}};
}

std::vector<Point2> gen_gmm2d(const GmmSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  if (n == 0) throw ContractError("gen_gmm2d needs n >= 1");
  std::vector<Point2> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const GmmComponent& c = rng.bernoulli(spec.components[0].weight) ? spec.components[0] : spec.components[1];
    const double e1 = rng.normal();
    const double e2 = rng.normal();
    out.push_back({c.mean[0] + c.stddev[0] * e1, c.mean[1] + c.stddev[1] * e2});
  }
  return out;
}

Dataset gen_conditional_bimodal(std::size_t n, Rng& rng, double noise) {
  if (n == 0) throw ContractError("gen_conditional_bimodal needs n >= 1");
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double y = sign * (1.0 + x * x) + noise * rng.normal();
    out.push_back({Tensor::vector({x}), Tensor::vector({y})});
  }
  return out;
}

Dataset load_csv(std::istream& in, std::size_t x_dim, std::size_t y_dim) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
      continue;
    }
    std::vector<double> fields;
    std::stringstream row(line);
    std::string token;
    while (std::getline(row, token, ',')) {
      const auto first = token.find_first_not_of(" \t");
      const auto last = token.find_last_not_of(" \t");
      const std::string trimmed = first == std::string::npos ? "" : token.substr(first, last - first + 1);
      char* end = nullptr;
      const double v = std::strtod(trimmed.c_str(), &end);
      if (trimmed.empty() || *end != '\0' || !std::isfinite(v)) {
        throw ParseError(fmt::format("line {}: '{}' is not a finite number", line_no, trimmed));
      }
      fields.push_back(v);
    }
    if (fields.size() != x_dim + y_dim) {
      throw SchemaError(fmt::format("line {}: expected {} fields (x_dim {} + y_dim {}), got {}", line_no,
                                    x_dim + y_dim, x_dim, y_dim, fields.size()));
    }
    data.push_back({Tensor::vector(std::vector<double>(fields.begin(), fields.begin() + x_dim)),
                    Tensor::vector(std::vector<double>(fields.begin() + x_dim, fields.end()))});
  }
  return data;
}

Dataset load_csv(const std::string& path, std::size_t x_dim, std::size_t y_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return load_csv(in, x_dim, y_dim);
}

void write_csv(std::ostream& out, const Dataset& data) {
  for (const Example& e : data) {
    std::string row;
    for (double v : e.x.data()) row += fmt::format("{}{}", row.empty() ? "" : ",", v);
    for (double v : e.y.data()) row += fmt::format("{}{}", row.empty() ? "" : ",", v);
    out << row << '\n';
  }
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_csv(out, data);
}

double GridAxis::at(std::size_t i) const {
  if (steps <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

void GridSpec::validate() const {
  for (const GridAxis* a : {&mu1, &mu2, &sigma1, &sigma2}) {
    if (a->steps == 0) throw ConfigError("grid axes need at least one step");
    if (a->hi < a->lo) throw ConfigError("grid axis upper bound below lower bound");
  }
  if (!(sigma1.lo > 0.0 && sigma2.lo > 0.0)) throw ConfigError("sigma grid ranges must be strictly positive");
}

std::size_t GridSpec::size() const { return mu1.steps * mu2.steps * sigma1.steps * sigma2.steps; }

DiagGaussianParams GridSpec::point(std::size_t index) const {
  const std::size_t i4 = index % sigma2.steps;
  index /= sigma2.steps;
  const std::size_t i3 = index % sigma1.steps;
  index /= sigma1.steps;
  const std::size_t i2 = index % mu2.steps;
  const std::size_t i1 = index / mu2.steps;
  return {mu1.at(i1), mu2.at(i2), sigma1.at(i3), sigma2.at(i4)};
}

CommonNoise CommonNoise::draw(std::size_t points, std::size_t m, Rng& rng) {
  CommonNoise noise;
  noise.m = m;
  noise.draws.reserve(points * m);
  for (std::size_t i = 0; i < points * m; ++i) {
    const double e1 = rng.normal();
    const double e2 = rng.normal();
    noise.draws.push_back({e1, e2});
  }
  return noise;
}

std::vector<double> gaussian_dissimilarity(const DiagGaussianParams& params,
                                           std::span<const Point2> data, const CommonNoise& noise,
                                           const LossSpec& loss, double gamma) {
  const std::size_t m = noise.m;
  if (m < 2) throw EstimatorError("Gaussian dissimilarity needs m >= 2 model samples");
  if (noise.draws.size() < data.size() * m) throw ContractError("not enough common random numbers");
  std::vector<double> out;
  out.reserve(data.size());
  std::vector<Point2> samples(m);
  const double md = static_cast<double>(m);
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (std::size_t j = 0; j < m; ++j) {
      const Point2& e = noise.draws[n * m + j];
      samples[j] = {params.mu1 + params.sigma1 * e[0], params.mu2 + params.sigma2 * e[1]};
    }
    double fit = 0.0;
    for (const Point2& s : samples) fit += loss(data[n], s);
    double spread = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) spread += 2.0 * loss(samples[a], samples[b]);
    }
    out.push_back(fit / md - gamma * spread / (md * (md - 1.0)));
  }
  return out;
}

DiagGaussianParams fit_gaussian_grid(std::span<const Point2> train, const GridSpec& grid,
                                     const LossSpec& loss, double gamma, std::size_t m, Rng& rng) {
  grid.validate();
  if (train.empty()) throw ContractError("grid fit over an empty training set");
  if (m < 2) throw EstimatorError("grid fit needs m >= 2 model samples per point");
  const CommonNoise noise = CommonNoise::draw(train.size(), m, rng);
  DiagGaussianParams best{};
  double best_value = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const DiagGaussianParams candidate = grid.point(i);
    const auto per_point = gaussian_dissimilarity(candidate, train, noise, loss, gamma);
    double total = 0.0;
    for (double v : per_point) total += v;
    const double value = total / static_cast<double>(per_point.size());
    if (i == 0 || value < best_value) {
      best = candidate;
      best_value = value;
    }
  }
  return best;
}

MeanSem eval_gaussian(const DiagGaussianParams& params, std::span<const Point2> test,
                      const LossSpec& loss, double gamma, std::size_t m, Rng& rng) {
  if (m < 2) throw EstimatorError("evaluation needs m >= 2 model samples per point");
  const CommonNoise noise = CommonNoise::draw(test.size(), m, rng);
  return mean_sem(gaussian_dissimilarity(params, test, noise, loss, gamma));
}

bool ToyResult::diagonal_dominant() const {
  return table[0][0].mean < table[1][0].mean && table[1][1].mean < table[0][1].mean;
}

ToyResult run_toy(const ToyConfig& config) {
  config.mixture.validate();
  config.grid.validate();
  if (config.seeds.empty()) throw ConfigError("toy experiment needs at least one seed");
  const std::array<LossSpec, 2> losses{LossSpec::delta_a(), LossSpec::delta_b()};
  ToyResult result;
  for (std::uint64_t seed : config.seeds) {
    Rng data_rng = Rng::substream(seed, "data");
    const auto train = gen_gmm2d(config.mixture, config.n_train, data_rng);
    const auto test = gen_gmm2d(config.mixture, config.n_test, data_rng);
    ToySeedResult r{seed, {}, {}};
    for (std::size_t t = 0; t < 2; ++t) {
      // Both fits see the same common random numbers.
      Rng fit_rng = Rng::substream(seed, "fit");
      r.fits[t] = fit_gaussian_grid(train, config.grid, losses[t], config.gamma, config.m, fit_rng);
    }
    for (std::size_t trained = 0; trained < 2; ++trained) {
      for (std::size_t task = 0; task < 2; ++task) {
        Rng eval_rng = Rng::substream(seed, "eval");
        r.table[trained][task] =
            eval_gaussian(r.fits[trained], test, losses[task], config.gamma, config.m_eval, eval_rng);
      }
    }
    result.seeds.push_back(r);
  }
  const double s = static_cast<double>(result.seeds.size());
  for (std::size_t trained = 0; trained < 2; ++trained) {
    for (std::size_t task = 0; task < 2; ++task) {
      double mean = 0.0, var = 0.0;
      for (const ToySeedResult& r : result.seeds) {
        mean += r.table[trained][task].mean;
        var += r.table[trained][task].sem * r.table[trained][task].sem;
      }
      result.table[trained][task] = {mean / s, std::sqrt(var) / s};
    }
  }
  return result;
}

}  // namespace disco
