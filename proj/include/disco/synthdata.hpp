#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "disco/metrics.hpp"
#include "disco/objective.hpp"
#include "disco/rng.hpp"
#include "disco/scoring.hpp"

namespace disco {

using Point2 = std::array<double, 2>;

struct GmmComponent {
  Point2 mean;
  Point2 stddev;
  double weight;
};

/// Two-component, axis-aligned bivariate Gaussian mixture.
struct GmmSpec {
  std::array<GmmComponent, 2> components;

  void validate() const;
  Point2 mean() const;
  /// Means (-2, -2) and (2, 2), stddev 0.5 on both axes, equal weights. Both
  /// weighted losses see a clearly different best diagonal Gaussian here.
  static GmmSpec toy_default();
};

std::vector<Point2> gen_gmm2d(const GmmSpec& spec, std::size_t n, Rng& rng);

/// Stddev of the additive noise around each mode of the bimodal task.
inline constexpr double kBimodalNoise = 0.05;

/// x ~ U[-1, 1]; y = +/-(1 + x^2) with equal probability, plus N(0, noise^2).
Dataset gen_conditional_bimodal(std::size_t n, Rng& rng, double noise = kBimodalNoise);

/// Reads comma-separated rows of x_dim + y_dim numbers. Blank lines and lines
/// starting with '#' are skipped; an empty file yields an empty dataset.
Dataset load_csv(std::istream& in, std::size_t x_dim, std::size_t y_dim);
Dataset load_csv(const std::string& path, std::size_t x_dim, std::size_t y_dim);
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::string& path, const Dataset& data);

struct DiagGaussianParams {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma1 = 1.0;
  double sigma2 = 1.0;

  bool operator==(const DiagGaussianParams&) const = default;
};

/// Inclusive linear range with `steps` points (steps == 1 means just `lo`).
struct GridAxis {
  double lo;
  double hi;
  std::size_t steps;

  double at(std::size_t i) const;
};

struct GridSpec {
  GridAxis mu1, mu2, sigma1, sigma2;

  void validate() const;
  std::size_t size() const;
  /// Grid point `index` with mu1 varying slowest and sigma2 fastest.
  DiagGaussianParams point(std::size_t index) const;
};

/// Common random numbers: m standard-normal pairs per data point, shared by
/// every candidate model so that grid points are compared on equal footing.
struct CommonNoise {
  std::size_t m = 0;
  std::vector<Point2> draws;  // draws[n * m + j]

  static CommonNoise draw(std::size_t points, std::size_t m, Rng& rng);
};

/// Per-point empirical DIV(P,Q) - gamma DIV(Q,Q) of a diagonal Gaussian whose
/// samples are mu + sigma * eps with eps taken from `noise`.
std::vector<double> gaussian_dissimilarity(const DiagGaussianParams& params,
                                           std::span<const Point2> data, const CommonNoise& noise,
                                           const LossSpec& loss, double gamma);

/// Grid point minimising the mean dissimilarity on `train`; ties go to the
/// earliest grid point.
DiagGaussianParams fit_gaussian_grid(std::span<const Point2> train, const GridSpec& grid,
                                     const LossSpec& loss, double gamma, std::size_t m, Rng& rng);

/// Mean dissimilarity on `test` with its standard error over test points.
MeanSem eval_gaussian(const DiagGaussianParams& params, std::span<const Point2> test,
                      const LossSpec& loss, double gamma, std::size_t m, Rng& rng);

/// Cross-evaluation experiment: fit one diagonal Gaussian per training loss
/// (Delta_A, Delta_B) and score every fit under every task loss.
struct ToyConfig {
  GmmSpec mixture = GmmSpec::toy_default();
  GridSpec grid{{-0.5, 0.5, 3}, {-0.5, 0.5, 3}, {0.25, 4.0, 16}, {0.25, 4.0, 16}};
  std::size_t n_train = 2000;
  std::size_t n_test = 5000;
  std::size_t m = 8;       // model samples per point while fitting
  std::size_t m_eval = 8;  // model samples per point while evaluating
  double gamma = 0.5;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

struct ToySeedResult {
  std::uint64_t seed;
  std::array<DiagGaussianParams, 2> fits;          // by training loss (A, B)
  std::array<std::array<MeanSem, 2>, 2> table;     // [training loss][task loss]
};

struct ToyResult {
  std::vector<ToySeedResult> seeds;
  /// Seed-averaged table; sem combines the per-seed sems as for a mean of
  /// independent estimates.
  std::array<std::array<MeanSem, 2>, 2> table;

  /// Strictly smaller diagonal entry in every column.
  bool diagonal_dominant() const;
};

ToyResult run_toy(const ToyConfig& config);

}  // namespace disco
