#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace disco {

/// Dense row-major array of doubles with rank 1 or 2. Immutable once built;
/// construction rejects shape/length mismatches and non-finite entries.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  /// Rank-1 tensor holding `values`.
  static Tensor vector(std::vector<double> values);
  static Tensor vector(std::initializer_list<double> values);
  /// Rank-2 tensor from nested rows; all rows must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor scalar(double value);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  /// Rows/cols of the matrix view; a rank-1 tensor of length n reads as [1, n].
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  /// The single entry of a size-1 tensor.
  double item() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// "[2, 3]" style rendering for error messages.
std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace disco
