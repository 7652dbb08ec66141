#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sltk {

// Geometry of one convolution layer. The weight matrix is c_out x n with
// n = c_in * k_h * k_w, columns ordered (input channel, k_h, k_w).
struct LayerShape {
  std::uint32_t c_out = 1;
  std::uint32_t c_in = 1;
  std::uint32_t k_h = 1;
  std::uint32_t k_w = 1;
  std::uint32_t stride = 1;
  std::uint32_t padding = 0;

  std::size_t n() const { return std::size_t{c_in} * k_h * k_w; }
  std::size_t cells() const { return std::size_t{c_out} * n(); }

  // Throws ShapeError unless every count is >= 1.
  void validate() const;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

// A layer of an architecture description. `source` names the layer that
// feeds this one (empty: the previous layer, or the network input for the
// first layer; "input" always means the network input). `pool` is a k x k
// max-pool applied to this layer's output; `global_pool` collapses the
// output to 1 x 1.
struct LayerSpec {
  std::string name;
  LayerShape shape;
  bool prunable = true;
  std::string source;
  std::uint32_t pool = 1;
  bool global_pool = false;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Binary c_out x n matrix, row-major, one byte per cell (0 or 1).
class SparseMask {
 public:
  SparseMask() = default;
  SparseMask(std::string layer_name, LayerShape shape, bool fill = true);
  SparseMask(std::string layer_name, LayerShape shape,
             std::vector<std::uint8_t> bits);

  const std::string& layer_name() const { return name_; }
  const LayerShape& shape() const { return shape_; }
  std::size_t rows() const { return shape_.c_out; }
  std::size_t cols() const { return shape_.n(); }

  bool test(std::size_t row, std::size_t col) const {
    return bits_[row * cols() + col] != 0;
  }
  void set(std::size_t row, std::size_t col, bool value) {
    bits_[row * cols() + col] = value ? 1 : 0;
  }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return std::span<const std::uint8_t>(bits_).subspan(r * cols(), cols());
  }

  std::size_t count() const;
  std::size_t row_count(std::size_t r) const;

  // Sorted column indices of set bits in row r.
  std::vector<std::uint32_t> row_support(std::size_t r) const;

  friend bool operator==(const SparseMask&, const SparseMask&) = default;

 private:
  std::string name_;
  LayerShape shape_;
  std::vector<std::uint8_t> bits_;
};

// Real c_out x n matrix congruent with a SparseMask.
class WeightTensor {
 public:
  WeightTensor() = default;
  WeightTensor(std::string layer_name, LayerShape shape);
  WeightTensor(std::string layer_name, LayerShape shape,
               std::vector<float> values);

  const std::string& layer_name() const { return name_; }
  const LayerShape& shape() const { return shape_; }
  std::size_t rows() const { return shape_.c_out; }
  std::size_t cols() const { return shape_.n(); }

  float at(std::size_t row, std::size_t col) const {
    return values_[row * cols() + col];
  }
  float& at(std::size_t row, std::size_t col) {
    return values_[row * cols() + col];
  }

  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  friend bool operator==(const WeightTensor&, const WeightTensor&) = default;

 private:
  std::string name_;
  LayerShape shape_;
  std::vector<float> values_;
};

// Fraction of set bits, in [0, 1].
double density(const SparseMask& mask);

// Throws ShapeError if the mask and weights do not describe the same matrix.
void require_congruent(const SparseMask& mask, const WeightTensor& weights);

// weights with every unmasked position zeroed.
WeightTensor apply_mask(const WeightTensor& weights, const SparseMask& mask);

}  // namespace sltk
