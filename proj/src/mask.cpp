#include "sltk/mask.hpp"

#include <algorithm>
#include <utility>

#include "sltk/errors.hpp"

namespace sltk {

void LayerShape::validate() const {
  if (c_out == 0 || c_in == 0 || k_h == 0 || k_w == 0 || stride == 0) {
    throw ShapeError("layer shape counts must be >= 1");
  }
}

SparseMask::SparseMask(std::string layer_name, LayerShape shape, bool fill)
    : name_(std::move(layer_name)),
      shape_(shape),
      bits_(shape.cells(), fill ? 1 : 0) {
  shape_.validate();
}

SparseMask::SparseMask(std::string layer_name, LayerShape shape,
                       std::vector<std::uint8_t> bits)
    : name_(std::move(layer_name)), shape_(shape), bits_(std::move(bits)) {
  shape_.validate();
  if (bits_.size() != shape_.cells()) {
    throw ShapeError("mask '" + name_ + "' has " + std::to_string(bits_.size()) +
                     " cells, shape needs " + std::to_string(shape_.cells()));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t SparseMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::size_t SparseMask::row_count(std::size_t r) const {
  auto row_bits = row(r);
  return static_cast<std::size_t>(std::count(row_bits.begin(), row_bits.end(), 1));
}

std::vector<std::uint32_t> SparseMask::row_support(std::size_t r) const {
  std::vector<std::uint32_t> out;
  auto row_bits = row(r);
  for (std::size_t c = 0; c < row_bits.size(); ++c) {
    if (row_bits[c]) out.push_back(static_cast<std::uint32_t>(c));
  }
  return out;
}

WeightTensor::WeightTensor(std::string layer_name, LayerShape shape)
    : name_(std::move(layer_name)), shape_(shape), values_(shape.cells(), 0.0f) {
  shape_.validate();
}

WeightTensor::WeightTensor(std::string layer_name, LayerShape shape,
                           std::vector<float> values)
    : name_(std::move(layer_name)), shape_(shape), values_(std::move(values)) {
  shape_.validate();
  if (values_.size() != shape_.cells()) {
    throw ShapeError("weights '" + name_ + "' have " +
                     std::to_string(values_.size()) + " values, shape needs " +
                     std::to_string(shape_.cells()));
  }
}

double density(const SparseMask& mask) {
  const auto cells = mask.shape().cells();
  return cells == 0 ? 0.0 : static_cast<double>(mask.count()) / cells;
}

void require_congruent(const SparseMask& mask, const WeightTensor& weights) {
  if (mask.shape() != weights.shape()) {
    throw ShapeError("mask '" + mask.layer_name() + "' and weights '" +
                     weights.layer_name() + "' are not congruent");
  }
}

WeightTensor apply_mask(const WeightTensor& weights, const SparseMask& mask) {
  require_congruent(mask, weights);
  WeightTensor out = weights;
  auto values = out.values();
  auto bits = mask.bits();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!bits[i]) values[i] = 0.0f;
  }
  return out;
}

}  // namespace sltk
