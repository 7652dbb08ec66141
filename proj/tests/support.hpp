#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sltk/mask.hpp"

namespace testing_support {

inline sltk::SparseMask random_mask(std::mt19937_64& rng, const std::string& name,
                                    sltk::LayerShape shape, double density) {
  sltk::SparseMask m(name, shape, false);
  std::bernoulli_distribution keep(density);
  for (auto& b : m.bits()) b = keep(rng) ? 1 : 0;
  return m;
}

inline sltk::WeightTensor random_weights(std::mt19937_64& rng, const std::string& name,
                                         sltk::LayerShape shape) {
  sltk::WeightTensor w(name, shape);
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (auto& v : w.values()) v = d(rng);
  return w;
}

inline sltk::LayerShape matrix_shape(std::uint32_t rows, std::uint32_t cols) {
  return {rows, cols, 1, 1, 1, 0};
}

}  // namespace testing_support
