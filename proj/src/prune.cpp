#include "sltk/prune.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <tuple>

#include "sltk/errors.hpp"

namespace sltk {
namespace {

struct Candidate {
  float magnitude;
  std::uint32_t layer;
  std::uint64_t index;
};

bool is_prunable(const PrunableFlags& prunable, std::size_t layer) {
  return prunable.empty() || prunable[layer];
}

void check_inputs(std::span<const SparseMask> masks, const PrunableFlags& prunable) {
  if (!prunable.empty() && prunable.size() != masks.size()) {
    throw ParameterError("prunable flag count " + std::to_string(prunable.size()) +
                         " does not match layer count " +
                         std::to_string(masks.size()));
  }
}

void check_fraction(double value, const char* what) {
  if (!(value >= 0.0 && value < 1.0)) {
    throw ParameterError(std::string(what) + " must lie in [0, 1), got " +
                         std::to_string(value));
  }
}

std::vector<Candidate> collect(std::span<const WeightTensor> weights,
                               std::span<const SparseMask> masks,
                               const PrunableFlags& prunable) {
  if (weights.size() != masks.size()) {
    throw ShapeError("got " + std::to_string(weights.size()) + " weight tensors for " +
                     std::to_string(masks.size()) + " masks");
  }
  check_inputs(masks, prunable);
  std::vector<Candidate> out;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    require_congruent(masks[l], weights[l]);
    if (!is_prunable(prunable, l)) continue;
    auto bits = masks[l].bits();
    auto values = weights[l].values();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) {
        out.push_back({std::fabs(values[i]), static_cast<std::uint32_t>(l), i});
      }
    }
  }
  return out;
}

std::vector<SparseMask> clear_smallest(std::vector<Candidate> candidates,
                                       std::span<const SparseMask> masks,
                                       std::size_t count) {
  std::vector<SparseMask> out(masks.begin(), masks.end());
  if (count == 0) return out;
  auto order = [](const Candidate& a, const Candidate& b) {
    return std::tie(a.magnitude, a.layer, a.index) <
           std::tie(b.magnitude, b.layer, b.index);
  };
  auto nth = candidates.begin() + static_cast<std::ptrdiff_t>(count);
  std::nth_element(candidates.begin(), nth - 1, candidates.end(), order);
  for (auto it = candidates.begin(); it != nth; ++it) {
    out[it->layer].bits()[it->index] = 0;
  }
  return out;
}

}  // namespace

std::vector<SparseMask> global_magnitude_prune(std::span<const WeightTensor> weights,
                                               std::span<const SparseMask> masks,
                                               double fraction,
                                               const PrunableFlags& prunable) {
  check_fraction(fraction, "prune fraction");
  auto candidates = collect(weights, masks, prunable);
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(candidates.size())));
  return clear_smallest(std::move(candidates), masks, count);
}

std::vector<SparseMask> one_shot_magnitude_prune(std::span<const WeightTensor> weights,
                                                 std::span<const SparseMask> masks,
                                                 double target_sparsity,
                                                 const PrunableFlags& prunable) {
  check_fraction(target_sparsity, "target sparsity");
  auto candidates = collect(weights, masks, prunable);
  std::size_t total = 0;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    if (is_prunable(prunable, l)) total += masks[l].shape().cells();
  }
  const auto keep = static_cast<std::size_t>(
      std::llround((1.0 - target_sparsity) * static_cast<double>(total)));
  const std::size_t count = candidates.size() > keep ? candidates.size() - keep : 0;
  return clear_smallest(std::move(candidates), masks, count);
}

std::vector<SparseMask> random_prune(std::span<const SparseMask> masks,
                                     double target_sparsity, std::uint64_t seed,
                                     const PrunableFlags& prunable) {
  check_fraction(target_sparsity, "target sparsity");
  check_inputs(masks, prunable);
  std::vector<std::pair<std::uint32_t, std::uint64_t>> set_bits;
  std::size_t total = 0;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    if (!is_prunable(prunable, l)) continue;
    auto bits = masks[l].bits();
    total += bits.size();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) set_bits.emplace_back(static_cast<std::uint32_t>(l), i);
    }
  }
  const auto keep = static_cast<std::size_t>(
      std::llround((1.0 - target_sparsity) * static_cast<double>(total)));
  std::vector<SparseMask> out(masks.begin(), masks.end());
  if (set_bits.size() <= keep) return out;
  const std::size_t count = set_bits.size() - keep;

  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, set_bits.size() - 1);
    std::swap(set_bits[i], set_bits[pick(rng)]);
    out[set_bits[i].first].bits()[set_bits[i].second] = 0;
  }
  return out;
}

double global_sparsity(std::span<const SparseMask> masks, const PrunableFlags& prunable) {
  check_inputs(masks, prunable);
  std::size_t total = 0;
  std::size_t set = 0;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    if (!is_prunable(prunable, l)) continue;
    total += masks[l].shape().cells();
    set += masks[l].count();
  }
  return total == 0 ? 0.0 : 1.0 - static_cast<double>(set) / static_cast<double>(total);
}

bool is_subset(const SparseMask& inner, const SparseMask& outer) {
  if (inner.shape() != outer.shape()) return false;
  auto a = inner.bits();
  auto b = outer.bits();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) return false;
  }
  return true;
}

}  // namespace sltk
