#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sltk/mask.hpp"

namespace sltk {

// Per-layer pruning eligibility; an empty vector marks every layer prunable.
// Classification heads are normally excluded.
using PrunableFlags = std::vector<bool>;

// Clears exactly floor(fraction * remaining) set bits across the prunable
// layers, choosing the globally smallest |weight|. Ties go to the lower
// (layer index, row-major index). fraction must lie in [0, 1).
std::vector<SparseMask> global_magnitude_prune(
    std::span<const WeightTensor> weights, std::span<const SparseMask> masks,
    double fraction, const PrunableFlags& prunable = {});

// One global magnitude prune to the requested sparsity over the prunable
// layers: the remaining count becomes round((1 - target) * total bits).
std::vector<SparseMask> one_shot_magnitude_prune(
    std::span<const WeightTensor> weights, std::span<const SparseMask> masks,
    double target_sparsity, const PrunableFlags& prunable = {});

// Clears a uniformly random subset of set bits so the prunable layers reach
// the target sparsity. Deterministic under `seed`.
std::vector<SparseMask> random_prune(std::span<const SparseMask> masks,
                                     double target_sparsity, std::uint64_t seed,
                                     const PrunableFlags& prunable = {});

// 1 - set bits / total bits over the prunable layers.
double global_sparsity(std::span<const SparseMask> masks,
                       const PrunableFlags& prunable = {});

// True when every bit of `inner` is also set in `outer`.
bool is_subset(const SparseMask& inner, const SparseMask& outer);

}  // namespace sltk
