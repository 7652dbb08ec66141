#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sltk/mask.hpp"

namespace sltk {

// Output-channel importance criteria. Feature-map and saliency criteria need
// activations or gradients and are not provided.
enum class ChannelCriterion {
  kL1Weight,        // sum_j |m_ij * w_ij|
  kRemainingCount,  // sum_j m_ij
};

// Accepts "l1_weight" and "remaining_count"; throws CriterionError otherwise.
ChannelCriterion parse_criterion(std::string_view name);
std::string_view criterion_name(ChannelCriterion criterion);

struct ChannelScore {
  std::string layer_name;
  ChannelCriterion criterion = ChannelCriterion::kL1Weight;
  std::vector<double> scores;  // one per output channel, nonnegative
};

ChannelScore score_channels(const SparseMask& mask, const WeightTensor& weights,
                            ChannelCriterion criterion);

// Channel indices ordered by descending score, lower index first on ties.
std::vector<std::size_t> rank_channels(const ChannelScore& score);

// Number of channels Refill keeps: round(density * c_out), at least one when
// any bit is set.
std::size_t refill_channel_count(const SparseMask& mask);

// Keeps the top-k scored channels as all-ones rows and clears every other
// row. A mask with no set bits stays all-zeros.
SparseMask refill(const SparseMask& mask, const WeightTensor& weights,
                  ChannelCriterion criterion);

inline constexpr double kDefaultRefillPlusFraction = 0.1;

// Refill plus the next ceil(extra_fraction * c_out) ranked channels. An
// all-zeros mask stays all-zeros.
SparseMask refill_plus(const SparseMask& mask, const WeightTensor& weights,
                       ChannelCriterion criterion,
                       double extra_fraction = kDefaultRefillPlusFraction);

// True when every row is all-ones or all-zeros.
bool is_channel_structured(const SparseMask& mask);

}  // namespace sltk
