#include "sltk/refill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sltk/errors.hpp"

namespace sltk {
namespace {

SparseMask keep_top(const SparseMask& mask, const std::vector<std::size_t>& ranked,
                    std::size_t keep) {
  SparseMask out(mask.layer_name(), mask.shape(), false);
  keep = std::min(keep, ranked.size());
  for (std::size_t i = 0; i < keep; ++i) {
    for (std::size_t c = 0; c < out.cols(); ++c) out.set(ranked[i], c, true);
  }
  return out;
}

}  // namespace

ChannelCriterion parse_criterion(std::string_view name) {
  if (name == "l1_weight") return ChannelCriterion::kL1Weight;
  if (name == "remaining_count") return ChannelCriterion::kRemainingCount;
  throw CriterionError("unknown channel criterion '" + std::string(name) +
                       "' (expected l1_weight or remaining_count)");
}

std::string_view criterion_name(ChannelCriterion criterion) {
  switch (criterion) {
    case ChannelCriterion::kL1Weight:
      return "l1_weight";
    case ChannelCriterion::kRemainingCount:
      return "remaining_count";
  }
  throw CriterionError("unknown channel criterion");
}

ChannelScore score_channels(const SparseMask& mask, const WeightTensor& weights,
                            ChannelCriterion criterion) {
  require_congruent(mask, weights);
  ChannelScore out{mask.layer_name(), criterion, std::vector<double>(mask.rows(), 0.0)};
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      if (!mask.test(r, c)) continue;
      switch (criterion) {
        case ChannelCriterion::kL1Weight:
          s += std::fabs(static_cast<double>(weights.at(r, c)));
          break;
        case ChannelCriterion::kRemainingCount:
          s += 1.0;
          break;
        default:
          throw CriterionError("unknown channel criterion");
      }
    }
    out.scores[r] = s;
  }
  return out;
}

std::vector<std::size_t> rank_channels(const ChannelScore& score) {
  std::vector<std::size_t> order(score.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score.scores[a] > score.scores[b];
  });
  return order;
}

std::size_t refill_channel_count(const SparseMask& mask) {
  const std::size_t set = mask.count();
  if (set == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(density(mask) * mask.rows()));
  return std::clamp<std::size_t>(k, 1, mask.rows());
}

SparseMask refill(const SparseMask& mask, const WeightTensor& weights,
                  ChannelCriterion criterion) {
  const auto ranked = rank_channels(score_channels(mask, weights, criterion));
  return keep_top(mask, ranked, refill_channel_count(mask));
}

SparseMask refill_plus(const SparseMask& mask, const WeightTensor& weights,
                       ChannelCriterion criterion, double extra_fraction) {
  if (!(extra_fraction >= 0.0 && extra_fraction < 1.0)) {
    throw ParameterError("refill+ extra fraction must lie in [0, 1)");
  }
  if (mask.count() == 0) return SparseMask(mask.layer_name(), mask.shape(), false);
  const auto ranked = rank_channels(score_channels(mask, weights, criterion));
  const auto extra = static_cast<std::size_t>(
      std::ceil(extra_fraction * static_cast<double>(mask.rows()) - 1e-12));
  return keep_top(mask, ranked, refill_channel_count(mask) + extra);
}

bool is_channel_structured(const SparseMask& mask) {
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    const auto n = mask.row_count(r);
    if (n != 0 && n != mask.cols()) return false;
  }
  return true;
}

}  // namespace sltk
