#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sltk/manifest.hpp"
#include "sltk/mask.hpp"
#include "sltk/regroup.hpp"

namespace sltk {

inline constexpr std::uint32_t kImageSide = 16;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;

struct Dataset {
  std::vector<float> pixels;          // size() * kImagePixels
  std::vector<std::uint8_t> labels;   // 0 = oriented bar, 1 = blob

  std::size_t size() const { return labels.size(); }
  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(pixels).subspan(i * kImagePixels, kImagePixels);
  }
};

struct TaskConfig {
  std::size_t train = 1000;
  std::size_t val = 200;
  std::size_t test = 400;
  double noise = 0.3;
  std::uint64_t seed = 42;
};

// Two-class 16x16 single-channel images: a thin oriented bar or a round
// blob, both at random position, size and contrast, plus Gaussian noise.
// Labels alternate so every split is balanced to within one sample.
struct SyntheticTask {
  Dataset train;
  Dataset val;
  Dataset test;

  static SyntheticTask generate(const TaskConfig& config = {});
};

// conv 1->8 (3x3) -> conv 8->16 (3x3, stride 2) -> conv 16->32 (3x3,
// stride 2) -> global average pool -> linear 32->2. Convolutions are
// bias-free and followed by ReLU; only the head carries a bias.
struct TinyModel {
  std::vector<LayerSpec> layers;
  std::vector<WeightTensor> weights;
  std::vector<float> head_bias;

  static std::vector<LayerSpec> architecture();
  // Kaiming-normal convolutions, uniform head, zero bias.
  static TinyModel create(std::uint64_t seed);

  std::size_t parameter_count() const;
  std::array<float, 2> logits(std::span<const float> image) const;
  int predict(std::span<const float> image) const;

  // Zeroes weights outside the masks (one mask per layer).
  void apply(std::span<const SparseMask> masks);

  friend bool operator==(const TinyModel&, const TinyModel&) = default;
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 0.05;  // x0.1 at 50% and 75% of epochs
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int rewind_epoch = -1;         // -1: round(5% of epochs)
  std::uint64_t seed = 42;
  double prune_fraction = 0.2;
  int max_rounds = 10;

  int resolved_rewind_epoch() const;
  double learning_rate_at(int epoch) const;
  void validate() const;
  void write(Manifest& manifest) const;
};

struct TrainOptions {
  // One mask per layer; empty trains densely.
  std::span<const SparseMask> masks;
  int start_epoch = 0;
};

struct TrainResult {
  TinyModel model;
  // Weights at the end of the rewind epoch, captured when training passes it.
  std::optional<TinyModel> rewound;
  double best_val_accuracy = 0.0;
  double test_accuracy = 0.0;
};

double evaluate(const TinyModel& model, const Dataset& data);

// Cross-entropy loss of one example and its gradient with respect to every
// weight (one vector per layer, same layout as the weight tensor) and the
// head bias.
struct LossGradient {
  double loss = 0.0;
  std::vector<std::vector<float>> weights;
  std::vector<float> bias;
};
LossGradient loss_and_gradient(const TinyModel& model, std::span<const float> image, int label);

// Minibatch SGD with momentum and weight decay. Masked positions get no
// gradient and stay exactly zero. Throws TrainingError on a non-finite loss.
TrainResult train(const TinyModel& model, const SyntheticTask& task, const TrainConfig& config,
                  const TrainOptions& options = {});

struct ImpState {
  TinyModel theta_0;
  TinyModel theta_i;
  std::vector<SparseMask> masks;
  int round = 0;
};

struct RoundRecord {
  int round = 0;
  double sparsity = 0.0;  // over prunable layers
  double accuracy = 0.0;  // test accuracy after retraining
  std::vector<SparseMask> masks;
  std::vector<BlockLayout> layouts;  // empty for unstructured rounds
  std::vector<WeightTensor> weights; // trained weights at the end of the round
};

struct ImpResult {
  ImpState state;
  std::vector<RoundRecord> rounds;  // rounds[0] is the dense run
  TinyModel final_model;
};

// Dense training (capturing the rewind snapshot), then `rounds` cycles of
// prune 20% of remaining -> rewind -> retrain.
ImpResult imp(const TinyModel& model, const SyntheticTask& task, const TrainConfig& config,
              int rounds);

enum class TicketInit { kRewound, kRandomReinit };

// Retrains a fixed structure for epochs - rewind_epoch epochs from either the
// rewound snapshot or a fresh initialisation drawn from `reinit_seed`.
// Returns test accuracy.
double run_ticket(std::span<const SparseMask> masks, const SyntheticTask& task,
                  const TrainConfig& config, TicketInit init, const ImpState& state,
                  std::uint64_t reinit_seed = 7);
double run_ticket(std::span<const BlockLayout> layouts, const SyntheticTask& task,
                  const TrainConfig& config, TicketInit init, const ImpState& state,
                  std::uint64_t reinit_seed = 7);

using RegroupPolicy = std::function<RegroupParams(const LayerSpec&)>;

// t1 = max(1, rows / 8), t2 = 4, b1 = 4, b2 = 4: small blocks for the tiny
// model's 8/16/32-row layers.
RegroupPolicy tiny_regroup_policy(std::uint64_t seed = 42);

// Regroups every prunable layer; other layers get a single block covering
// the whole matrix.
std::pair<std::vector<SparseMask>, std::vector<BlockLayout>> regroup_layers(
    std::span<const LayerSpec> layers, std::span<const SparseMask> masks,
    std::span<const WeightTensor> weights, const RegroupPolicy& policy);

// Group-aware IMP: every round prunes, regroups, rewinds and retrains, until
// the sparsity reaches `target_sparsity` or config.max_rounds rounds ran.
// The returned records exclude the dense run.
std::vector<RoundRecord> group_aware_imp(const TinyModel& model, const SyntheticTask& task,
                                         const TrainConfig& config, const RegroupPolicy& policy,
                                         double target_sparsity);
std::vector<RoundRecord> group_aware_imp(const TinyModel& model, const SyntheticTask& task,
                                         const TrainConfig& config, const RegroupParams& params,
                                         double target_sparsity);

}  // namespace sltk
