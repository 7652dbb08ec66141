#include "sltk/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "sltk/errors.hpp"
#include "sltk/exec.hpp"
#include "sltk/parallel.hpp"
#include "sltk/prune.hpp"

namespace sltk {
namespace {

constexpr std::size_t kConvLayers = 3;
constexpr std::size_t kClasses = 2;

// Uniform index in [0, bound) from raw engine output; portable across
// standard libraries.
std::size_t draw_index(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>(rng() % bound);
}

double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

double draw_normal(std::mt19937_64& rng) {
  // Box-Muller; keeps generated data identical across standard libraries.
  const double u1 = std::max(draw_uniform(rng, 0.0, 1.0), 1e-300);
  const double u2 = draw_uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = ax + t * dx - px;
  const double qy = ay + t * dy - py;
  return std::sqrt(qx * qx + qy * qy);
}

Dataset generate_split(std::size_t count, double noise, std::mt19937_64& rng) {
  Dataset d;
  d.pixels.assign(count * kImagePixels, 0.0f);
  d.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = static_cast<std::uint8_t>(i % 2);
    d.labels[i] = label;
    float* img = d.pixels.data() + i * kImagePixels;
    const double amp = draw_uniform(rng, 0.8, 1.4);
    const double cx = draw_uniform(rng, 4.0, 12.0);
    const double cy = draw_uniform(rng, 4.0, 12.0);
    if (label == 0) {
      const double angle = draw_uniform(rng, 0.0, std::numbers::pi);
      const double half = draw_uniform(rng, 4.0, 7.0);
      const double ax = cx - half * std::cos(angle);
      const double ay = cy - half * std::sin(angle);
      const double bx = cx + half * std::cos(angle);
      const double by = cy + half * std::sin(angle);
      for (std::size_t y = 0; y < kImageSide; ++y) {
        for (std::size_t x = 0; x < kImageSide; ++x) {
          const double dist = segment_distance(x + 0.5, y + 0.5, ax, ay, bx, by);
          img[y * kImageSide + x] = static_cast<float>(amp * std::exp(-dist * dist / (2 * 0.36)));
        }
      }
    } else {
      const double radius = draw_uniform(rng, 1.6, 2.8);
      for (std::size_t y = 0; y < kImageSide; ++y) {
        for (std::size_t x = 0; x < kImageSide; ++x) {
          const double dx = x + 0.5 - cx;
          const double dy = y + 0.5 - cy;
          img[y * kImageSide + x] =
              static_cast<float>(amp * std::exp(-(dx * dx + dy * dy) / (2 * radius * radius)));
        }
      }
    }
    for (std::size_t p = 0; p < kImagePixels; ++p) {
      img[p] += static_cast<float>(noise * draw_normal(rng));
    }
  }
  return d;
}

// z (c_out x P) = W (c_out x n) * patches (n x P)
void matmul(const WeightTensor& w, const Matrix& patches, std::vector<float>& z) {
  const std::size_t rows = w.rows();
  const std::size_t positions = patches.cols;
  z.assign(rows * positions, 0.0f);
  for (std::size_t r = 0; r < rows; ++r) {
    float* dst = z.data() + r * positions;
    for (std::size_t j = 0; j < patches.rows; ++j) {
      const float wv = w.at(r, j);
      if (wv == 0.0f) continue;
      const float* x = patches.row(j);
      for (std::size_t p = 0; p < positions; ++p) dst[p] += wv * x[p];
    }
  }
}

// Scatters patch-matrix gradients back onto the input feature map.
void col2im(const Matrix& dpatches, const LayerShape& shape, Hw in_hw, Hw out_hw,
            std::vector<float>& dinput) {
  dinput.assign(std::size_t{shape.c_in} * in_hw.area(), 0.0f);
  const auto pad = static_cast<std::int64_t>(shape.padding);
  std::size_t j = 0;
  for (std::size_t c = 0; c < shape.c_in; ++c) {
    for (std::size_t ky = 0; ky < shape.k_h; ++ky) {
      for (std::size_t kx = 0; kx < shape.k_w; ++kx, ++j) {
        const float* src = dpatches.row(j);
        for (std::size_t oy = 0; oy < out_hw.height; ++oy) {
          const auto iy = static_cast<std::int64_t>(oy * shape.stride + ky) - pad;
          if (iy < 0 || iy >= in_hw.height) continue;
          for (std::size_t ox = 0; ox < out_hw.width; ++ox) {
            const auto ix = static_cast<std::int64_t>(ox * shape.stride + kx) - pad;
            if (ix < 0 || ix >= in_hw.width) continue;
            dinput[(c * in_hw.height + static_cast<std::size_t>(iy)) * in_hw.width +
                   static_cast<std::size_t>(ix)] += src[oy * out_hw.width + ox];
          }
        }
      }
    }
  }
}

struct Forward {
  std::array<Matrix, kConvLayers> patches;
  std::array<std::vector<float>, kConvLayers> pre;  // pre-activation, c_out x P
  std::array<Hw, kConvLayers> in_hw;
  std::array<Hw, kConvLayers> out_hw;
  std::vector<float> pooled;
  std::array<float, kClasses> logits{};
};

void forward(const TinyModel& m, std::span<const float> image, Forward& f) {
  FeatureMap x(1, kImageSide, kImageSide);
  std::copy(image.begin(), image.end(), x.values.begin());
  for (std::size_t l = 0; l < kConvLayers; ++l) {
    const auto& shape = m.weights[l].shape();
    f.in_hw[l] = x.hw();
    f.patches[l] = im2col(x, shape);
    f.out_hw[l] = conv_output_hw(shape, x.hw());
    matmul(m.weights[l], f.patches[l], f.pre[l]);
    FeatureMap next(shape.c_out, f.out_hw[l].height, f.out_hw[l].width);
    for (std::size_t i = 0; i < next.values.size(); ++i) next.values[i] = std::max(0.0f, f.pre[l][i]);
    x = std::move(next);
  }
  const std::size_t channels = x.channels;
  const std::size_t area = x.hw().area();
  f.pooled.assign(channels, 0.0f);
  for (std::size_t c = 0; c < channels; ++c) {
    float s = 0.0f;
    for (std::size_t p = 0; p < area; ++p) s += x.values[c * area + p];
    f.pooled[c] = s / static_cast<float>(area);
  }
  const auto& head = m.weights[kConvLayers];
  for (std::size_t k = 0; k < kClasses; ++k) {
    float s = m.head_bias[k];
    for (std::size_t c = 0; c < channels; ++c) s += head.at(k, c) * f.pooled[c];
    f.logits[k] = s;
  }
}

struct Gradients {
  std::vector<std::vector<float>> weights;
  std::vector<float> bias;

  explicit Gradients(const TinyModel& m) : bias(m.head_bias.size(), 0.0f) {
    for (const auto& w : m.weights) weights.emplace_back(w.values().size(), 0.0f);
  }
  void clear() {
    for (auto& g : weights) std::fill(g.begin(), g.end(), 0.0f);
    std::fill(bias.begin(), bias.end(), 0.0f);
  }
};

// Accumulates gradients of the cross-entropy loss; returns the loss.
float backward(const TinyModel& m, const Forward& f, int label, Gradients& g) {
  const float peak = std::max(f.logits[0], f.logits[1]);
  const float e0 = std::exp(f.logits[0] - peak);
  const float e1 = std::exp(f.logits[1] - peak);
  const float total = e0 + e1;
  const std::array<float, kClasses> prob{e0 / total, e1 / total};
  const float loss = -std::log(std::max(prob[static_cast<std::size_t>(label)], 1e-30f));

  std::array<float, kClasses> dlogits{prob[0], prob[1]};
  dlogits[static_cast<std::size_t>(label)] -= 1.0f;

  const auto& head = m.weights[kConvLayers];
  const std::size_t channels = f.pooled.size();
  std::vector<float> dpooled(channels, 0.0f);
  auto& ghead = g.weights[kConvLayers];
  for (std::size_t k = 0; k < kClasses; ++k) {
    g.bias[k] += dlogits[k];
    for (std::size_t c = 0; c < channels; ++c) {
      ghead[k * channels + c] += dlogits[k] * f.pooled[c];
      dpooled[c] += head.at(k, c) * dlogits[k];
    }
  }

  // Gradient w.r.t. the last conv layer's post-ReLU output.
  const std::size_t last = kConvLayers - 1;
  const std::size_t area = f.out_hw[last].area();
  std::vector<float> dact(channels * area);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < area; ++p) dact[c * area + p] = dpooled[c] / static_cast<float>(area);
  }

  Matrix dpatches;
  std::vector<float> dinput;
  for (std::size_t l = kConvLayers; l-- > 0;) {
    const auto& w = m.weights[l];
    const auto& patches = f.patches[l];
    const std::size_t rows = w.rows();
    const std::size_t positions = patches.cols;
    std::vector<float>& dz = dact;
    for (std::size_t i = 0; i < dz.size(); ++i) {
      if (f.pre[l][i] <= 0.0f) dz[i] = 0.0f;
    }
    auto& gw = g.weights[l];
    for (std::size_t r = 0; r < rows; ++r) {
      const float* dzr = dz.data() + r * positions;
      for (std::size_t j = 0; j < patches.rows; ++j) {
        const float* x = patches.row(j);
        float s = 0.0f;
        for (std::size_t p = 0; p < positions; ++p) s += dzr[p] * x[p];
        gw[r * patches.rows + j] += s;
      }
    }
    if (l == 0) break;
    dpatches = Matrix{patches.rows, positions, std::vector<float>(patches.rows * positions, 0.0f)};
    for (std::size_t r = 0; r < rows; ++r) {
      const float* dzr = dz.data() + r * positions;
      for (std::size_t j = 0; j < patches.rows; ++j) {
        const float wv = w.at(r, j);
        if (wv == 0.0f) continue;
        float* dst = dpatches.row(j);
        for (std::size_t p = 0; p < positions; ++p) dst[p] += wv * dzr[p];
      }
    }
    col2im(dpatches, w.shape(), f.in_hw[l], f.out_hw[l], dinput);
    dact = std::move(dinput);
    dinput.clear();
  }
  return loss;
}

std::vector<SparseMask> dense_masks(const TinyModel& m) {
  std::vector<SparseMask> out;
  for (const auto& spec : m.layers) out.emplace_back(spec.name, spec.shape, true);
  return out;
}

PrunableFlags prunable_flags(const TinyModel& m) {
  PrunableFlags out;
  for (const auto& spec : m.layers) out.push_back(spec.prunable);
  return out;
}

TinyModel masked_copy(const TinyModel& m, std::span<const SparseMask> masks) {
  TinyModel out = m;
  out.apply(masks);
  return out;
}

}  // namespace

SyntheticTask SyntheticTask::generate(const TaskConfig& config) {
  std::mt19937_64 rng(config.seed);
  SyntheticTask task;
  task.train = generate_split(config.train, config.noise, rng);
  task.val = generate_split(config.val, config.noise, rng);
  task.test = generate_split(config.test, config.noise, rng);
  return task;
}

std::vector<LayerSpec> TinyModel::architecture() {
  std::vector<LayerSpec> layers(4);
  layers[0] = {"conv1", {8, 1, 3, 3, 1, 1}, true, "", 1, false};
  layers[1] = {"conv2", {16, 8, 3, 3, 2, 1}, true, "", 1, false};
  layers[2] = {"conv3", {32, 16, 3, 3, 2, 1}, true, "", 1, true};
  layers[3] = {"head", {2, 32, 1, 1, 1, 0}, false, "", 1, false};
  return layers;
}

LossGradient loss_and_gradient(const TinyModel& model, std::span<const float> image, int label) {
  if (label < 0 || label >= static_cast<int>(kClasses)) throw ParameterError("label out of range");
  Forward f;
  forward(model, image, f);
  Gradients g(model);
  const float loss = backward(model, f, label, g);
  return {loss, std::move(g.weights), std::move(g.bias)};
}

TinyModel TinyModel::create(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TinyModel m;
  m.layers = architecture();
  for (const auto& spec : m.layers) {
    WeightTensor w(spec.name, spec.shape);
    const double fan_in = static_cast<double>(spec.shape.n());
    for (auto& v : w.values()) {
      v = spec.prunable ? static_cast<float>(std::sqrt(2.0 / fan_in) * draw_normal(rng))
                        : static_cast<float>(draw_uniform(rng, -1.0, 1.0) / std::sqrt(fan_in));
    }
    m.weights.push_back(std::move(w));
  }
  m.head_bias.assign(kClasses, 0.0f);
  return m;
}

std::size_t TinyModel::parameter_count() const {
  std::size_t n = head_bias.size();
  for (const auto& w : weights) n += w.values().size();
  return n;
}

std::array<float, 2> TinyModel::logits(std::span<const float> image) const {
  Forward f;
  forward(*this, image, f);
  return f.logits;
}

int TinyModel::predict(std::span<const float> image) const {
  const auto l = logits(image);
  return l[1] > l[0] ? 1 : 0;
}

void TinyModel::apply(std::span<const SparseMask> masks) {
  if (masks.empty()) return;
  if (masks.size() != weights.size()) throw ShapeError("mask count does not match layer count");
  for (std::size_t l = 0; l < weights.size(); ++l) weights[l] = apply_mask(weights[l], masks[l]);
}

int TrainConfig::resolved_rewind_epoch() const {
  return rewind_epoch >= 0 ? rewind_epoch : static_cast<int>(std::lround(0.05 * epochs));
}

double TrainConfig::learning_rate_at(int epoch) const {
  double lr = learning_rate;
  if (epoch >= epochs / 2) lr *= 0.1;
  if (epoch >= (3 * epochs) / 4) lr *= 0.1;
  return lr;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ParameterError("epochs must be >= 0");
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ParameterError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ParameterError("weight decay must be >= 0");
  const int rewind = resolved_rewind_epoch();
  if (rewind < 0 || (epochs > 0 && rewind >= epochs)) {
    throw ParameterError("rewind epoch must be below the total epoch count");
  }
  if (!(prune_fraction >= 0.0 && prune_fraction < 1.0)) {
    throw ParameterError("prune fraction must lie in [0, 1)");
  }
  if (max_rounds < 1) throw ParameterError("max rounds must be >= 1");
}

void TrainConfig::write(Manifest& manifest) const {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  manifest.set("config.epochs", std::to_string(epochs));
  manifest.set("config.batch_size", std::to_string(batch_size));
  manifest.set("config.learning_rate", num(learning_rate));
  manifest.set("config.momentum", num(momentum));
  manifest.set("config.weight_decay", num(weight_decay));
  manifest.set("config.rewind_epoch", std::to_string(resolved_rewind_epoch()));
  manifest.set("config.prune_fraction", num(prune_fraction));
  manifest.set("config.max_rounds", std::to_string(max_rounds));
  manifest.set("config.seed", std::to_string(seed));
}

double evaluate(const TinyModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    correct += model.predict(data.image(i)) == data.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const TinyModel& model, const SyntheticTask& task, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  const int rewind = config.resolved_rewind_epoch();
  if (options.start_epoch < 0 || options.start_epoch > config.epochs) {
    throw ParameterError("start epoch out of range");
  }

  TrainResult result;
  result.model = masked_copy(model, options.masks);
  TinyModel& m = result.model;
  if (options.start_epoch == rewind) result.rewound = m;
  result.best_val_accuracy = evaluate(m, task.val);

  std::vector<std::vector<float>> velocity;
  for (const auto& w : m.weights) velocity.emplace_back(w.values().size(), 0.0f);
  std::vector<float> bias_velocity(m.head_bias.size(), 0.0f);
  Gradients grads(m);
  Forward f;

  const std::size_t n = task.train.size();
  std::vector<std::size_t> order(n);
  for (int epoch = options.start_epoch; epoch < config.epochs; ++epoch) {
    std::mt19937_64 rng(config.seed * 1000003ull + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[draw_index(rng, i)]);

    const auto lr = static_cast<float>(config.learning_rate_at(epoch));
    const auto mu = static_cast<float>(config.momentum);
    const auto wd = static_cast<float>(config.weight_decay);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      grads.clear();
      float loss = 0.0f;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        forward(m, task.train.image(idx), f);
        loss += backward(m, f, task.train.labels[idx], grads);
      }
      if (!std::isfinite(loss)) throw TrainingError("training loss became non-finite", epoch);
      const float scale = 1.0f / static_cast<float>(end - start);
      for (std::size_t l = 0; l < m.weights.size(); ++l) {
        auto w = m.weights[l].values();
        auto& v = velocity[l];
        const auto& g = grads.weights[l];
        const auto bits = options.masks.empty() ? std::span<const std::uint8_t>{} : options.masks[l].bits();
        for (std::size_t i = 0; i < w.size(); ++i) {
          if (!bits.empty() && !bits[i]) {
            v[i] = 0.0f;
            w[i] = 0.0f;
            continue;
          }
          const float gi = g[i] * scale + wd * w[i];
          v[i] = mu * v[i] + gi;
          w[i] -= lr * v[i];
        }
      }
      for (std::size_t k = 0; k < m.head_bias.size(); ++k) {
        bias_velocity[k] = mu * bias_velocity[k] + grads.bias[k] * scale;
        m.head_bias[k] -= lr * bias_velocity[k];
      }
    }
    for (const auto& w : m.weights) {
      for (float v : w.values()) {
        if (!std::isfinite(v)) throw TrainingError("weights became non-finite", epoch);
      }
    }
    if (epoch + 1 == rewind) result.rewound = m;
    result.best_val_accuracy = std::max(result.best_val_accuracy, evaluate(m, task.val));
  }
  result.test_accuracy = evaluate(m, task.test);
  return result;
}

ImpResult imp(const TinyModel& model, const SyntheticTask& task, const TrainConfig& config,
              int rounds) {
  if (rounds < 1) throw ParameterError("IMP needs at least one round");
  const int rewind = config.resolved_rewind_epoch();
  const auto prunable = prunable_flags(model);

  ImpResult out;
  TrainResult dense = train(model, task, config);
  out.state.theta_0 = model;
  out.state.theta_i = dense.rewound ? *dense.rewound : model;
  out.state.masks = dense_masks(model);
  out.rounds.push_back({0, 0.0, dense.test_accuracy, out.state.masks, {}, dense.model.weights});

  TinyModel trained = std::move(dense.model);
  for (int r = 1; r <= rounds; ++r) {
    out.state.masks = global_magnitude_prune(trained.weights, out.state.masks,
                                             config.prune_fraction, prunable);
    TrainResult retrained =
        train(out.state.theta_i, task, config, TrainOptions{out.state.masks, rewind});
    out.state.round = r;
    out.rounds.push_back({r, global_sparsity(out.state.masks, prunable), retrained.test_accuracy,
                          out.state.masks, {}, retrained.model.weights});
    trained = std::move(retrained.model);
  }
  out.final_model = std::move(trained);
  return out;
}

double run_ticket(std::span<const SparseMask> masks, const SyntheticTask& task,
                  const TrainConfig& config, TicketInit init, const ImpState& state,
                  std::uint64_t reinit_seed) {
  const TinyModel start =
      init == TicketInit::kRewound ? state.theta_i : TinyModel::create(reinit_seed);
  return train(start, task, config, TrainOptions{masks, config.resolved_rewind_epoch()})
      .test_accuracy;
}

double run_ticket(std::span<const BlockLayout> layouts, const SyntheticTask& task,
                  const TrainConfig& config, TicketInit init, const ImpState& state,
                  std::uint64_t reinit_seed) {
  std::vector<SparseMask> masks;
  for (const auto& layout : layouts) masks.push_back(coverage_mask(layout));
  return run_ticket(masks, task, config, init, state, reinit_seed);
}

RegroupPolicy tiny_regroup_policy(std::uint64_t seed) {
  return [seed](const LayerSpec& spec) {
    RegroupParams p;
    p.t1 = std::max(1, static_cast<int>(spec.shape.c_out / 8));
    p.t2 = 4;
    p.b1 = 4;
    p.b2 = 4;
    p.max_iters = 8;
    p.seed = seed;
    return p;
  };
}

std::pair<std::vector<SparseMask>, std::vector<BlockLayout>> regroup_layers(
    std::span<const LayerSpec> layers, std::span<const SparseMask> masks,
    std::span<const WeightTensor> weights, const RegroupPolicy& policy) {
  if (masks.size() != layers.size() || weights.size() != layers.size()) {
    throw ShapeError("regroup needs one mask and weight tensor per layer");
  }
  std::vector<SparseMask> out_masks(layers.size());
  std::vector<BlockLayout> layouts(layers.size());
  parallel_for(layers.size(), [&](std::size_t l) {
    if (layers[l].prunable) {
      auto [mask, layout] = regroup_mask(masks[l], weights[l], policy(layers[l]));
      out_masks[l] = std::move(mask);
      layouts[l] = std::move(layout);
    } else {
      const auto& shape = layers[l].shape;
      DenseBlock full;
      for (std::uint32_t r = 0; r < shape.c_out; ++r) full.rows.push_back(r);
      for (std::uint32_t c = 0; c < shape.n(); ++c) full.cols.push_back(c);
      layouts[l] = BlockLayout{layers[l].name, shape, {std::move(full)}};
      out_masks[l] = coverage_mask(layouts[l]);
    }
  });
  return {std::move(out_masks), std::move(layouts)};
}

std::vector<RoundRecord> group_aware_imp(const TinyModel& model, const SyntheticTask& task,
                                         const TrainConfig& config, const RegroupPolicy& policy,
                                         double target_sparsity) {
  const int rewind = config.resolved_rewind_epoch();
  const auto prunable = prunable_flags(model);
  TrainResult dense = train(model, task, config);
  const TinyModel theta_i = dense.rewound ? *dense.rewound : model;

  std::vector<SparseMask> masks = dense_masks(model);
  TinyModel trained = std::move(dense.model);
  std::vector<RoundRecord> records;
  for (int r = 1; r <= config.max_rounds; ++r) {
    auto pruned = global_magnitude_prune(trained.weights, masks, config.prune_fraction, prunable);
    auto [regrouped, layouts] = regroup_layers(model.layers, pruned, trained.weights, policy);
    masks = std::move(regrouped);
    TrainResult retrained = train(theta_i, task, config, TrainOptions{masks, rewind});
    const double sparsity = global_sparsity(masks, prunable);
    records.push_back(
        {r, sparsity, retrained.test_accuracy, masks, std::move(layouts), retrained.model.weights});
    trained = std::move(retrained.model);
    if (sparsity >= target_sparsity) break;
  }
  return records;
}

std::vector<RoundRecord> group_aware_imp(const TinyModel& model, const SyntheticTask& task,
                                         const TrainConfig& config, const RegroupParams& params,
                                         double target_sparsity) {
  return group_aware_imp(
      model, task, config, [params](const LayerSpec&) { return params; }, target_sparsity);
}

}  // namespace sltk
