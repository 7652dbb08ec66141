#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sltk/flops.hpp"
#include "sltk/mask.hpp"
#include "sltk/regroup.hpp"

namespace sltk {

// channels x height x width, row-major, 32-bit floats.
struct FeatureMap {
  std::uint32_t channels = 1;
  std::uint32_t height = 1;
  std::uint32_t width = 1;
  std::vector<float> values;

  FeatureMap() = default;
  FeatureMap(std::uint32_t c, std::uint32_t h, std::uint32_t w)
      : channels(c), height(h), width(w), values(std::size_t{c} * h * w, 0.0f) {}

  Hw hw() const { return {height, width}; }
  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return values[(c * height + y) * width + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * height + y) * width + x];
  }
};

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  float* row(std::size_t r) { return data.data() + r * cols; }
  const float* row(std::size_t r) const { return data.data() + r * cols; }
};

// Compressed sparse rows over the c_out x n weight matrix.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> row_ptr;
  std::vector<std::uint32_t> col_idx;
  std::vector<float> values;

  std::size_t nnz() const { return values.size(); }
};

CsrMatrix to_csr(const WeightTensor& weights, const SparseMask& mask);

// n x (H_out * W_out) patch matrix; row index follows the weight column order
// (input channel, k_h, k_w).
Matrix im2col(const FeatureMap& input, const LayerShape& shape);

FeatureMap dense_conv(const WeightTensor& weights, const FeatureMap& input);

// Equivalent to dense_conv(weights ⊙ mask, input).
FeatureMap masked_conv_csr(const WeightTensor& weights, const SparseMask& mask,
                           const FeatureMap& input);

struct RowSplit {
  std::size_t aligned = 0;    // floor(r / 32) * 32
  std::size_t remainder = 0;  // r mod 32
};

inline constexpr std::size_t kRowTile = 32;

RowSplit row_split(std::size_t row_count);

// Per block, multiplies the dense rows x cols weight sub-matrix with the
// matching patch rows. The 32-aligned row part is computed in 32-row tiles
// that stage a chunk of output positions; the remainder rows keep their
// weights and output chunk resident. Both paths sum each output over the
// block columns in ascending order. Throws LayoutError for overlapping
// blocks.
FeatureMap block_conv(const BlockLayout& layout, const WeightTensor& weights,
                      const FeatureMap& input);

std::uint64_t block_macs(const BlockLayout& layout, Hw output_hw);

// max_i |a_i - b_i| <= rel * max_i |reference_i| + abs.
bool outputs_agree(const FeatureMap& a, const FeatureMap& reference, double rel, double abs = 1e-7);

enum class Executor { kDense, kCsr, kBlock };

std::string_view executor_name(Executor e);
Executor parse_executor(std::string_view name);

struct BenchLayer {
  WeightTensor weights;
  SparseMask mask;
  std::optional<BlockLayout> layout;
  FeatureMap input;
};

struct BenchRow {
  std::string layer;
  Executor executor = Executor::kDense;
  double wall_ms_median = 0.0;
  std::uint64_t macs = 0;
  double checksum = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<std::string> notes;

  // Header `layer,executor,wall_ms_median,macs,checksum`, one row per
  // (layer, executor).
  std::string to_csv() const;
};

// Times every executor on every layer (one warm-up run, then the median of
// `repeats` runs). MACs are analytic. The block executor is skipped for
// layers without a layout. Throws ConsistencyError when an executor's output
// differs from the first executor's beyond `tolerance` (relative).
BenchReport bench(std::span<const BenchLayer> layers, std::span<const Executor> executors,
                  int repeats, double tolerance = 1e-4);

}  // namespace sltk
