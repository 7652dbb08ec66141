#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sltk/manifest.hpp"
#include "sltk/mask.hpp"
#include "sltk/regroup.hpp"

namespace sltk {

struct Hw {
  std::uint32_t height = 1;
  std::uint32_t width = 1;

  std::uint64_t area() const { return std::uint64_t{height} * width; }
  friend bool operator==(const Hw&, const Hw&) = default;
};

// Parses "HxW" (e.g. "32x32"); throws ParameterError.
Hw parse_hw(std::string_view text);

// Output spatial size of a convolution; throws ShapeError when the kernel
// does not fit the padded input.
Hw conv_output_hw(const LayerShape& shape, Hw input);

// How a layer's weights are retained: dense, an arbitrary mask, or a block
// layout. Pointers are borrowed for the duration of the call.
using LayerStructure = std::variant<std::monostate, const SparseMask*, const BlockLayout*>;

struct LayerReport {
  std::string name;
  bool counted = true;  // false for classification heads (prunable = 0)
  double sparsity = 0.0;
  Hw output_hw;
  std::uint64_t dense_macs = 0;
  std::uint64_t macs = 0;
  std::uint32_t retained_out_channels = 0;
  std::uint32_t retained_in_channels = 0;
};

// MAC accounting for convolution layers: one multiply-accumulate counts as
// one FLOP unit.
struct SparsityReport {
  std::vector<LayerReport> layers;
  double global_sparsity = 0.0;  // over prunable layers
  std::uint64_t total_macs = 0;
  std::uint64_t dense_total_macs = 0;

  // Line-oriented key=value rendering with a header comment naming the unit.
  std::string to_text() const;
};

// Dense MACs are c_out * n * H_out * W_out. Masks count set bits whose input
// channel is still produced by the source layer (rows with no set bit are
// dropped channels). Block layouts count sum(rows * cols) * H_out * W_out.
// `structure` may be empty (all dense) or hold one entry per layer.
SparsityReport flops(std::span<const LayerSpec> layers, Hw input,
                     std::span<const LayerStructure> structure = {});

// Architecture shape file: one layer per line,
//   name c_out c_in k_h k_w stride padding prunable [from=<layer>]
// fields separated by whitespace or commas, plus the directives
// `pool <k>` and `gap` applying to the preceding layer.
std::vector<LayerSpec> parse_architecture(std::string_view text);
std::vector<LayerSpec> load_architecture(const std::string& path);

// Topology (source, pool, global pool) round-trips through manifest keys
// prefixed "topology.".
void write_topology(std::span<const LayerSpec> layers, Manifest& manifest);
void read_topology(std::vector<LayerSpec>& layers, Manifest& manifest);

}  // namespace sltk
