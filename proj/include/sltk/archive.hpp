#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sltk/manifest.hpp"
#include "sltk/mask.hpp"
#include "sltk/prune.hpp"
#include "sltk/regroup.hpp"

namespace sltk {

inline constexpr std::uint16_t kArchiveVersion = 1;

// Mask archive ("SLTK" container):
//   magic "SLTK" | u16 version | u32 layer count
//   per layer: u16 name length, name bytes, u32 c_out c_in k_h k_w stride
//              padding, u8 prunable, mask rows (each padded to whole bytes,
//              bit j of a row in byte j/8 at bit position j%8), c_out*n f32
//   optional:  u32 metadata length + key=value text
//   optional:  per layer u32 block count; per block u32 row count + rows,
//              u32 col count + cols
// All integers and floats are little-endian. The metadata section is always
// present when block layouts follow it.
struct Archive {
  std::vector<LayerSpec> layers;
  std::vector<SparseMask> masks;
  std::vector<WeightTensor> weights;
  std::optional<std::vector<BlockLayout>> layouts;
  // User metadata. Keys prefixed "topology." are reserved for LayerSpec
  // topology and are folded into `layers` on load.
  Manifest metadata;

  PrunableFlags prunable() const;

  // Throws ShapeError / LayoutError if the parallel vectors disagree.
  void validate() const;

  friend bool operator==(const Archive&, const Archive&) = default;
};

// Builds an archive with all-ones masks and the given weights.
Archive make_dense_archive(std::vector<LayerSpec> layers, std::vector<WeightTensor> weights);

std::string encode_archive(const Archive& archive);

// `source` names the input in error messages. Throws FormatError (with byte
// offset) or VersionError.
Archive decode_archive(std::string_view bytes, const std::string& source = "<memory>");

void save_archive(const std::string& path, const Archive& archive);
Archive load_archive(const std::string& path);

}  // namespace sltk
