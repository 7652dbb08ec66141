#include "sltk/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sltk/errors.hpp"
#include "sltk/flops.hpp"

namespace sltk {
namespace {

constexpr char kMagic[4] = {'S', 'L', 'T', 'K'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view data, const std::string& source) : data_(data), source_(source) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw FormatError(source_ + ": " + what, at);
  }

  std::string_view take(std::size_t n, const char* what) {
    if (remaining() < n) {
      fail(std::string("truncated archive while reading ") + what, pos_);
    }
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(take(1, what)[0]); }
  std::uint16_t u16(const char* what) {
    auto b = take(2, what);
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[0]) |
                                      (static_cast<std::uint8_t>(b[1]) << 8));
  }
  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<std::uint8_t>(b[i])} << (8 * i);
    return v;
  }

 private:
  std::string_view data_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

void write_indices(Writer& w, const std::vector<std::uint32_t>& idx) {
  w.u32(static_cast<std::uint32_t>(idx.size()));
  for (auto i : idx) w.u32(i);
}

}  // namespace

PrunableFlags Archive::prunable() const {
  PrunableFlags out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.prunable);
  return out;
}

void Archive::validate() const {
  if (masks.size() != layers.size() || weights.size() != layers.size()) {
    throw ShapeError("archive has " + std::to_string(layers.size()) + " layers, " +
                     std::to_string(masks.size()) + " masks and " + std::to_string(weights.size()) +
                     " weight tensors");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (masks[l].shape() != layers[l].shape || masks[l].layer_name() != layers[l].name) {
      throw ShapeError("mask " + std::to_string(l) + " does not match layer '" + layers[l].name + "'");
    }
    require_congruent(masks[l], weights[l]);
  }
  if (layouts) {
    if (layouts->size() != layers.size()) throw LayoutError("layout count does not match layer count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if ((*layouts)[l].shape != layers[l].shape) {
        throw LayoutError("layout for '" + layers[l].name + "' has a different shape");
      }
      validate_layout((*layouts)[l]);
    }
  }
}

Archive make_dense_archive(std::vector<LayerSpec> layers, std::vector<WeightTensor> weights) {
  Archive a;
  for (const auto& l : layers) a.masks.emplace_back(l.name, l.shape, true);
  a.layers = std::move(layers);
  a.weights = std::move(weights);
  a.validate();
  return a;
}

std::string encode_archive(const Archive& archive) {
  archive.validate();
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kArchiveVersion);
  w.u32(static_cast<std::uint32_t>(archive.layers.size()));
  for (std::size_t l = 0; l < archive.layers.size(); ++l) {
    const auto& spec = archive.layers[l];
    if (spec.name.size() > 0xFFFF) throw ParameterError("layer name too long: " + spec.name);
    w.u16(static_cast<std::uint16_t>(spec.name.size()));
    w.bytes(spec.name.data(), spec.name.size());
    const auto& s = spec.shape;
    for (auto v : {s.c_out, s.c_in, s.k_h, s.k_w, s.stride, s.padding}) w.u32(v);
    w.u8(spec.prunable ? 1 : 0);

    const auto& mask = archive.masks[l];
    const std::size_t row_bytes = (mask.cols() + 7) / 8;
    std::vector<std::uint8_t> packed(row_bytes);
    for (std::size_t r = 0; r < mask.rows(); ++r) {
      std::fill(packed.begin(), packed.end(), 0);
      auto bits = mask.row(r);
      for (std::size_t j = 0; j < bits.size(); ++j) {
        if (bits[j]) packed[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
      }
      w.bytes(packed.data(), packed.size());
    }
    for (float v : archive.weights[l].values()) w.f32(v);
  }

  Manifest meta = archive.metadata;
  write_topology(archive.layers, meta);
  if (!meta.empty() || archive.layouts) {
    const std::string text = meta.to_text();
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.bytes(text.data(), text.size());
  }
  if (archive.layouts) {
    for (const auto& layout : *archive.layouts) {
      w.u32(static_cast<std::uint32_t>(layout.blocks.size()));
      for (const auto& block : layout.blocks) {
        write_indices(w, block.rows);
        write_indices(w, block.cols);
      }
    }
  }
  return w.take();
}

Archive decode_archive(std::string_view bytes, const std::string& source) {
  Reader r(bytes, source);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) r.fail("bad magic (expected SLTK)", 0);
  const std::size_t version_at = r.offset();
  const auto version = r.u16("version");
  if (version != kArchiveVersion) {
    throw VersionError(source + ": unsupported archive version " + std::to_string(version),
                       version_at);
  }
  const auto count = r.u32("layer count");

  Archive a;
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto name_len = r.u16("layer name length");
    LayerSpec spec;
    spec.name = std::string(r.take(name_len, "layer name"));
    const std::size_t shape_at = r.offset();
    auto& s = spec.shape;
    s.c_out = r.u32("c_out");
    s.c_in = r.u32("c_in");
    s.k_h = r.u32("k_h");
    s.k_w = r.u32("k_w");
    s.stride = r.u32("stride");
    s.padding = r.u32("padding");
    if (s.c_out == 0 || s.c_in == 0 || s.k_h == 0 || s.k_w == 0 || s.stride == 0) {
      r.fail("layer '" + spec.name + "' has a zero dimension", shape_at);
    }
    const std::size_t flag_at = r.offset();
    const auto flag = r.u8("prunable flag");
    if (flag > 1) r.fail("prunable flag must be 0 or 1", flag_at);
    spec.prunable = flag == 1;

    const std::size_t n = s.n();
    const std::size_t row_bytes = (n + 7) / 8;
    if (row_bytes != 0 && r.remaining() / row_bytes < s.c_out) {
      r.fail("truncated archive while reading mask of '" + spec.name + "'", r.offset());
    }
    std::vector<std::uint8_t> bits(s.cells(), 0);
    for (std::size_t row = 0; row < s.c_out; ++row) {
      const std::size_t row_at = r.offset();
      auto packed = r.take(row_bytes, "mask row");
      for (std::size_t j = 0; j < n; ++j) {
        bits[row * n + j] = (static_cast<std::uint8_t>(packed[j / 8]) >> (j % 8)) & 1u;
      }
      if (n % 8 != 0) {
        const auto last = static_cast<std::uint8_t>(packed[row_bytes - 1]);
        if (last >> (n % 8)) r.fail("nonzero padding bits in mask row", row_at + row_bytes - 1);
      }
    }
    if (r.remaining() / 4 < s.cells()) {
      r.fail("truncated archive while reading weights of '" + spec.name + "'", r.offset());
    }
    std::vector<float> values(s.cells());
    for (auto& v : values) v = std::bit_cast<float>(r.u32("weight"));

    a.masks.emplace_back(spec.name, s, std::move(bits));
    a.weights.emplace_back(spec.name, s, std::move(values));
    a.layers.push_back(std::move(spec));
  }

  if (!r.at_end()) {
    const std::size_t meta_at = r.offset();
    const auto len = r.u32("metadata length");
    auto text = r.take(len, "metadata");
    try {
      a.metadata = Manifest::parse(text);
      read_topology(a.layers, a.metadata);
    } catch (const ParameterError& e) {
      r.fail(std::string("bad metadata: ") + e.what(), meta_at);
    }
  }
  if (!r.at_end()) {
    const std::size_t layouts_at = r.offset();
    std::vector<BlockLayout> layouts;
    for (const auto& spec : a.layers) {
      BlockLayout layout{spec.name, spec.shape, {}};
      const auto blocks = r.u32("block count");
      for (std::uint32_t b = 0; b < blocks; ++b) {
        DenseBlock block;
        for (auto* idx : {&block.rows, &block.cols}) {
          const auto len = r.u32("block index count");
          if (r.remaining() / 4 < len) r.fail("truncated archive while reading block indices", r.offset());
          idx->resize(len);
          for (auto& i : *idx) i = r.u32("block index");
        }
        layout.blocks.push_back(std::move(block));
      }
      try {
        validate_layout(layout);
      } catch (const LayoutError& e) {
        r.fail(std::string("invalid block layout: ") + e.what(), layouts_at);
      }
      layouts.push_back(std::move(layout));
    }
    a.layouts = std::move(layouts);
  }
  if (!r.at_end()) r.fail("unexpected trailing bytes", r.offset());
  return a;
}

void save_archive(const std::string& path, const Archive& archive) {
  const std::string bytes = encode_archive(archive);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

Archive load_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_archive(buf.str(), path);
}

}  // namespace sltk
