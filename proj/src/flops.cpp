#include "sltk/flops.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sltk/errors.hpp"

namespace sltk {
namespace {

std::uint32_t parse_u32(std::string_view text, const std::string& what) {
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParameterError("invalid " + what + ": '" + std::string(text) + "'");
  }
  return value;
}

struct Produced {
  Hw hw;
  std::vector<std::uint8_t> channels;  // retained output channels
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

constexpr std::string_view kTopology = "topology.";

}  // namespace

Hw parse_hw(std::string_view text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) throw ParameterError("expected HxW, got '" + std::string(text) + "'");
  Hw hw{parse_u32(text.substr(0, x), "input height"), parse_u32(text.substr(x + 1), "input width")};
  if (hw.height == 0 || hw.width == 0) throw ParameterError("input dimensions must be >= 1");
  return hw;
}

Hw conv_output_hw(const LayerShape& shape, Hw input) {
  const auto padded_h = std::int64_t{input.height} + 2 * std::int64_t{shape.padding};
  const auto padded_w = std::int64_t{input.width} + 2 * std::int64_t{shape.padding};
  if (padded_h < shape.k_h || padded_w < shape.k_w || shape.stride == 0) {
    throw ShapeError("kernel " + std::to_string(shape.k_h) + "x" + std::to_string(shape.k_w) +
                     " does not fit input " + std::to_string(input.height) + "x" +
                     std::to_string(input.width));
  }
  return Hw{static_cast<std::uint32_t>((padded_h - shape.k_h) / shape.stride + 1),
            static_cast<std::uint32_t>((padded_w - shape.k_w) / shape.stride + 1)};
}

SparsityReport flops(std::span<const LayerSpec> layers, Hw input,
                     std::span<const LayerStructure> structure) {
  if (!structure.empty() && structure.size() != layers.size()) {
    throw ParameterError("structure list has " + std::to_string(structure.size()) +
                         " entries for " + std::to_string(layers.size()) + " layers");
  }
  SparsityReport report;
  std::map<std::string, Produced, std::less<>> produced;
  const Produced* previous = nullptr;
  std::uint64_t prunable_bits = 0;
  std::uint64_t prunable_set = 0;

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& spec = layers[l];
    const auto& shape = spec.shape;
    shape.validate();

    Produced network_input{input, std::vector<std::uint8_t>(shape.c_in, 1)};
    const Produced* src = previous ? previous : &network_input;
    if (!spec.source.empty() && spec.source != "input") {
      auto it = produced.find(spec.source);
      if (it == produced.end()) {
        throw WiringError("layer '" + spec.name + "' reads from unknown or later layer '" +
                          spec.source + "'");
      }
      src = &it->second;
    } else if (spec.source == "input") {
      src = &network_input;
    }
    if (src->channels.size() != shape.c_in) {
      throw WiringError("layer '" + spec.name + "' expects " + std::to_string(shape.c_in) +
                        " input channels but its source produces " +
                        std::to_string(src->channels.size()));
    }

    const Hw out_hw = conv_output_hw(shape, src->hw);
    const std::uint64_t area = out_hw.area();
    const std::size_t k_area = std::size_t{shape.k_h} * shape.k_w;
    std::uint32_t in_kept = 0;
    for (auto c : src->channels) in_kept += c;

    LayerReport row;
    row.name = spec.name;
    row.counted = spec.prunable;
    row.output_hw = out_hw;
    row.dense_macs = shape.cells() * area;
    row.retained_in_channels = in_kept;

    Produced mine{out_hw, std::vector<std::uint8_t>(shape.c_out, 1)};
    std::uint64_t set_bits = shape.cells();
    const LayerStructure none{};
    const LayerStructure& st = structure.empty() ? none : structure[l];

    if (const auto* mask_ptr = std::get_if<const SparseMask*>(&st); mask_ptr && *mask_ptr) {
      const SparseMask& mask = **mask_ptr;
      if (mask.shape() != shape) throw ShapeError("mask for '" + spec.name + "' has a different shape");
      set_bits = mask.count();
      std::uint64_t live = 0;
      for (std::size_t r = 0; r < mask.rows(); ++r) {
        auto bits = mask.row(r);
        std::uint64_t row_live = 0;
        bool any = false;
        for (std::size_t j = 0; j < bits.size(); ++j) {
          if (!bits[j]) continue;
          any = true;
          if (src->channels[j / k_area]) ++row_live;
        }
        mine.channels[r] = any ? 1 : 0;
        live += row_live;
      }
      row.macs = live * area;
    } else if (const auto* layout_ptr = std::get_if<const BlockLayout*>(&st);
               layout_ptr && *layout_ptr) {
      const BlockLayout& layout = **layout_ptr;
      if (layout.shape != shape) throw ShapeError("layout for '" + spec.name + "' has a different shape");
      set_bits = layout.covered_cells();
      std::fill(mine.channels.begin(), mine.channels.end(), 0);
      for (const auto& block : layout.blocks) {
        for (auto r : block.rows) mine.channels[r] = 1;
      }
      row.macs = set_bits * area;
    } else {
      row.macs = std::uint64_t{shape.c_out} * in_kept * k_area * area;
    }
    for (auto c : mine.channels) row.retained_out_channels += c;
    row.sparsity = 1.0 - static_cast<double>(set_bits) / static_cast<double>(shape.cells());

    if (spec.prunable) {
      prunable_bits += shape.cells();
      prunable_set += set_bits;
      report.total_macs += row.macs;
      report.dense_total_macs += row.dense_macs;
    }

    if (spec.global_pool) {
      mine.hw = Hw{1, 1};
    } else if (spec.pool > 1) {
      mine.hw = Hw{mine.hw.height / spec.pool, mine.hw.width / spec.pool};
      if (mine.hw.height == 0 || mine.hw.width == 0) {
        throw ShapeError("pooling after '" + spec.name + "' collapses the feature map");
      }
    }
    auto [it, inserted] = produced.emplace(spec.name, std::move(mine));
    if (!inserted) throw WiringError("duplicate layer name '" + spec.name + "'");
    previous = &it->second;
    report.layers.push_back(std::move(row));
  }
  report.global_sparsity =
      prunable_bits == 0 ? 0.0 : 1.0 - static_cast<double>(prunable_set) / static_cast<double>(prunable_bits);
  return report;
}

std::string SparsityReport::to_text() const {
  std::ostringstream out;
  out << "# unit=MAC (one multiply-accumulate = 1 FLOP); convolution layers only, "
         "classification heads (prunable=0) excluded from totals\n";
  for (const auto& l : layers) {
    const std::string p = "layer." + l.name + ".";
    out << p << "sparsity=" << format_double(l.sparsity) << '\n';
    out << p << "output_hw=" << l.output_hw.height << 'x' << l.output_hw.width << '\n';
    out << p << "channels_out=" << l.retained_out_channels << '\n';
    out << p << "channels_in=" << l.retained_in_channels << '\n';
    out << p << "dense_macs=" << l.dense_macs << '\n';
    out << p << "macs=" << l.macs << '\n';
    out << p << "counted=" << (l.counted ? 1 : 0) << '\n';
  }
  out << "global_sparsity=" << format_double(global_sparsity) << '\n';
  out << "dense_total_macs=" << dense_total_macs << '\n';
  out << "total_macs=" << total_macs << '\n';
  out << "total_gmacs=" << format_double(static_cast<double>(total_macs) / 1e9) << '\n';
  return out.str();
}

std::vector<LayerSpec> parse_architecture(std::string_view text) {
  std::vector<LayerSpec> layers;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& ch : line) {
      if (ch == ',' || ch == '\t' || ch == '\r') ch = ' ';
    }
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string where = "shape file line " + std::to_string(line_no);

    if (tok[0] == "pool" || tok[0] == "gap") {
      if (layers.empty()) throw ParameterError(where + ": '" + tok[0] + "' before any layer");
      if (tok[0] == "gap") {
        layers.back().global_pool = true;
      } else {
        if (tok.size() != 2) throw ParameterError(where + ": expected 'pool <k>'");
        layers.back().pool = parse_u32(tok[1], where + " pool size");
        if (layers.back().pool == 0) throw ParameterError(where + ": pool size must be >= 1");
      }
      continue;
    }
    if (tok.size() != 8 && tok.size() != 9) {
      throw ParameterError(where + ": expected 8 or 9 fields, got " + std::to_string(tok.size()));
    }
    LayerSpec spec;
    spec.name = tok[0];
    spec.shape = LayerShape{parse_u32(tok[1], where + " c_out"), parse_u32(tok[2], where + " c_in"),
                            parse_u32(tok[3], where + " k_h"),   parse_u32(tok[4], where + " k_w"),
                            parse_u32(tok[5], where + " stride"), parse_u32(tok[6], where + " padding")};
    spec.shape.validate();
    const auto flag = parse_u32(tok[7], where + " prunable flag");
    if (flag > 1) throw ParameterError(where + ": prunable flag must be 0 or 1");
    spec.prunable = flag == 1;
    if (tok.size() == 9) {
      if (tok[8].rfind("from=", 0) != 0) throw ParameterError(where + ": ninth field must be from=<layer>");
      spec.source = tok[8].substr(5);
    }
    layers.push_back(std::move(spec));
  }
  return layers;
}

std::vector<LayerSpec> load_architecture(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open shape file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_architecture(buf.str());
}

void write_topology(std::span<const LayerSpec> layers, Manifest& manifest) {
  for (const auto& l : layers) {
    const std::string p = std::string(kTopology) + l.name + ".";
    if (!l.source.empty()) manifest.set(p + "source", l.source);
    if (l.pool > 1) manifest.set(p + "pool", std::to_string(l.pool));
    if (l.global_pool) manifest.set(p + "global_pool", "1");
  }
}

void read_topology(std::vector<LayerSpec>& layers, Manifest& manifest) {
  auto& entries = manifest.entries();
  for (auto& l : layers) {
    const std::string p = std::string(kTopology) + l.name + ".";
    if (auto v = manifest.get(p + "source")) l.source = *v;
    if (auto v = manifest.get(p + "pool")) l.pool = parse_u32(*v, "topology pool");
    if (auto v = manifest.get(p + "global_pool")) l.global_pool = *v == "1";
  }
  std::erase_if(entries, [](const Manifest::Entry& e) { return e.first.rfind(kTopology, 0) == 0; });
}

}  // namespace sltk
