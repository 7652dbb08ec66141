#include "sltk/exec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "sltk/errors.hpp"

namespace sltk {
namespace {

constexpr std::size_t kPositionChunk = 64;

void check_input(const LayerShape& shape, const FeatureMap& input) {
  if (input.channels != shape.c_in) {
    throw ShapeError("input has " + std::to_string(input.channels) + " channels, layer expects " +
                     std::to_string(shape.c_in));
  }
  if (input.values.size() != std::size_t{input.channels} * input.height * input.width) {
    throw ShapeError("feature map value count does not match its dimensions");
  }
}

FeatureMap make_output(const LayerShape& shape, const FeatureMap& input) {
  const Hw out = conv_output_hw(shape, input.hw());
  return FeatureMap(shape.c_out, out.height, out.width);
}

void aligned_tiles(const DenseBlock& block, std::size_t row_begin, std::size_t row_end,
                   const WeightTensor& w, const Matrix& patches, FeatureMap& out) {
  const std::size_t positions = patches.cols;
  float acc[kRowTile][kPositionChunk];
  for (std::size_t r0 = row_begin; r0 < row_end; r0 += kRowTile) {
    for (std::size_t p0 = 0; p0 < positions; p0 += kPositionChunk) {
      const std::size_t pn = std::min(kPositionChunk, positions - p0);
      for (auto& line : acc) std::fill(line, line + pn, 0.0f);
      for (auto col : block.cols) {
        const float* x = patches.row(col) + p0;
        for (std::size_t t = 0; t < kRowTile; ++t) {
          const float wv = w.at(block.rows[r0 + t], col);
          for (std::size_t p = 0; p < pn; ++p) acc[t][p] += wv * x[p];
        }
      }
      for (std::size_t t = 0; t < kRowTile; ++t) {
        float* dst = out.values.data() + std::size_t{block.rows[r0 + t]} * positions + p0;
        for (std::size_t p = 0; p < pn; ++p) dst[p] += acc[t][p];
      }
    }
  }
}

void remainder_rows(const DenseBlock& block, std::size_t row_begin, const WeightTensor& w,
                    const Matrix& patches, FeatureMap& out) {
  const std::size_t positions = patches.cols;
  std::vector<float> kernel(block.cols.size());
  float acc[kPositionChunk];
  for (std::size_t t = row_begin; t < block.rows.size(); ++t) {
    const auto row = block.rows[t];
    for (std::size_t c = 0; c < block.cols.size(); ++c) kernel[c] = w.at(row, block.cols[c]);
    for (std::size_t p0 = 0; p0 < positions; p0 += kPositionChunk) {
      const std::size_t pn = std::min(kPositionChunk, positions - p0);
      std::fill(acc, acc + pn, 0.0f);
      for (std::size_t c = 0; c < block.cols.size(); ++c) {
        const float* x = patches.row(block.cols[c]) + p0;
        for (std::size_t p = 0; p < pn; ++p) acc[p] += kernel[c] * x[p];
      }
      float* dst = out.values.data() + std::size_t{row} * positions + p0;
      for (std::size_t p = 0; p < pn; ++p) dst[p] += acc[p];
    }
  }
}

double checksum(const FeatureMap& f) {
  double s = 0.0;
  for (float v : f.values) s += v;
  return s;
}

}  // namespace

CsrMatrix to_csr(const WeightTensor& weights, const SparseMask& mask) {
  require_congruent(mask, weights);
  CsrMatrix csr;
  csr.rows = mask.rows();
  csr.cols = mask.cols();
  csr.row_ptr.reserve(csr.rows + 1);
  csr.row_ptr.push_back(0);
  for (std::size_t r = 0; r < csr.rows; ++r) {
    for (std::size_t c = 0; c < csr.cols; ++c) {
      if (mask.test(r, c)) {
        csr.col_idx.push_back(static_cast<std::uint32_t>(c));
        csr.values.push_back(weights.at(r, c));
      }
    }
    csr.row_ptr.push_back(static_cast<std::uint32_t>(csr.values.size()));
  }
  return csr;
}

Matrix im2col(const FeatureMap& input, const LayerShape& shape) {
  check_input(shape, input);
  const Hw out = conv_output_hw(shape, input.hw());
  Matrix m{shape.n(), out.area(), {}};
  m.data.assign(m.rows * m.cols, 0.0f);
  const auto pad = static_cast<std::int64_t>(shape.padding);
  std::size_t j = 0;
  for (std::size_t c = 0; c < shape.c_in; ++c) {
    for (std::size_t ky = 0; ky < shape.k_h; ++ky) {
      for (std::size_t kx = 0; kx < shape.k_w; ++kx, ++j) {
        float* dst = m.row(j);
        for (std::size_t oy = 0; oy < out.height; ++oy) {
          const auto iy = static_cast<std::int64_t>(oy * shape.stride + ky) - pad;
          for (std::size_t ox = 0; ox < out.width; ++ox) {
            const auto ix = static_cast<std::int64_t>(ox * shape.stride + kx) - pad;
            const bool inside = iy >= 0 && ix >= 0 && iy < input.height && ix < input.width;
            dst[oy * out.width + ox] =
                inside ? input.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) : 0.0f;
          }
        }
      }
    }
  }
  return m;
}

FeatureMap dense_conv(const WeightTensor& weights, const FeatureMap& input) {
  const auto& shape = weights.shape();
  const Matrix patches = im2col(input, shape);
  FeatureMap out = make_output(shape, input);
  const std::size_t positions = patches.cols;
  for (std::size_t r = 0; r < shape.c_out; ++r) {
    float* dst = out.values.data() + r * positions;
    for (std::size_t j = 0; j < patches.rows; ++j) {
      const float wv = weights.at(r, j);
      const float* x = patches.row(j);
      for (std::size_t p = 0; p < positions; ++p) dst[p] += wv * x[p];
    }
  }
  return out;
}

FeatureMap masked_conv_csr(const WeightTensor& weights, const SparseMask& mask,
                           const FeatureMap& input) {
  const CsrMatrix csr = to_csr(weights, mask);
  const Matrix patches = im2col(input, weights.shape());
  FeatureMap out = make_output(weights.shape(), input);
  const std::size_t positions = patches.cols;
  for (std::size_t r = 0; r < csr.rows; ++r) {
    float* dst = out.values.data() + r * positions;
    for (auto k = csr.row_ptr[r]; k < csr.row_ptr[r + 1]; ++k) {
      const float wv = csr.values[k];
      const float* x = patches.row(csr.col_idx[k]);
      for (std::size_t p = 0; p < positions; ++p) dst[p] += wv * x[p];
    }
  }
  return out;
}

RowSplit row_split(std::size_t row_count) {
  return {row_count / kRowTile * kRowTile, row_count % kRowTile};
}

FeatureMap block_conv(const BlockLayout& layout, const WeightTensor& weights,
                      const FeatureMap& input) {
  if (layout.shape != weights.shape()) {
    throw ShapeError("layout '" + layout.layer_name + "' does not match weights '" +
                     weights.layer_name() + "'");
  }
  validate_layout(layout);
  const Matrix patches = im2col(input, weights.shape());
  FeatureMap out = make_output(weights.shape(), input);
  for (const auto& block : layout.blocks) {
    const RowSplit split = row_split(block.rows.size());
    aligned_tiles(block, 0, split.aligned, weights, patches, out);
    remainder_rows(block, split.aligned, weights, patches, out);
  }
  return out;
}

std::uint64_t block_macs(const BlockLayout& layout, Hw output_hw) {
  return static_cast<std::uint64_t>(layout.covered_cells()) * output_hw.area();
}

bool outputs_agree(const FeatureMap& a, const FeatureMap& reference, double rel, double abs) {
  if (a.values.size() != reference.values.size()) return false;
  double scale = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    scale = std::max(scale, std::fabs(static_cast<double>(reference.values[i])));
    diff = std::max(diff, std::fabs(static_cast<double>(a.values[i]) - reference.values[i]));
  }
  return diff <= rel * scale + abs;
}

std::string_view executor_name(Executor e) {
  switch (e) {
    case Executor::kDense:
      return "dense";
    case Executor::kCsr:
      return "csr";
    case Executor::kBlock:
      return "block";
  }
  return "unknown";
}

Executor parse_executor(std::string_view name) {
  if (name == "dense") return Executor::kDense;
  if (name == "csr") return Executor::kCsr;
  if (name == "block") return Executor::kBlock;
  throw ParameterError("unknown executor '" + std::string(name) + "'");
}

std::string BenchReport::to_csv() const {
  std::string out = "layer,executor,wall_ms_median,macs,checksum\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%s,%.6f,%llu,%.9e\n", std::string(executor_name(r.executor)).c_str(),
                  r.wall_ms_median, static_cast<unsigned long long>(r.macs), r.checksum);
    out += r.layer;
    out += buf;
  }
  return out;
}

BenchReport bench(std::span<const BenchLayer> layers, std::span<const Executor> executors,
                  int repeats, double tolerance) {
  if (repeats < 3) throw ParameterError("bench needs at least 3 repeats");
  BenchReport report;
  report.notes.push_back("wall times are CPU indicative; MAC counts are analytic");
  for (const auto& layer : layers) {
    const auto& shape = layer.weights.shape();
    require_congruent(layer.mask, layer.weights);
    const Hw out_hw = conv_output_hw(shape, layer.input.hw());
    std::optional<FeatureMap> reference;
    Executor reference_kind = Executor::kDense;
    WeightTensor masked = apply_mask(layer.weights, layer.mask);

    for (Executor kind : executors) {
      if (kind == Executor::kBlock && !layer.layout) continue;
      auto run = [&]() -> FeatureMap {
        switch (kind) {
          case Executor::kDense:
            return dense_conv(masked, layer.input);
          case Executor::kCsr:
            return masked_conv_csr(layer.weights, layer.mask, layer.input);
          case Executor::kBlock:
            return block_conv(*layer.layout, layer.weights, layer.input);
        }
        throw ParameterError("unknown executor");
      };
      FeatureMap result = run();  // warm-up
      std::vector<double> times;
      for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        result = run();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      std::sort(times.begin(), times.end());
      const double median = times.size() % 2 ? times[times.size() / 2]
                                             : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
      BenchRow row{layer.weights.layer_name(), kind, median, 0, checksum(result)};
      switch (kind) {
        case Executor::kDense:
          row.macs = shape.cells() * out_hw.area();
          break;
        case Executor::kCsr:
          row.macs = layer.mask.count() * out_hw.area();
          break;
        case Executor::kBlock:
          row.macs = block_macs(*layer.layout, out_hw);
          break;
      }
      if (!reference) {
        reference = std::move(result);
        reference_kind = kind;
      } else if (!outputs_agree(result, *reference, tolerance)) {
        throw ConsistencyError("layer '" + layer.weights.layer_name() + "': executor " +
                               std::string(executor_name(kind)) + " disagrees with " +
                               std::string(executor_name(reference_kind)));
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace sltk
