#pragma once

// Independent reference implementations shared by the unit and acceptance
// tests. Deliberately naive.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "sltk/exec.hpp"
#include "sltk/mask.hpp"
#include "sltk/regroup.hpp"

namespace oracle {

// Cut of a full assignment, recomputed from the edge lists.
inline std::size_t cut(const std::vector<std::vector<std::uint32_t>>& edges,
                       const std::vector<std::uint32_t>& part) {
  std::size_t total = 0;
  for (const auto& e : edges) {
    std::set<std::uint32_t> seen;
    for (auto v : e) seen.insert(part[v]);
    if (!seen.empty()) total += seen.size() - 1;
  }
  return total;
}

// Exhaustive minimum connectivity cut over all assignments with every group
// no larger than `cap`.
inline std::size_t best_cut(const sltk::Hypergraph& h, int groups, std::size_t cap) {
  const std::size_t n = h.node_count;
  std::vector<std::uint32_t> part(n, 0);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  while (true) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(groups), 0);
    for (auto g : part) ++sizes[g];
    if (*std::max_element(sizes.begin(), sizes.end()) <= cap) {
      best = std::min(best, cut(h.edges, part));
    }
    std::size_t i = 0;
    while (i < n && part[i] == static_cast<std::uint32_t>(groups - 1)) part[i++] = 0;
    if (i == n) break;
    ++part[i];
  }
  return best;
}

// Direct convolution in double precision over the masked weights.
inline sltk::FeatureMap conv(const sltk::WeightTensor& w, const sltk::SparseMask& m,
                             const sltk::FeatureMap& in) {
  const auto& s = w.shape();
  const auto oh = (in.height + 2 * s.padding - s.k_h) / s.stride + 1;
  const auto ow = (in.width + 2 * s.padding - s.k_w) / s.stride + 1;
  sltk::FeatureMap out(s.c_out, oh, ow);
  for (std::uint32_t o = 0; o < s.c_out; ++o) {
    for (std::uint32_t y = 0; y < oh; ++y) {
      for (std::uint32_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (std::uint32_t c = 0; c < s.c_in; ++c) {
          for (std::uint32_t ky = 0; ky < s.k_h; ++ky) {
            for (std::uint32_t kx = 0; kx < s.k_w; ++kx) {
              const std::size_t col = (std::size_t{c} * s.k_h + ky) * s.k_w + kx;
              if (!m.test(o, col)) continue;
              const long iy = long(y) * s.stride + ky - long(s.padding);
              const long ix = long(x) * s.stride + kx - long(s.padding);
              if (iy < 0 || ix < 0 || iy >= long(in.height) || ix >= long(in.width)) continue;
              acc += double(w.at(o, col)) * double(in.at(c, std::size_t(iy), std::size_t(ix)));
            }
          }
        }
        out.at(o, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

struct Planted {
  sltk::SparseMask mask;
  std::vector<std::uint8_t> planted;  // 1 where a planted block covers the cell
};

// `blocks` disjoint (rows x cols) all-ones blocks over shuffled row and column
// ids in a rows x cols_total matrix, plus independent noise bits.
inline Planted planted_blocks(std::uint64_t seed, std::uint32_t rows, std::uint32_t cols_total,
                              int blocks, std::uint32_t block_rows, std::uint32_t block_cols,
                              double noise) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> row_ids(rows), col_ids(cols_total);
  for (std::uint32_t i = 0; i < rows; ++i) row_ids[i] = i;
  for (std::uint32_t i = 0; i < cols_total; ++i) col_ids[i] = i;
  std::shuffle(row_ids.begin(), row_ids.end(), rng);
  std::shuffle(col_ids.begin(), col_ids.end(), rng);
  Planted p{sltk::SparseMask("planted", {rows, cols_total, 1, 1, 1, 0}, false),
            std::vector<std::uint8_t>(std::size_t{rows} * cols_total, 0)};
  for (int b = 0; b < blocks; ++b) {
    for (std::uint32_t i = 0; i < block_rows; ++i) {
      for (std::uint32_t j = 0; j < block_cols; ++j) {
        const auto r = row_ids[b * block_rows + i];
        const auto c = col_ids[b * block_cols + j];
        p.mask.set(r, c, true);
        p.planted[std::size_t{r} * cols_total + c] = 1;
      }
    }
  }
  std::bernoulli_distribution flip(noise);
  for (auto& bit : p.mask.bits()) {
    if (flip(rng)) bit = 1;
  }
  return p;
}

// Fraction of planted cells covered by a layout.
inline double planted_recovery(const Planted& p, const sltk::BlockLayout& layout) {
  const auto covered = sltk::coverage_mask(layout);
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < p.planted.size(); ++i) {
    if (!p.planted[i]) continue;
    ++total;
    hit += covered.bits()[i];
  }
  return total ? double(hit) / double(total) : 1.0;
}

// Checks the structural block invariants independently of validate_layout.
inline bool blocks_well_formed(const sltk::BlockLayout& layout, int b1, int b2) {
  std::vector<std::uint8_t> seen(layout.shape.cells(), 0);
  std::vector<std::uint8_t> row_used(layout.shape.c_out, 0);
  for (const auto& b : layout.blocks) {
    if (b.rows.size() < std::size_t(b1) || b.cols.size() < std::size_t(b2)) return false;
    for (auto r : b.rows) {
      if (row_used[r]) return false;
      row_used[r] = 1;
      for (auto c : b.cols) {
        auto& cell = seen[std::size_t{r} * layout.shape.n() + c];
        if (cell) return false;
        cell = 1;
      }
    }
  }
  return true;
}

// Random small hypergraph: `nodes` rows, `cols` columns of a random mask.
inline sltk::Hypergraph small_hypergraph(std::mt19937_64& rng, std::uint32_t nodes,
                                         std::uint32_t cols, double density) {
  sltk::SparseMask m("h", {nodes, cols, 1, 1, 1, 0}, false);
  std::bernoulli_distribution bit(density);
  for (auto& b : m.bits()) b = bit(rng) ? 1 : 0;
  return sltk::build_hypergraph(m);
}

}  // namespace oracle
