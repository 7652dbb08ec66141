#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sltk/mask.hpp"

namespace sltk {

// Rows of a mask as nodes; every non-empty column is a hyperedge holding the
// rows that have a set bit in it.
struct Hypergraph {
  std::size_t node_count = 0;
  std::vector<std::vector<std::uint32_t>> edges;
  // Mask column each hyperedge came from.
  std::vector<std::uint32_t> edge_columns;
};

struct DenseBlock {
  std::vector<std::uint32_t> rows;
  std::vector<std::uint32_t> cols;

  std::size_t cells() const { return rows.size() * cols.size(); }

  friend bool operator==(const DenseBlock&, const DenseBlock&) = default;
};

struct BlockLayout {
  std::string layer_name;
  LayerShape shape;
  std::vector<DenseBlock> blocks;

  std::size_t covered_cells() const;

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

struct RegroupParams {
  int t1 = 1;         // partition count
  int t2 = 8;         // minimum set bits per admitted column within a group
  int b1 = 16;        // minimum rows per block
  int b2 = 32;        // minimum columns per block
  int max_iters = 8;  // outer-loop bound
  std::uint64_t seed = 42;

  // t1 = max(1, rows / 64), t2 = ceil(b1 / 2), b1 = 16, b2 = 32, max_iters = 8.
  static RegroupParams defaults_for(std::size_t rows);

  void validate() const;
};

struct PartitionOptions {
  double imbalance = 0.2;
  // Independent coarsen+refine attempts; the lowest cut wins.
  int runs = 4;
};

// |A ∩ B| / |A ∪ B| over sorted, duplicate-free column index sets; 0 when
// both are empty.
double jaccard(std::span<const std::uint32_t> row_a, std::span<const std::uint32_t> row_b);

Hypergraph build_hypergraph(const SparseMask& mask);

// Hypergraph restricted to the given mask rows; node i stands for rows[i].
Hypergraph build_hypergraph(const SparseMask& mask, std::span<const std::uint32_t> rows);

// Largest group size admitted by the balance constraint:
// ceil((1 + imbalance) * nodes / groups).
std::size_t balance_cap(std::size_t nodes, int groups, double imbalance);

// Sum over hyperedges of (number of groups the edge touches - 1).
std::size_t connectivity_cut(const Hypergraph& h, std::span<const std::uint32_t> assignment,
                             int groups);

// Assigns every node to one of t1 groups, heuristically minimising the
// connectivity cut under the balance cap. Deterministic in (h, t1, seed).
std::vector<std::uint32_t> partition(const Hypergraph& h, int t1, std::uint64_t seed,
                                     const PartitionOptions& options = {});

// Throws LayoutError if a block is out of range, unsorted, or shares a cell
// with another block.
void validate_layout(const BlockLayout& layout);

// Mask whose set bits are exactly the cells covered by the layout.
SparseMask coverage_mask(const BlockLayout& layout);

BlockLayout extract_blocks(const SparseMask& mask, const RegroupParams& params);

// Blocks are refilled to all-ones; everything outside them is cleared.
std::pair<SparseMask, BlockLayout> regroup_mask(const SparseMask& mask,
                                                const WeightTensor& weights,
                                                const RegroupParams& params);

}  // namespace sltk
