#include "sltk/regroup.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sltk/errors.hpp"

namespace sltk {
namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& a) {
  std::size_t n = 0;
  for (auto w : a) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::size_t popcount_and(const Bits& a, const Bits& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
  return n;
}

std::size_t popcount_or(const Bits& a, const Bits& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] | b[i]));
  return n;
}

double bits_jaccard(const Bits& a, const Bits& b) {
  const auto uni = popcount_or(a, b);
  return uni == 0 ? 0.0 : static_cast<double>(popcount_and(a, b)) / static_cast<double>(uni);
}

// Fiduccia-Mattheyses style refinement on the connectivity objective.
class Refiner {
 public:
  Refiner(const Hypergraph& h, int groups, std::size_t cap, std::vector<std::uint32_t>& part,
          std::mt19937_64& rng)
      : h_(h), k_(static_cast<std::size_t>(groups)), cap_(cap), part_(part),
        incidence_(h.node_count), sizes_(k_, 0),
        counts_(h.edges.size() * k_, 0), gain_(h.node_count * k_, 0),
        locked_(h.node_count, 0), priority_(h.node_count) {
    for (std::size_t e = 0; e < h.edges.size(); ++e) {
      for (auto v : h.edges[e]) incidence_[v].push_back(static_cast<std::uint32_t>(e));
    }
    for (std::size_t v = 0; v < h.node_count; ++v) ++sizes_[part_[v]];
    for (std::size_t e = 0; e < h.edges.size(); ++e) {
      for (auto v : h.edges[e]) ++count(e, part_[v]);
    }
    std::iota(priority_.begin(), priority_.end(), 0u);
    std::shuffle(priority_.begin(), priority_.end(), rng);
  }

  void run(int max_passes) {
    for (int pass = 0; pass < max_passes; ++pass) {
      if (!pass_once()) break;
    }
  }

 private:
  int& count(std::size_t e, std::size_t g) { return counts_[e * k_ + g]; }
  int& gain(std::size_t v, std::size_t g) { return gain_[v * k_ + g]; }

  int contrib(std::size_t e, std::size_t u, std::size_t to) {
    return (count(e, part_[u]) == 1 ? 1 : 0) - (count(e, to) == 0 ? 1 : 0);
  }

  void compute_gains() {
    std::fill(gain_.begin(), gain_.end(), 0);
    for (std::size_t v = 0; v < h_.node_count; ++v) {
      for (std::size_t g = 0; g < k_; ++g) {
        if (g == part_[v]) continue;
        int sum = 0;
        for (auto e : incidence_[v]) sum += contrib(e, v, g);
        gain(v, g) = sum;
      }
    }
  }

  void adjust_edge(std::size_t e, std::uint32_t moved, int sign) {
    for (auto u : h_.edges[e]) {
      if (u == moved || locked_[u]) continue;
      for (std::size_t g = 0; g < k_; ++g) {
        if (g != part_[u]) gain(u, g) += sign * contrib(e, u, g);
      }
    }
  }

  void move(std::uint32_t v, std::size_t to, bool track_gains) {
    const std::size_t from = part_[v];
    for (auto e : incidence_[v]) {
      const bool critical = track_gains && (count(e, from) <= 2 || count(e, to) <= 1);
      if (critical) adjust_edge(e, v, -1);
      --count(e, from);
      ++count(e, to);
      if (critical) adjust_edge(e, v, +1);
    }
    --sizes_[from];
    ++sizes_[to];
    part_[v] = static_cast<std::uint32_t>(to);
  }

  bool pass_once() {
    compute_gains();
    std::fill(locked_.begin(), locked_.end(), 0);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> moves;  // (node, previous group)
    long cumulative = 0;
    long best = 0;
    std::size_t best_len = 0;
    const std::size_t stall_limit = std::max<std::size_t>(64, h_.node_count / 4);

    for (std::size_t step = 0; step < h_.node_count; ++step) {
      bool found = false;
      int best_gain = std::numeric_limits<int>::min();
      bool best_balances = false;
      std::uint32_t best_node = 0;
      std::size_t best_to = 0;
      for (std::size_t v = 0; v < h_.node_count; ++v) {
        if (locked_[v]) continue;
        const std::size_t from = part_[v];
        for (std::size_t g = 0; g < k_; ++g) {
          if (g == from || sizes_[g] + 1 > cap_) continue;
          const int gv = gain(v, g);
          const bool balances = sizes_[from] > sizes_[g] + 1;
          const bool better =
              !found || gv > best_gain ||
              (gv == best_gain && balances && !best_balances) ||
              (gv == best_gain && balances == best_balances &&
               (priority_[v] < priority_[best_node] ||
                (v == best_node && g < best_to)));
          if (better) {
            found = true;
            best_gain = gv;
            best_balances = balances;
            best_node = static_cast<std::uint32_t>(v);
            best_to = g;
          }
        }
      }
      if (!found) break;
      moves.emplace_back(best_node, part_[best_node]);
      move(best_node, best_to, true);
      locked_[best_node] = 1;
      cumulative += best_gain;
      if (cumulative > best) {
        best = cumulative;
        best_len = moves.size();
      } else if (moves.size() - best_len > stall_limit) {
        break;
      }
    }
    for (std::size_t i = moves.size(); i > best_len; --i) {
      move(moves[i - 1].first, moves[i - 1].second, false);
    }
    return best > 0;
  }

  const Hypergraph& h_;
  std::size_t k_;
  std::size_t cap_;
  std::vector<std::uint32_t>& part_;
  std::vector<std::vector<std::uint32_t>> incidence_;
  std::vector<std::size_t> sizes_;
  std::vector<int> counts_;
  std::vector<int> gain_;
  std::vector<std::uint8_t> locked_;
  std::vector<std::uint32_t> priority_;
};

struct Cluster {
  std::vector<std::uint32_t> nodes;
  Bits edges;
};

// Agglomerative coarsening: repeatedly merge the most Jaccard-similar pair of
// clusters whose combined size fits under the cap.
std::vector<Cluster> coarsen(const Hypergraph& h, std::size_t target, std::size_t cap,
                             std::span<const std::uint32_t> order) {
  const std::size_t words = (h.edges.size() + 63) / 64;
  const std::size_t n = h.node_count;
  std::vector<Cluster> clusters(n);
  for (std::size_t i = 0; i < n; ++i) {
    clusters[i].nodes = {order[i]};
    clusters[i].edges.assign(words, 0);
  }
  std::vector<std::size_t> slot(n);
  for (std::size_t i = 0; i < n; ++i) slot[order[i]] = i;
  for (std::size_t e = 0; e < h.edges.size(); ++e) {
    for (auto v : h.edges[e]) clusters[slot[v]].edges[e / 64] |= std::uint64_t{1} << (e % 64);
  }

  std::vector<double> sim(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sim[i * n + j] = bits_jaccard(clusters[i].edges, clusters[j].edges);
    }
  }
  std::vector<std::uint8_t> alive(n, 1);
  std::size_t live = n;
  while (live > target) {
    double best = -1.0;
    std::size_t bi = n;
    std::size_t bj = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        if (clusters[i].nodes.size() + clusters[j].nodes.size() > cap) continue;
        if (sim[i * n + j] > best) {
          best = sim[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == n) break;
    auto& a = clusters[bi];
    auto& b = clusters[bj];
    a.nodes.insert(a.nodes.end(), b.nodes.begin(), b.nodes.end());
    for (std::size_t w = 0; w < words; ++w) a.edges[w] |= b.edges[w];
    b = Cluster{};
    alive[bj] = 0;
    --live;
    for (std::size_t j = 0; j < n; ++j) {
      if (!alive[j] || j == bi) continue;
      const double s = bits_jaccard(a.edges, clusters[j].edges);
      if (j < bi) {
        sim[j * n + bi] = s;
      } else {
        sim[bi * n + j] = s;
      }
    }
  }
  std::vector<Cluster> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) out.push_back(std::move(clusters[i]));
  }
  return out;
}

// Greedy placement of clusters into groups by least added connectivity.
std::vector<std::uint32_t> initial_partition(const Hypergraph& h, std::vector<Cluster> clusters,
                                             std::size_t k, std::size_t cap) {
  const std::size_t words = (h.edges.size() + 63) / 64;
  std::stable_sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    return a.nodes.size() > b.nodes.size();
  });
  std::vector<Bits> group_edges(k, Bits(words, 0));
  std::vector<std::size_t> sizes(k, 0);
  std::vector<std::uint32_t> part(h.node_count, 0);

  auto place = [&](std::span<const std::uint32_t> nodes, const Bits& edges) -> bool {
    std::size_t best_g = k;
    std::size_t best_cost = std::numeric_limits<std::size_t>::max();
    const std::size_t own = popcount(edges);
    for (std::size_t g = 0; g < k; ++g) {
      if (sizes[g] + nodes.size() > cap) continue;
      const std::size_t cost = own - popcount_and(edges, group_edges[g]);
      if (cost < best_cost || (cost == best_cost && sizes[g] < sizes[best_g])) {
        best_cost = cost;
        best_g = g;
      }
    }
    if (best_g == k) return false;
    for (auto v : nodes) part[v] = static_cast<std::uint32_t>(best_g);
    sizes[best_g] += nodes.size();
    for (std::size_t w = 0; w < words; ++w) group_edges[best_g][w] |= edges[w];
    return true;
  };

  std::vector<std::vector<std::uint32_t>> node_edges(h.node_count);
  for (std::size_t e = 0; e < h.edges.size(); ++e) {
    for (auto v : h.edges[e]) node_edges[v].push_back(static_cast<std::uint32_t>(e));
  }
  for (const auto& c : clusters) {
    if (place(c.nodes, c.edges)) continue;
    for (auto v : c.nodes) {
      Bits single(words, 0);
      for (auto e : node_edges[v]) single[e / 64] |= std::uint64_t{1} << (e % 64);
      const std::uint32_t one[] = {v};
      place(one, single);
    }
  }
  return part;
}

}  // namespace

std::size_t BlockLayout::covered_cells() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.cells();
  return n;
}

RegroupParams RegroupParams::defaults_for(std::size_t rows) {
  RegroupParams p;
  p.t1 = std::max<int>(1, static_cast<int>(rows / 64));
  p.b1 = 16;
  p.b2 = 32;
  p.t2 = (p.b1 + 1) / 2;
  p.max_iters = 8;
  return p;
}

void RegroupParams::validate() const {
  if (t1 < 1 || t2 < 1 || b1 < 1 || b2 < 1 || max_iters < 1) {
    throw ParameterError("regroup parameters t1, t2, b1, b2, max_iters must all be >= 1");
  }
}

double jaccard(std::span<const std::uint32_t> row_a, std::span<const std::uint32_t> row_b) {
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < row_a.size() && j < row_b.size()) {
    if (row_a[i] == row_b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (row_a[i] < row_b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = row_a.size() + row_b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Hypergraph build_hypergraph(const SparseMask& mask) {
  std::vector<std::uint32_t> rows(mask.rows());
  std::iota(rows.begin(), rows.end(), 0u);
  return build_hypergraph(mask, rows);
}

Hypergraph build_hypergraph(const SparseMask& mask, std::span<const std::uint32_t> rows) {
  Hypergraph h;
  h.node_count = rows.size();
  for (std::size_t c = 0; c < mask.cols(); ++c) {
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (mask.test(rows[i], c)) members.push_back(static_cast<std::uint32_t>(i));
    }
    if (!members.empty()) {
      h.edges.push_back(std::move(members));
      h.edge_columns.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return h;
}

std::size_t balance_cap(std::size_t nodes, int groups, double imbalance) {
  if (groups < 1) throw ParameterError("group count must be >= 1");
  const double raw = (1.0 + imbalance) * static_cast<double>(nodes) / groups;
  auto cap = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  const std::size_t even = (nodes + static_cast<std::size_t>(groups) - 1) / groups;
  return std::max(cap, even);
}

std::size_t connectivity_cut(const Hypergraph& h, std::span<const std::uint32_t> assignment,
                             int groups) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(groups));
  std::size_t cut = 0;
  for (const auto& edge : h.edges) {
    std::fill(seen.begin(), seen.end(), 0);
    std::size_t touched = 0;
    for (auto v : edge) {
      if (!seen[assignment[v]]) {
        seen[assignment[v]] = 1;
        ++touched;
      }
    }
    cut += touched - 1;
  }
  return cut;
}

std::vector<std::uint32_t> partition(const Hypergraph& h, int t1, std::uint64_t seed,
                                     const PartitionOptions& options) {
  if (t1 < 1) throw ParameterError("partition count t1 must be >= 1, got " + std::to_string(t1));
  std::vector<std::uint32_t> best(h.node_count, 0);
  if (t1 == 1 || h.node_count == 0) return best;

  const auto k = static_cast<std::size_t>(t1);
  const std::size_t cap = balance_cap(h.node_count, t1, options.imbalance);
  const std::size_t target = std::max<std::size_t>(k, 4 * k);
  std::size_t best_cut = std::numeric_limits<std::size_t>::max();

  for (int run = 0; run < std::max(1, options.runs); ++run) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(run));
    std::vector<std::uint32_t> order(h.node_count);
    std::iota(order.begin(), order.end(), 0u);
    if (run > 0) std::shuffle(order.begin(), order.end(), rng);

    auto part = initial_partition(h, coarsen(h, target, cap, order), k, cap);
    Refiner(h, t1, cap, part, rng).run(16);
    const std::size_t cut = connectivity_cut(h, part, t1);
    if (cut < best_cut) {
      best_cut = cut;
      best = std::move(part);
    }
  }
  return best;
}

void validate_layout(const BlockLayout& layout) {
  const auto rows = layout.shape.c_out;
  const auto cols = layout.shape.n();
  std::vector<std::uint8_t> covered(layout.shape.cells(), 0);
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    const auto& block = layout.blocks[b];
    auto check_axis = [&](std::span<const std::uint32_t> idx, std::size_t limit, const char* axis) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= limit || (i > 0 && idx[i] <= idx[i - 1])) {
          throw LayoutError("block " + std::to_string(b) + " of '" + layout.layer_name +
                            "' has unsorted or out-of-range " + axis + " indices");
        }
      }
    };
    check_axis(block.rows, rows, "row");
    check_axis(block.cols, cols, "column");
    for (auto r : block.rows) {
      for (auto c : block.cols) {
        auto& cell = covered[std::size_t{r} * cols + c];
        if (cell) {
          throw LayoutError("block " + std::to_string(b) + " of '" + layout.layer_name +
                            "' overlaps another block at (" + std::to_string(r) + ", " +
                            std::to_string(c) + ")");
        }
        cell = 1;
      }
    }
  }
}

SparseMask coverage_mask(const BlockLayout& layout) {
  SparseMask out(layout.layer_name, layout.shape, false);
  for (const auto& block : layout.blocks) {
    for (auto r : block.rows) {
      for (auto c : block.cols) out.set(r, c, true);
    }
  }
  return out;
}

BlockLayout extract_blocks(const SparseMask& mask, const RegroupParams& params) {
  params.validate();
  BlockLayout layout{mask.layer_name(), mask.shape(), {}};
  std::vector<std::uint32_t> uncovered(mask.rows());
  std::iota(uncovered.begin(), uncovered.end(), 0u);
  const auto b1 = static_cast<std::size_t>(params.b1);
  const auto b2 = static_cast<std::size_t>(params.b2);
  const auto t2 = static_cast<std::size_t>(params.t2);

  for (int iter = 0; iter < params.max_iters; ++iter) {
    if (uncovered.size() < b1) break;
    const Hypergraph h = build_hypergraph(mask, uncovered);
    const auto part = partition(h, params.t1, params.seed + static_cast<std::uint64_t>(iter) * 7919u);

    std::vector<std::vector<std::uint32_t>> groups(static_cast<std::size_t>(params.t1));
    for (std::size_t i = 0; i < uncovered.size(); ++i) groups[part[i]].push_back(uncovered[i]);

    std::vector<std::uint8_t> consumed(mask.rows(), 0);
    bool emitted = false;
    for (const auto& rows : groups) {
      if (rows.size() < b1) continue;
      std::vector<std::uint32_t> cols;
      for (std::size_t c = 0; c < mask.cols(); ++c) {
        std::size_t hits = 0;
        for (auto r : rows) hits += mask.test(r, c) ? 1 : 0;
        if (hits >= t2) cols.push_back(static_cast<std::uint32_t>(c));
      }
      if (cols.size() < b2) continue;
      for (auto r : rows) consumed[r] = 1;
      layout.blocks.push_back({rows, std::move(cols)});
      emitted = true;
    }
    if (!emitted) break;
    std::erase_if(uncovered, [&](std::uint32_t r) { return consumed[r] != 0; });
  }
  return layout;
}

std::pair<SparseMask, BlockLayout> regroup_mask(const SparseMask& mask, const WeightTensor& weights,
                                                const RegroupParams& params) {
  require_congruent(mask, weights);
  BlockLayout layout = extract_blocks(mask, params);
  SparseMask out = coverage_mask(layout);
  return {std::move(out), std::move(layout)};
}

}  // namespace sltk
