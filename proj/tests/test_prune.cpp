#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "sltk/errors.hpp"
#include "sltk/prune.hpp"
#include "support.hpp"

using namespace sltk;
using testing_support::matrix_shape;
using testing_support::random_mask;
using testing_support::random_weights;

namespace {

// Reference: collect surviving (|w|, layer, index), sort, clear the first k.
std::vector<SparseMask> sorted_prune(const std::vector<WeightTensor>& w,
                                     const std::vector<SparseMask>& m, std::size_t k,
                                     const PrunableFlags& flags) {
  struct Cand {
    float mag;
    std::size_t layer, idx;
  };
  std::vector<Cand> cands;
  for (std::size_t l = 0; l < m.size(); ++l) {
    if (!flags.empty() && !flags[l]) continue;
    for (std::size_t i = 0; i < m[l].bits().size(); ++i) {
      if (m[l].bits()[i]) cands.push_back({std::fabs(w[l].values()[i]), l, i});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.mag != b.mag) return a.mag < b.mag;
    if (a.layer != b.layer) return a.layer < b.layer;
    return a.idx < b.idx;
  });
  auto out = m;
  for (std::size_t j = 0; j < k; ++j) out[cands[j].layer].bits()[cands[j].idx] = 0;
  return out;
}

std::size_t set_bits(const std::vector<SparseMask>& masks, const PrunableFlags& flags) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    if (flags.empty() || flags[l]) n += masks[l].count();
  }
  return n;
}

}  // namespace

TEST_CASE("mask basics") {
  SparseMask m("a", matrix_shape(2, 5), false);
  m.set(0, 1, true);
  m.set(0, 4, true);
  m.set(1, 4, true);
  CHECK(m.count() == 3);
  CHECK(m.row_count(0) == 2);
  CHECK(m.row_support(0) == std::vector<std::uint32_t>{1, 4});
  CHECK(density(m) == doctest::Approx(0.3));

  WeightTensor w("a", matrix_shape(2, 5), std::vector<float>(10, 2.0f));
  const auto masked = apply_mask(w, m);
  CHECK(std::accumulate(masked.values().begin(), masked.values().end(), 0.0f) == 6.0f);

  WeightTensor other("a", matrix_shape(5, 2));
  CHECK_THROWS_AS(require_congruent(m, other), ShapeError);
  CHECK_THROWS_AS(LayerShape({0, 1, 1, 1, 1, 0}).validate(), ShapeError);
}

TEST_CASE("global magnitude prune matches a sorted reference") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<WeightTensor> w;
    std::vector<SparseMask> m;
    PrunableFlags flags;
    const int layers = 1 + trial % 4;
    for (int l = 0; l < layers; ++l) {
      const auto shape = matrix_shape(3 + l, 7 + 2 * l);
      w.push_back(random_weights(rng, "l" + std::to_string(l), shape));
      // Quantised magnitudes force ties across layers.
      for (auto& v : w.back().values()) v = std::round(v * 4.0f) / 4.0f;
      m.push_back(random_mask(rng, "l" + std::to_string(l), shape, 0.7));
      flags.push_back(l != 2);
    }
    const double fraction = 0.05 * (trial % 19);
    const auto got = global_magnitude_prune(w, m, fraction, flags);
    const std::size_t remaining = set_bits(m, flags);
    const auto k = static_cast<std::size_t>(std::floor(fraction * double(remaining)));
    CHECK(got == sorted_prune(w, m, k, flags));
    for (std::size_t l = 0; l < m.size(); ++l) CHECK(is_subset(got[l], m[l]));
  }
}

TEST_CASE("three twenty-percent rounds leave 51.2 percent") {
  std::mt19937_64 rng(1);
  const auto shape = matrix_shape(10, 100);
  std::vector<WeightTensor> w{random_weights(rng, "a", shape)};
  std::vector<SparseMask> m{SparseMask("a", shape)};
  for (int r = 0; r < 3; ++r) m = global_magnitude_prune(w, m, 0.2);
  CHECK(m[0].count() == 512);
  CHECK(global_sparsity(m) == doctest::Approx(0.488));
}

TEST_CASE("non-prunable layers are untouched and excluded from sparsity") {
  std::mt19937_64 rng(2);
  std::vector<WeightTensor> w{random_weights(rng, "a", matrix_shape(4, 4)),
                              random_weights(rng, "head", matrix_shape(2, 4))};
  // Tiny head weights would be pruned first if the head were eligible.
  for (auto& v : w[1].values()) v *= 1e-6f;
  std::vector<SparseMask> m{SparseMask("a", matrix_shape(4, 4)),
                            SparseMask("head", matrix_shape(2, 4))};
  const PrunableFlags flags{true, false};
  const auto got = global_magnitude_prune(w, m, 0.5, flags);
  CHECK(got[1] == m[1]);
  CHECK(got[0].count() == 8);
  CHECK(global_sparsity(got, flags) == doctest::Approx(0.5));
}

TEST_CASE("one-shot and random pruning reach the rounded target") {
  std::mt19937_64 rng(3);
  const auto shape = matrix_shape(6, 50);
  std::vector<WeightTensor> w{random_weights(rng, "a", shape)};
  std::vector<SparseMask> m{SparseMask("a", shape)};

  CHECK(one_shot_magnitude_prune(w, m, 0.0) == m);
  for (double t : {0.1, 0.37, 0.5, 0.9}) {
    const auto keep = static_cast<std::size_t>(std::llround((1.0 - t) * 300.0));
    const auto omp = one_shot_magnitude_prune(w, m, t);
    CHECK(omp[0].count() == keep);
    // Every kept weight is at least as large as every removed one.
    float min_kept = 1e9f, max_removed = 0.0f;
    for (std::size_t i = 0; i < 300; ++i) {
      const float a = std::fabs(w[0].values()[i]);
      if (omp[0].bits()[i]) min_kept = std::min(min_kept, a);
      else max_removed = std::max(max_removed, a);
    }
    CHECK(min_kept >= max_removed);

    const auto rp = random_prune(m, t, 9);
    CHECK(rp[0].count() == keep);
    CHECK(rp == random_prune(m, t, 9));
  }
  CHECK(random_prune(m, 0.5, 1) != random_prune(m, 0.5, 2));
}

TEST_CASE("prune fractions outside [0, 1) are rejected") {
  std::vector<WeightTensor> w{WeightTensor("a", matrix_shape(2, 2))};
  std::vector<SparseMask> m{SparseMask("a", matrix_shape(2, 2))};
  CHECK_THROWS_AS(global_magnitude_prune(w, m, 1.0), ParameterError);
  CHECK_THROWS_AS(global_magnitude_prune(w, m, -0.1), ParameterError);
  CHECK_THROWS_AS(one_shot_magnitude_prune(w, m, 1.0), ParameterError);
  CHECK_THROWS_AS(random_prune(m, 1.5, 1), ParameterError);
}
