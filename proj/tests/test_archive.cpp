#include <cstring>
#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "sltk/archive.hpp"
#include "sltk/errors.hpp"
#include "support.hpp"

using namespace sltk;

namespace {

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f32(std::string& s, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(s, v);
}

// One layer "L", 2 x 3 matrix, rows {0, 2} and {1}.
std::string fixture_bytes() {
  std::string s = "SLTK";
  put_u16(s, 1);
  put_u32(s, 1);
  put_u16(s, 1);
  s += "L";
  for (std::uint32_t v : {2u, 3u, 1u, 1u, 1u, 0u}) put_u32(s, v);
  s.push_back(1);
  s.push_back(0x05);
  s.push_back(0x02);
  for (float f : {1.0f, -2.0f, 0.5f, 3.0f, 4.0f, -0.25f}) put_f32(s, f);
  return s;
}

Archive fixture_archive() {
  const LayerShape shape{2, 3, 1, 1, 1, 0};
  Archive a = make_dense_archive({{"L", shape, true, "", 1, false}},
                                 {WeightTensor("L", shape, {1.0f, -2.0f, 0.5f, 3.0f, 4.0f, -0.25f})});
  a.masks[0] = SparseMask("L", shape, {1, 0, 1, 0, 1, 0});
  return a;
}

Archive random_archive(std::mt19937_64& rng, bool with_layouts) {
  std::uniform_int_distribution<std::uint32_t> dim(1, 12), kdim(1, 3);
  const int layers = 1 + static_cast<int>(rng() % 4);
  std::vector<LayerSpec> specs;
  std::vector<WeightTensor> weights;
  std::vector<SparseMask> masks;
  for (int l = 0; l < layers; ++l) {
    const std::uint32_t k = kdim(rng);
    LayerShape shape{dim(rng), dim(rng), k, k, 1 + static_cast<std::uint32_t>(rng() % 2), k / 2};
    specs.push_back({"layer" + std::to_string(l), shape, rng() % 4 != 0, "", 1, false});
    weights.push_back(testing_support::random_weights(rng, specs.back().name, shape));
    masks.push_back(testing_support::random_mask(rng, specs.back().name, shape, 0.4));
  }
  Archive a = make_dense_archive(specs, weights);
  a.masks = masks;
  if (rng() % 2) a.metadata.set("note", "run " + std::to_string(rng() % 100));
  if (with_layouts) {
    std::vector<BlockLayout> layouts;
    for (std::size_t l = 0; l < specs.size(); ++l) {
      BlockLayout layout{specs[l].name, specs[l].shape, {}};
      // Disjoint blocks: split rows into halves, each with its own column run.
      const std::uint32_t rows = specs[l].shape.c_out;
      const auto cols = static_cast<std::uint32_t>(specs[l].shape.n());
      DenseBlock top, bottom;
      for (std::uint32_t r = 0; r < rows; ++r) (r < rows / 2 ? top : bottom).rows.push_back(r);
      for (std::uint32_t c = 0; c < cols; ++c) {
        if (c % 2 == 0) top.cols.push_back(c);
        if (c % 3 == 0) bottom.cols.push_back(c);
      }
      if (!top.rows.empty()) layout.blocks.push_back(top);
      layout.blocks.push_back(bottom);
      layouts.push_back(layout);
    }
    a.layouts = layouts;
  }
  return a;
}

std::size_t format_offset(const std::string& bytes) {
  try {
    decode_archive(bytes, "t");
  } catch (const FormatError& e) {
    return e.offset();
  }
  FAIL("expected a FormatError");
  return 0;
}

}  // namespace

TEST_CASE("encoding matches the hand-built byte fixture") {
  CHECK(encode_archive(fixture_archive()) == fixture_bytes());
  CHECK(decode_archive(fixture_bytes()) == fixture_archive());
}

TEST_CASE("random archives round trip bit for bit") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 40; ++i) {
    const Archive a = random_archive(rng, i % 2 == 1);
    const std::string bytes = encode_archive(a);
    const Archive back = decode_archive(bytes);
    CHECK(back == a);
    CHECK(encode_archive(back) == bytes);
  }
}

TEST_CASE("topology is carried in metadata") {
  std::mt19937_64 rng(12);
  Archive a = random_archive(rng, false);
  a.layers[0].pool = 2;
  a.layers.back().global_pool = true;
  const Archive back = decode_archive(encode_archive(a));
  CHECK(back == a);
}

TEST_CASE("file round trip") {
  std::mt19937_64 rng(13);
  const Archive a = random_archive(rng, true);
  const auto path = (std::filesystem::temp_directory_path() / "sltk_archive_test.sltk").string();
  save_archive(path, a);
  CHECK(load_archive(path) == a);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_archive(path), IoError);
  CHECK_THROWS_AS(save_archive("/nonexistent-dir/x.sltk", a), IoError);
}

TEST_CASE("every strict prefix is rejected except at section boundaries") {
  std::mt19937_64 rng(14);
  Archive a = random_archive(rng, true);
  a.metadata.set("k", "v");
  const std::string bytes = encode_archive(a);
  Archive bare = a;
  bare.layouts.reset();
  bare.metadata = Manifest{};
  const std::size_t body_end = encode_archive(bare).size();
  const std::size_t meta_end = body_end + 4 + a.metadata.to_text().size();
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    const std::string prefix = bytes.substr(0, len);
    if (len == body_end || len == meta_end) {
      CHECK_NOTHROW(decode_archive(prefix));
    } else {
      CHECK_THROWS_AS(decode_archive(prefix), FormatError);
    }
  }
}

TEST_CASE("corruptions report their byte offset") {
  std::string bytes = fixture_bytes();
  bytes[0] = 'X';
  CHECK(format_offset(bytes) == 0);

  bytes = fixture_bytes();
  bytes[4] = 2;
  CHECK_THROWS_AS(decode_archive(bytes), VersionError);
  CHECK(format_offset(bytes) == 4);

  // Offsets: magic 4, version 2, count 4, name len 2, name 1, shape 24.
  const std::size_t flag_at = 4 + 2 + 4 + 2 + 1 + 24;
  bytes = fixture_bytes();
  bytes[flag_at] = 3;
  CHECK(format_offset(bytes) == flag_at);

  bytes = fixture_bytes();
  bytes[flag_at + 1] = static_cast<char>(0x0D);  // bit 3 is padding for n = 3
  CHECK(format_offset(bytes) == flag_at + 1);

  bytes = fixture_bytes();
  bytes[13] = 0;  // c_out = 0
  CHECK(format_offset(bytes) == 13);

  bytes = fixture_bytes() + "x";
  CHECK(format_offset(bytes) == fixture_bytes().size());

  try {
    decode_archive("NOPE", "model.sltk");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string what = e.what();
    CHECK(what.find("model.sltk") != std::string::npos);
    CHECK(what.find("offset 0") != std::string::npos);
  }
}

TEST_CASE("invalid layouts are rejected on both sides") {
  Archive a = fixture_archive();
  a.layouts = std::vector<BlockLayout>{{"L", a.layers[0].shape, {{{0, 0}, {1}}}}};
  CHECK_THROWS_AS(encode_archive(a), LayoutError);

  a.layouts = std::vector<BlockLayout>{{"L", a.layers[0].shape, {{{0}, {1}}}}};
  std::string bytes = encode_archive(a);
  // Last u32 is the single column index; point it past the matrix.
  bytes[bytes.size() - 4] = 9;
  CHECK_THROWS_AS(decode_archive(bytes), FormatError);
}

TEST_CASE("manifest text") {
  const Manifest m = Manifest::parse("# c\n\na=1\nb=x=y\n");
  CHECK(m.get("a") == "1");
  CHECK(m.get("b") == "x=y");
  CHECK_FALSE(m.get("c"));
  CHECK(Manifest::parse(m.to_text()) == m);
  CHECK_THROWS_AS(Manifest::parse("novalue\n"), ParameterError);
}
