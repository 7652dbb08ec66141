// Drives the built command-line tool through std::system.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "sltk/archive.hpp"
#include "sltk/refill.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace sltk;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "sltk_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Run tool(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt";
  const fs::path err = workdir() / "stderr.txt";
  const std::string cmd = std::string(SLTK_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

std::string shape_file(const std::string& name) {
  return std::string(SLTK_SHAPES) + "/" + name;
}

// Value of `key=` in key=value output.
std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

void write_file(const std::string& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("three imp steps print 51.20 percent remaining") {
  write_file(path("thousand.txt"), "a 10 100 1 1 1 0 1\nhead 2 10 1 1 1 0 0\n");
  REQUIRE(tool("init --in " + path("thousand.txt") + " --out " + path("p0.sltk")).code == 0);
  Run r;
  for (int i = 0; i < 3; ++i) {
    r = tool("prune --in " + path(i ? "p.sltk" : "p0.sltk") + " --out " + path("p.sltk") +
             " --method imp-step --fraction 0.2");
    REQUIRE(r.code == 0);
  }
  CHECK(value_of(r.out, "remaining_percent") == "51.20");
  // The input archive is left untouched.
  CHECK(load_archive(path("p0.sltk")).masks[0].count() == 1000);
}

TEST_CASE("omp with target zero copies the archive") {
  REQUIRE(tool("init --in " + shape_file("tiny.txt") + " --out " + path("t.sltk")).code == 0);
  REQUIRE(tool("prune --in " + path("t.sltk") + " --out " + path("t0.sltk") + " --method omp --target 0").code == 0);
  CHECK(slurp(path("t.sltk")) == slurp(path("t0.sltk")));

  Run r = tool("prune --in " + path("t.sltk") + " --out " + path("tr.sltk") +
               " --method random --target 0.5 --seed 3");
  CHECK(r.code == 0);
  CHECK(value_of(r.out, "remaining_percent") == "50.00");
}

TEST_CASE("error exit codes") {
  write_file(path("bad.sltk"), "JUNKJUNKJUNK");
  Run r = tool("prune --in " + path("bad.sltk") + " --out " + path("x.sltk"));
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.sltk") != std::string::npos);
  CHECK(r.err.find("offset 0") != std::string::npos);

  CHECK(tool("prune --in " + path("missing.sltk") + " --out " + path("x.sltk")).code == 2);
  CHECK(tool("prune --in " + path("t.sltk") + " --out /nonexistent-dir/x.sltk").code == 2);
  CHECK(tool("prune --in " + path("t.sltk") + " --out " + path("x.sltk") + " --fraction 1.0").code == 1);
  CHECK(tool("prune --in " + path("t.sltk") + " --out " + path("x.sltk") + " --method lasso").code == 1);
  CHECK(tool("refill --in " + path("t.sltk") + " --out " + path("x.sltk") + " --criterion taylor").code == 1);
  CHECK(tool("regroup --in " + path("t.sltk") + " --out " + path("x.sltk") + " --t1 0").code == 1);
  CHECK(tool("").code == 1);
  CHECK(tool("--help").code == 0);
  CHECK_FALSE(fs::exists(path("x.sltk")));
}

TEST_CASE("refill is idempotent through the tool") {
  REQUIRE(tool("prune --in " + path("t.sltk") + " --out " + path("t5.sltk") + " --method omp --target 0.5").code == 0);
  REQUIRE(tool("refill --in " + path("t5.sltk") + " --out " + path("f1.sltk") + " --plus-fraction 0").code == 0);
  REQUIRE(tool("refill --in " + path("f1.sltk") + " --out " + path("f2.sltk") + " --plus-fraction 0").code == 0);
  CHECK(slurp(path("f1.sltk")) == slurp(path("f2.sltk")));
  const Archive a = load_archive(path("f1.sltk"));
  for (const auto& m : a.masks) CHECK(is_channel_structured(m));
}

TEST_CASE("regroup through the tool") {
  SUBCASE("all-zeros archive") {
    Archive a = load_archive(path("t.sltk"));
    for (auto& m : a.masks) std::fill(m.bits().begin(), m.bits().end(), 0);
    for (auto& l : a.layers) l.prunable = true;
    save_archive(path("zeros.sltk"), a);
    const Run r = tool("regroup --in " + path("zeros.sltk") + " --out " + path("zr.sltk"));
    CHECK(r.code == 0);
    const Archive out = load_archive(path("zr.sltk"));
    REQUIRE(out.layouts);
    for (const auto& layout : *out.layouts) CHECK(layout.blocks.empty());
  }
  SUBCASE("planted blocks") {
    const auto p = oracle::planted_blocks(77, 128, 512, 4, 32, 64, 0.01);
    std::mt19937_64 rng(1);
    LayerSpec spec{"planted", p.mask.shape(), true, "", 1, false};
    Archive a = make_dense_archive({spec}, {testing_support::random_weights(rng, "planted", spec.shape)});
    a.masks[0] = p.mask;
    save_archive(path("planted.sltk"), a);
    const Run r = tool("regroup --in " + path("planted.sltk") + " --out " + path("pr.sltk") + " --seed 42");
    REQUIRE(r.code == 0);
    // Noise bits lie outside the planted blocks, so whole-mask coverage
    // sits a little below planted-cell recovery.
    CHECK(std::stod(value_of(r.out, "coverage")) >= 0.85);
    const Archive out = load_archive(path("pr.sltk"));
    REQUIRE(out.layouts);
    CHECK(oracle::planted_recovery(p, (*out.layouts)[0]) >= 0.9);

    REQUIRE(tool("regroup --in " + path("planted.sltk") + " --out " + path("pr2.sltk") + " --seed 42").code == 0);
    CHECK(slurp(path("pr.sltk")) == slurp(path("pr2.sltk")));
  }
}

TEST_CASE("flops and bench") {
  Run r = tool("flops --in " + shape_file("vgg16_cifar.txt") + " --input-hw 32x32");
  REQUIRE(r.code == 0);
  CHECK(std::stod(value_of(r.out, "total_gmacs")) == doctest::Approx(0.314).epsilon(0.05));
  CHECK(tool("flops --in " + shape_file("resnet18_cifar.txt")).code == 0);

  r = tool("flops --in " + path("t5.sltk") + " --input-hw 16x16");
  REQUIRE(r.code == 0);
  CHECK(std::stod(value_of(r.out, "global_sparsity")) == doctest::Approx(0.5).epsilon(0.001));

  REQUIRE(tool("regroup --in " + path("t5.sltk") + " --out " + path("g.sltk") + " --b1 4 --b2 4 --t2 2").code == 0);
  r = tool("bench --in " + path("g.sltk") + " --input-hw 8x8 --repeats 3 --csv " + path("b.csv"));
  REQUIRE(r.code == 0);
  const std::string csv = slurp(path("b.csv"));
  CHECK(csv.rfind("layer,executor,wall_ms_median,macs,checksum\n", 0) == 0);
  CHECK(csv.find("conv2,block,") != std::string::npos);

  // A layout that disagrees with the mask trips the consistency check.
  Archive a = load_archive(path("g.sltk"));
  REQUIRE_FALSE((*a.layouts)[2].blocks.empty());
  (*a.layouts)[2].blocks.pop_back();
  save_archive(path("inconsistent.sltk"), a);
  r = tool("bench --in " + path("inconsistent.sltk") + " --input-hw 8x8 --repeats 3");
  CHECK(r.code == 1);
  CHECK(tool("bench --in " + path("g.sltk") + " --repeats 2").code == 1);
}

TEST_CASE("demo and report") {
  const std::string quick = " --rounds 2 --epochs 3 --train-size 64";
  for (const char* seed : {"1", "2", "3"}) {
    REQUIRE(tool(std::string("demo --seed ") + seed + quick + " --out " + path(std::string("demo") + seed)).code == 0);
  }
  REQUIRE(tool("demo --seed 1" + quick + " --out " + path("demo1b")).code == 0);
  for (const char* f : {"manifest.txt", "imp_final.sltk", "regroup_final.sltk"}) {
    CHECK(slurp(path("demo1") + "/" + f) == slurp(path("demo1b") + "/" + f));
  }
  CHECK(load_archive(path("demo1") + "/regroup_final.sltk").layouts.has_value());

  const Run r = tool("report " + path("demo1") + "/manifest.txt " + path("demo2") + "/manifest.txt " +
                     path("demo3") + "/manifest.txt");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "method,round,runs,sparsity,accuracy_mean,accuracy_min,accuracy_max");
  std::map<std::string, int> seen;
  double last = -1.0;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::istringstream cells(line);
    std::string method, round, runs, sparsity;
    std::getline(cells, method, ',');
    std::getline(cells, round, ',');
    std::getline(cells, runs, ',');
    std::getline(cells, sparsity, ',');
    CHECK(++seen[method + "/" + round] == 1);
    CHECK(runs == "3");
    CHECK(std::stod(sparsity) >= last);
    last = std::stod(sparsity);
  }
  // dense, imp x2, refill x2, regroup x2, reinit x1
  CHECK(rows == 8);
  CHECK(tool("report").code == 1);
  CHECK(tool("report " + path("nope.txt")).code == 2);
}
