#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sltk/archive.hpp"
#include "sltk/errors.hpp"
#include "sltk/exec.hpp"
#include "sltk/flops.hpp"
#include "sltk/parallel.hpp"
#include "sltk/prune.hpp"
#include "sltk/refill.hpp"
#include "sltk/regroup.hpp"
#include "sltk/trainer.hpp"

namespace fs = std::filesystem;
using namespace sltk;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

struct Options {
  std::string in;
  std::string out;
  std::string shapes;
  std::string method = "imp-step";
  double fraction = 0.2;
  double target = 0.5;
  std::string criterion = "l1_weight";
  double plus_fraction = 0.0;
  std::optional<int> t1, t2, b1, b2;
  std::uint64_t seed = kDefaultSeed;
  int repeats = 5;
  std::string input_hw;
  std::string csv;
  std::string executors = "dense,csr,block";
  int rounds = 3;
  int epochs = 0;
  int train_size = 0;
  std::vector<std::string> manifests;
};

void require_readable(const std::string& path) {
  if (path.empty()) throw ParameterError("--in is required");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
}

void require_writable(const std::string& path) {
  if (path.empty()) throw ParameterError("--out is required");
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw IoError("output directory does not exist: " + parent.string());
  }
}

void require_fraction(const char* flag, double v) {
  if (!(v >= 0.0 && v < 1.0)) {
    throw ParameterError(std::string(flag) + " must lie in [0, 1)");
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write " + path);
}

void print_sparsity(const Archive& a) {
  const auto flags = a.prunable();
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    std::cout << "layer." << a.layers[l].name << ".sparsity=" << fixed(1.0 - density(a.masks[l]), 6)
              << "\n";
  }
  const double s = global_sparsity(a.masks, flags);
  std::cout << "global_sparsity=" << fixed(s, 6) << "\n";
  std::cout << "remaining_percent=" << fixed(100.0 * (1.0 - s), 2) << "\n";
}

std::vector<LayerStructure> structures(const Archive& a) {
  std::vector<LayerStructure> out;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layouts) {
      out.emplace_back(&(*a.layouts)[l]);
    } else {
      out.emplace_back(&a.masks[l]);
    }
  }
  return out;
}

int cmd_init(const Options& o) {
  require_readable(o.shapes.empty() ? o.in : o.shapes);
  require_writable(o.out);
  auto layers = load_architecture(o.shapes.empty() ? o.in : o.shapes);
  std::mt19937_64 rng(o.seed);
  std::vector<WeightTensor> weights;
  for (const auto& spec : layers) {
    WeightTensor w(spec.name, spec.shape);
    std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(spec.shape.n())));
    for (auto& v : w.values()) v = dist(rng);
    weights.push_back(std::move(w));
  }
  Archive a = make_dense_archive(std::move(layers), std::move(weights));
  save_archive(o.out, a);
  std::cout << "layers=" << a.layers.size() << "\n";
  print_sparsity(a);
  return 0;
}

int cmd_prune(const Options& o) {
  require_readable(o.in);
  require_writable(o.out);
  if (o.method == "imp-step") {
    require_fraction("--fraction", o.fraction);
  } else if (o.method == "omp" || o.method == "random") {
    require_fraction("--target", o.target);
  } else {
    throw ParameterError("unknown --method " + o.method + " (imp-step, omp, random)");
  }
  Archive a = load_archive(o.in);
  const auto flags = a.prunable();
  if (o.method == "imp-step") {
    a.masks = global_magnitude_prune(a.weights, a.masks, o.fraction, flags);
  } else if (o.method == "omp") {
    a.masks = one_shot_magnitude_prune(a.weights, a.masks, o.target, flags);
  } else {
    a.masks = random_prune(a.masks, o.target, o.seed, flags);
  }
  // Old layouts no longer match the new masks.
  a.layouts.reset();
  save_archive(o.out, a);
  std::cout << "method=" << o.method << "\n";
  if (!o.input_hw.empty()) {
    std::cout << flops(a.layers, parse_hw(o.input_hw), structures(a)).to_text();
  }
  print_sparsity(a);
  return 0;
}

int cmd_refill(const Options& o) {
  require_readable(o.in);
  require_writable(o.out);
  require_fraction("--plus-fraction", o.plus_fraction);
  const ChannelCriterion criterion = parse_criterion(o.criterion);
  Archive a = load_archive(o.in);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (!a.layers[l].prunable) continue;
    if (a.masks[l].count() == 0) {
      std::cout << "warning.layer." << a.layers[l].name << "=no set bits, left empty\n";
      continue;
    }
    a.masks[l] = o.plus_fraction > 0.0
                     ? refill_plus(a.masks[l], a.weights[l], criterion, o.plus_fraction)
                     : refill(a.masks[l], a.weights[l], criterion);
  }
  a.layouts.reset();
  save_archive(o.out, a);
  std::cout << "criterion=" << criterion_name(criterion) << "\n";
  std::cout << "plus_fraction=" << fixed(o.plus_fraction, 4) << "\n";
  print_sparsity(a);
  return 0;
}

int cmd_regroup(const Options& o) {
  require_readable(o.in);
  require_writable(o.out);
  Archive a = load_archive(o.in);
  const auto original = a.masks;
  auto [masks, layouts] = regroup_layers(a.layers, a.masks, a.weights, [&](const LayerSpec& spec) {
    RegroupParams p = RegroupParams::defaults_for(spec.shape.c_out);
    if (o.t1) p.t1 = *o.t1;
    if (o.b1) p.b1 = *o.b1;
    p.t2 = o.t2 ? *o.t2 : (p.b1 + 1) / 2;
    if (o.b2) p.b2 = *o.b2;
    p.seed = o.seed;
    p.validate();
    return p;
  });

  std::size_t covered = 0;
  std::size_t total = 0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    std::size_t layer_covered = 0;
    const auto orig = original[l].bits();
    const auto kept = masks[l].bits();
    for (std::size_t i = 0; i < orig.size(); ++i) layer_covered += orig[i] && kept[i];
    const std::size_t layer_total = original[l].count();
    std::cout << "layer." << a.layers[l].name << ".blocks=" << layouts[l].blocks.size() << "\n";
    std::cout << "layer." << a.layers[l].name << ".coverage="
              << fixed(layer_total ? double(layer_covered) / double(layer_total) : 1.0, 6) << "\n";
    if (a.layers[l].prunable) {
      covered += layer_covered;
      total += layer_total;
    }
  }
  a.masks = std::move(masks);
  a.layouts = std::move(layouts);
  save_archive(o.out, a);
  std::cout << "coverage=" << fixed(total ? double(covered) / double(total) : 1.0, 6) << "\n";
  print_sparsity(a);
  return 0;
}

int cmd_bench(const Options& o) {
  require_readable(o.in);
  if (!o.csv.empty()) require_writable(o.csv);
  if (o.repeats < 3) throw ParameterError("--repeats must be at least 3");
  const Hw hw = parse_hw(o.input_hw.empty() ? "32x32" : o.input_hw);
  std::vector<Executor> executors;
  std::stringstream list(o.executors);
  for (std::string name; std::getline(list, name, ',');) executors.push_back(parse_executor(name));

  const Archive a = load_archive(o.in);
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<BenchLayer> layers;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    BenchLayer b;
    b.weights = a.weights[l];
    b.mask = a.masks[l];
    if (a.layouts) b.layout = (*a.layouts)[l];
    b.input = FeatureMap(a.layers[l].shape.c_in, hw.height, hw.width);
    for (auto& v : b.input.values) v = dist(rng);
    layers.push_back(std::move(b));
  }
  const BenchReport report = bench(layers, executors, o.repeats);
  for (const auto& note : report.notes) std::cerr << "note: " << note << "\n";
  if (o.csv.empty()) {
    std::cout << report.to_csv();
  } else {
    write_text(o.csv, report.to_csv());
    std::cout << "rows=" << report.rows.size() << "\ncsv=" << o.csv << "\n";
  }
  return 0;
}

bool is_archive_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  char magic[4] = {};
  f.read(magic, 4);
  return f.gcount() == 4 && std::string(magic, 4) == "SLTK";
}

int cmd_flops(const Options& o) {
  require_readable(o.in);
  const Hw hw = parse_hw(o.input_hw.empty() ? "32x32" : o.input_hw);
  if (is_archive_file(o.in)) {
    const Archive a = load_archive(o.in);
    std::cout << flops(a.layers, hw, structures(a)).to_text();
  } else {
    const auto layers = load_architecture(o.in);
    std::cout << flops(layers, hw).to_text();
  }
  return 0;
}

void record(Manifest& m, const std::string& method, int round, double sparsity, double accuracy) {
  const std::string key = "run." + method + "." + std::to_string(round) + ".";
  m.add(key + "sparsity", fixed(sparsity, 6));
  m.add(key + "accuracy", fixed(accuracy, 6));
}

Archive tiny_archive(const TinyModel& model, std::vector<SparseMask> masks) {
  Archive a = make_dense_archive(model.layers, model.weights);
  a.masks = std::move(masks);
  return a;
}

int cmd_demo(const Options& o) {
  if (o.out.empty()) throw ParameterError("--out is required");
  if (o.rounds < 1) throw ParameterError("--rounds must be at least 1");
  fs::create_directories(o.out);
  if (!fs::is_directory(o.out)) throw IoError("cannot create " + o.out);

  TaskConfig task_cfg;
  task_cfg.seed = o.seed;
  if (o.train_size > 0) task_cfg.train = static_cast<std::size_t>(o.train_size);
  TrainConfig cfg;
  cfg.seed = o.seed;
  if (o.epochs > 0) cfg.epochs = o.epochs;
  cfg.validate();

  const SyntheticTask task = SyntheticTask::generate(task_cfg);
  const TinyModel model = TinyModel::create(o.seed);
  const auto flags = PrunableFlags{true, true, true, false};
  const RegroupPolicy policy = tiny_regroup_policy(o.seed);

  Manifest m;
  m.add("demo.seed", std::to_string(o.seed));
  m.add("demo.rounds", std::to_string(o.rounds));
  m.add("task.train", std::to_string(task_cfg.train));
  m.add("task.noise", fixed(task_cfg.noise, 4));
  cfg.write(m);

  const ImpResult result = imp(model, task, cfg, o.rounds);
  record(m, "dense", 0, 0.0, result.rounds[0].accuracy);
  std::cout << "dense.accuracy=" << fixed(result.rounds[0].accuracy, 4) << "\n";

  std::vector<BlockLayout> last_layouts;
  std::vector<SparseMask> last_regroup;
  for (int r = 1; r <= o.rounds; ++r) {
    const RoundRecord& rec = result.rounds[static_cast<std::size_t>(r)];
    record(m, "imp", r, rec.sparsity, rec.accuracy);

    std::vector<SparseMask> refilled = rec.masks;
    for (std::size_t l = 0; l < refilled.size(); ++l) {
      if (flags[l]) refilled[l] = refill(rec.masks[l], rec.weights[l], ChannelCriterion::kL1Weight);
    }
    const double refill_acc = run_ticket(refilled, task, cfg, TicketInit::kRewound, result.state);
    record(m, "imp_refill", r, global_sparsity(refilled, flags), refill_acc);

    auto [regrouped, layouts] = regroup_layers(model.layers, rec.masks, rec.weights, policy);
    const double regroup_acc = run_ticket(layouts, task, cfg, TicketInit::kRewound, result.state);
    record(m, "imp_regroup", r, global_sparsity(regrouped, flags), regroup_acc);
    std::cout << "round." << r << ".imp_sparsity=" << fixed(rec.sparsity, 4)
              << "\nround." << r << ".imp_accuracy=" << fixed(rec.accuracy, 4)
              << "\nround." << r << ".refill_accuracy=" << fixed(refill_acc, 4)
              << "\nround." << r << ".regroup_accuracy=" << fixed(regroup_acc, 4) << "\n";
    last_layouts = std::move(layouts);
    last_regroup = std::move(regrouped);
  }
  const double reinit_acc =
      run_ticket(last_layouts, task, cfg, TicketInit::kRandomReinit, result.state, o.seed + 1);
  record(m, "imp_regroup_reinit", o.rounds, global_sparsity(last_regroup, flags), reinit_acc);
  std::cout << "round." << o.rounds << ".regroup_reinit_accuracy=" << fixed(reinit_acc, 4) << "\n";

  const fs::path dir(o.out);
  Archive imp_archive = tiny_archive(result.final_model, result.state.masks);
  save_archive((dir / "imp_final.sltk").string(), imp_archive);
  Archive regroup_archive = tiny_archive(result.final_model, last_regroup);
  regroup_archive.layouts = last_layouts;
  save_archive((dir / "regroup_final.sltk").string(), regroup_archive);
  write_text((dir / "manifest.txt").string(), m.to_text());
  std::cout << "manifest=" << (dir / "manifest.txt").string() << "\n";
  return 0;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cmd_report(const Options& o) {
  if (o.manifests.empty()) throw ParameterError("report needs at least one manifest");
  for (const auto& path : o.manifests) require_readable(path);
  if (!o.csv.empty()) require_writable(o.csv);

  struct Cell {
    std::vector<double> sparsity;
    std::vector<double> accuracy;
  };
  std::map<std::pair<std::string, int>, Cell> cells;
  for (const auto& path : o.manifests) {
    const Manifest m = Manifest::parse(read_text(path));
    for (const auto& [key, value] : m.entries()) {
      if (key.rfind("run.", 0) != 0) continue;
      const auto last = key.rfind('.');
      const auto mid = key.rfind('.', last - 1);
      if (mid <= 3 || last == std::string::npos) continue;
      const std::string method = key.substr(4, mid - 4);
      const int round = std::stoi(key.substr(mid + 1, last - mid - 1));
      const std::string field = key.substr(last + 1);
      Cell& c = cells[{method, round}];
      if (field == "sparsity") c.sparsity.push_back(std::stod(value));
      if (field == "accuracy") c.accuracy.push_back(std::stod(value));
    }
  }

  struct Row {
    std::string method;
    int round;
    std::size_t runs;
    double sparsity, mean, lo, hi;
  };
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  std::vector<Row> rows;
  for (const auto& [key, c] : cells) {
    if (c.accuracy.empty()) continue;
    rows.push_back({key.first, key.second, c.accuracy.size(), mean(c.sparsity), mean(c.accuracy),
                    *std::min_element(c.accuracy.begin(), c.accuracy.end()),
                    *std::max_element(c.accuracy.begin(), c.accuracy.end())});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.sparsity < b.sparsity; });

  std::string csv = "method,round,runs,sparsity,accuracy_mean,accuracy_min,accuracy_max\n";
  for (const auto& r : rows) {
    csv += r.method + "," + std::to_string(r.round) + "," + std::to_string(r.runs) + "," +
           fixed(r.sparsity, 6) + "," + fixed(r.mean, 6) + "," + fixed(r.lo, 6) + "," +
           fixed(r.hi, 6) + "\n";
  }
  if (o.csv.empty()) {
    std::cout << csv;
  } else {
    write_text(o.csv, csv);
    std::cout << "rows=" << rows.size() << "\ncsv=" << o.csv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse lottery-ticket toolkit: prune, structure and benchmark conv masks"};
  app.require_subcommand(1);
  Options o;

  auto* init = app.add_subcommand("init", "dense archive with random weights from a shape file");
  init->add_option("--in", o.shapes, "architecture shape file")->required();
  init->add_option("--out", o.out)->required();
  init->add_option("--seed", o.seed);

  auto* prune = app.add_subcommand("prune", "imp-step, omp or random pruning");
  prune->add_option("--in", o.in)->required();
  prune->add_option("--out", o.out)->required();
  prune->add_option("--method", o.method, "imp-step | omp | random");
  prune->add_option("--fraction", o.fraction, "imp-step: fraction of remaining bits to clear");
  prune->add_option("--target", o.target, "omp/random: target sparsity");
  prune->add_option("--seed", o.seed);
  prune->add_option("--input-hw", o.input_hw, "also print MACs for this HxW input");

  auto* refill_cmd = app.add_subcommand("refill", "channel-structure each prunable layer");
  refill_cmd->add_option("--in", o.in)->required();
  refill_cmd->add_option("--out", o.out)->required();
  refill_cmd->add_option("--criterion", o.criterion, "l1_weight | remaining_count");
  refill_cmd->add_option("--plus-fraction", o.plus_fraction, "extra channels, 0 for plain refill");

  auto* regroup = app.add_subcommand("regroup", "extract dense blocks and write block layouts");
  regroup->add_option("--in", o.in)->required();
  regroup->add_option("--out", o.out)->required();
  regroup->add_option("--t1", o.t1, "partitions (default max(1, rows/64))");
  regroup->add_option("--t2", o.t2, "column admission threshold (default ceil(b1/2))");
  regroup->add_option("--b1", o.b1, "minimum block rows (default 16)");
  regroup->add_option("--b2", o.b2, "minimum block columns (default 32)");
  regroup->add_option("--seed", o.seed);

  auto* bench_cmd = app.add_subcommand("bench", "time executors per layer");
  bench_cmd->add_option("--in", o.in)->required();
  bench_cmd->add_option("--input-hw", o.input_hw, "HxW, default 32x32");
  bench_cmd->add_option("--repeats", o.repeats);
  bench_cmd->add_option("--csv", o.csv, "write CSV here instead of stdout");
  bench_cmd->add_option("--executors", o.executors, "comma list of dense,csr,block");
  bench_cmd->add_option("--seed", o.seed, "input feature seed");

  auto* flops_cmd = app.add_subcommand("flops", "MAC report for an archive or shape file");
  flops_cmd->add_option("--in", o.in)->required();
  flops_cmd->add_option("--input-hw", o.input_hw, "HxW, default 32x32");

  auto* demo = app.add_subcommand("demo", "train the tiny model through IMP, Refill and Regroup");
  demo->add_option("--seed", o.seed);
  demo->add_option("--rounds", o.rounds);
  demo->add_option("--out", o.out, "output directory")->required();
  demo->add_option("--epochs", o.epochs, "override training epochs");
  demo->add_option("--train-size", o.train_size, "override training set size");

  auto* report = app.add_subcommand("report", "aggregate demo manifests to CSV");
  report->add_option("manifests", o.manifests)->required();
  report->add_option("--csv", o.csv, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*init) return cmd_init(o);
    if (*prune) return cmd_prune(o);
    if (*refill_cmd) return cmd_refill(o);
    if (*regroup) return cmd_regroup(o);
    if (*bench_cmd) return cmd_bench(o);
    if (*flops_cmd) return cmd_flops(o);
    if (*demo) return cmd_demo(o);
    if (*report) return cmd_report(o);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
