// robustkit command-line front end: generate, run, verify, bounds.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "robustkit/core/error.hpp"
#include "robustkit/experiment/config.hpp"
#include "robustkit/experiment/runner.hpp"
#include "robustkit/experiment/verify.hpp"
#include "robustkit/io/g2o.hpp"
#include "robustkit/problems/pose_graph.hpp"

namespace fs = std::filesystem;
using namespace robustkit;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Relative output paths in the config resolve against --out when given.
fs::path output_path(const std::string& configured, const std::string& out_dir, const std::string& fallback) {
  fs::path p = configured.empty() ? fs::path(fallback) : fs::path(configured);
  if (!out_dir.empty() && p.is_relative()) p = fs::path(out_dir) / p;
  return p;
}

ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_experiment_config(path);
  if (seed) cfg.base_seed = *seed;
  return cfg;
}

std::unique_ptr<AnyPoseGraph> load_graph_if_needed(const ExperimentConfig& cfg) {
  if (cfg.problem.kind != ProblemKind::kG2o) return nullptr;
  return std::make_unique<AnyPoseGraph>(read_g2o_file(cfg.problem.g2o_path));
}

int cmd_generate(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  const ExperimentConfig cfg = load(config, seed);
  const auto graph = load_graph_if_needed(cfg);
  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  for (std::size_t ri = 0; ri < cfg.outlier_rates.size(); ++ri) {
    for (int k = 0; k < cfg.trials; ++k) {
      const std::uint64_t s = derive_seed(cfg.base_seed, ri, static_cast<std::uint64_t>(k));
      const AnyInstance inst = generate_instance(cfg, graph.get(), cfg.outlier_rates[ri], s);
      const std::string stem = "instance_r" + std::to_string(ri) + "_t" + std::to_string(k);
      nlohmann::json j = instance_to_json(inst);
      j["rate"] = cfg.outlier_rates[ri];
      if (j.contains("g2o")) {
        write_file(dir / (stem + ".g2o"), j["g2o"].get<std::string>());
        j.erase("g2o");
      }
      write_file(dir / (stem + ".json"), j.dump(1) + "\n");
      std::cout << (dir / stem).string() << "\n";
    }
  }
  return 0;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out_dir, int threads) {
  const ExperimentConfig cfg = load(config, seed);
  const auto rows = run_experiment(cfg, threads);
  const fs::path csv = output_path(cfg.csv_path, out_dir, "results.csv");
  const fs::path summary = output_path(cfg.summary_path, out_dir, "summary.json");
  write_file(csv, to_csv(rows));
  write_file(summary, summarize(rows).dump(2) + "\n");
  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "trial failed: " << r.algorithm << " rate=" << r.rate << " trial=" << r.trial << ": " << r.error
                << "\n";
    }
  }
  std::cout << "wrote " << rows.size() << " rows to " << csv.string() << " (" << failed << " failed trials)\n";
  return 0;
}

int cmd_verify(std::vector<std::string> suites, std::optional<std::uint64_t> seed) {
  if (suites.empty()) suites = {"toy", "relationship", "bounds", "cycles"};
  bool ok = true;
  for (const auto& s : run_verification(seed.value_or(1), suites)) {
    std::cout << (s.passed() ? "PASS " : "FAIL ") << s.name << " (" << s.cases - s.failures << "/" << s.cases
              << ")";
    if (!s.detail.empty()) std::cout << " " << s.detail;
    std::cout << "\n";
    ok = ok && s.passed();
  }
  return ok ? 0 : kExitRuntime;
}

template <int D>
std::string bounds_csv(const PoseGraph<D>& g) {
  const CycleBounds cb = cycle_bounds(g);
  std::string out = "from,to,b_k\n";
  char buf[64];
  for (std::size_t k = 0; k < g.loop_closures.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", cb.bounds[k]);
    out += std::to_string(g.loop_closures[k].from) + "," + std::to_string(g.loop_closures[k].to) + "," + buf + "\n";
  }
  return out;
}

int cmd_bounds(const std::string& file, const std::string& out_dir) {
  const AnyPoseGraph g = read_g2o_file(file);
  const std::string csv = std::visit([](const auto& graph) { return bounds_csv(graph); }, g);
  if (out_dir.empty()) {
    std::cout << csv;
  } else {
    write_file(fs::path(out_dir) / "cycle_bounds.csv", csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust estimation toolkit: outlier-rejection solvers and experiment harness"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::vector<std::string> suites;
  std::string g2o_file;

  auto* gen = app.add_subcommand("generate", "Write the corrupted instances an experiment config would run on");
  gen->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "Override base_seed");
  gen->add_option("--out", out_dir, "Output directory");

  auto* run = app.add_subcommand("run", "Run an experiment sweep and write CSV + JSON summary");
  run->add_option("--config", config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override base_seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Run oracle, relationship and bound verification suites");
  verify->add_option("suites", suites, "Subset of: toy relationship bounds cycles");
  verify->add_option("--seed", seed, "Seed for the instance generator");

  auto* bounds = app.add_subcommand("bounds", "Per-loop-closure cycle bounds b_k of a g2o file");
  bounds->add_option("file", g2o_file, "g2o file")->required()->check(CLI::ExistingFile);
  bounds->add_option("--out", out_dir, "Output directory (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) return cmd_generate(config, seed, out_dir);
    if (*run) return cmd_run(config, seed, out_dir, threads);
    if (*verify) return cmd_verify(suites, seed);
    if (*bounds) return cmd_bounds(g2o_file, out_dir);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfig || e.code() == ErrorCode::kRateOutOfRange ? kExitValidation
                                                                                     : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
