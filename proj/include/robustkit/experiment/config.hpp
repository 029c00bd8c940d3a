#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robustkit/core/config.hpp"
#include "robustkit/io/generators.hpp"

namespace robustkit {

enum class ProblemKind { kLinear, kRegistration, kShape, kGrid2d, kSphere3d, kG2o };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kRegistration;
  std::size_t count = 100;  // registration / shape correspondences
  std::size_t rows = 20;    // linear: m
  std::size_t cols = 3;     // linear: n
  double noise_sigma = 0.01;
  double scale = 1.0;       // shape
  GridConfig grid;
  SphereConfig sphere;
  std::string g2o_path;
  OutlierOptions outliers;
};

// How ADAPT's convergence tolerance is derived from the noise model.
//   sqrt_quantile: sqrt of the 0.05-quantile of |sigma^2 (chi2(n1 d) - chi2(n2 d))|
//   quantile:      the quantile itself, at probability theta_probability
enum class ThetaMode { kSqrtQuantile, kQuantile };

struct AlgorithmSpec {
  std::string name;   // greedy_mc, greedy_mts, adapt_mc, adapt_mts, adapt_mint, gnc, gnc_mint
  std::string label;  // column value; defaults to name
  std::optional<double> epsilon;
  std::optional<double> noise_up_bnd;
  std::optional<double> noise_low_bnd;
  std::optional<int> max_iterations;
  std::optional<int> samples_to_converge;
  std::optional<double> thr_discount;
  std::optional<double> mu_update_factor;
  ThetaMode theta_mode = ThetaMode::kSqrtQuantile;
  double theta_probability = 0.05;
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<double> outlier_rates{0.0};
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::string csv_path;      // empty: not written by the CLI
  std::string summary_path;
};

inline const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names{"greedy_mc", "greedy_mts", "adapt_mc", "adapt_mts",
                                              "adapt_mint", "gnc", "gnc_mint"};
  return names;
}

/// Throws Error(kConfig) with the JSON path of the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
/// Checks the invariants of an already-built config.
void validate(const ExperimentConfig& cfg);

}  // namespace robustkit
