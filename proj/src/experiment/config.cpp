#include "robustkit/experiment/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "robustkit/core/error.hpp"

namespace robustkit {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kConfig, path + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) fail(path + "." + key, "unknown field");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path + "." + key, "must be finite");
  return x;
}

double get_positive(const json& obj, const std::string& key, const std::string& path, double fallback) {
  const double x = get_number(obj, key, path, fallback);
  if (!(x > 0.0)) fail(path + "." + key, "must be positive");
  return x;
}

double get_nonnegative(const json& obj, const std::string& key, const std::string& path, double fallback) {
  const double x = get_number(obj, key, path, fallback);
  if (!(x >= 0.0)) fail(path + "." + key, "must be non-negative");
  return x;
}

long long get_integer(const json& obj, const std::string& key, const std::string& path, long long fallback,
                      long long min_value) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  const long long x = v.get<long long>();
  if (x < min_value) fail(path + "." + key, "must be >= " + std::to_string(min_value));
  return x;
}

std::string get_string(const json& obj, const std::string& key, const std::string& path,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

double probability(const json& obj, const std::string& key, const std::string& path, double fallback) {
  const double p = get_number(obj, key, path, fallback);
  if (!(p >= 0.0 && p <= 1.0)) fail(path + "." + key, "must lie in [0, 1]");
  return p;
}

ProblemSpec parse_problem(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  ProblemSpec p;
  const std::string type = get_string(j, "type", path, "");
  if (type.empty()) fail(path + ".type", "missing");

  if (j.contains("outliers")) {
    const std::string op = path + ".outliers";
    const auto& o = j.at("outliers");
    if (!o.is_object()) fail(op, "expected an object");
    reject_unknown(o, op, {"translation_box", "linear_offset_min", "linear_offset_max"});
    p.outliers.translation_box = get_positive(o, "translation_box", op, p.outliers.translation_box);
    p.outliers.linear_offset_min = get_nonnegative(o, "linear_offset_min", op, p.outliers.linear_offset_min);
    p.outliers.linear_offset_max = get_positive(o, "linear_offset_max", op, p.outliers.linear_offset_max);
    if (p.outliers.linear_offset_max < p.outliers.linear_offset_min) {
      fail(op + ".linear_offset_max", "must be >= linear_offset_min");
    }
  }

  if (type == "linear") {
    p.kind = ProblemKind::kLinear;
    reject_unknown(j, path, {"type", "m", "n", "noise_sigma", "outliers"});
    p.rows = static_cast<std::size_t>(get_integer(j, "m", path, 20, 1));
    p.cols = static_cast<std::size_t>(get_integer(j, "n", path, 3, 1));
    if (p.rows < p.cols) fail(path + ".m", "must be >= n");
    p.noise_sigma = get_nonnegative(j, "noise_sigma", path, 0.01);
  } else if (type == "registration" || type == "shape") {
    p.kind = type == "registration" ? ProblemKind::kRegistration : ProblemKind::kShape;
    reject_unknown(j, path, {"type", "count", "noise_sigma", "scale", "outliers"});
    const long long min_count = p.kind == ProblemKind::kRegistration ? 3 : 4;
    p.count = static_cast<std::size_t>(get_integer(j, "count", path, 100, min_count));
    p.noise_sigma = get_nonnegative(j, "noise_sigma", path, 0.01);
    p.scale = get_positive(j, "scale", path, 1.0);
  } else if (type == "grid2d") {
    p.kind = ProblemKind::kGrid2d;
    reject_unknown(j, path, {"type", "rows", "cols", "noise_sigma_t", "noise_sigma_r", "loop_closure_prob",
                             "spacing", "outliers"});
    p.grid.rows = static_cast<int>(get_integer(j, "rows", path, 5, 1));
    p.grid.cols = static_cast<int>(get_integer(j, "cols", path, 5, 1));
    if (p.grid.rows * p.grid.cols < 2) fail(path + ".rows", "grid needs at least two poses");
    p.grid.noise_sigma_t = get_nonnegative(j, "noise_sigma_t", path, 0.01);
    p.grid.noise_sigma_r = get_nonnegative(j, "noise_sigma_r", path, 0.01);
    p.grid.loop_closure_prob = probability(j, "loop_closure_prob", path, 1.0);
    p.grid.spacing = get_positive(j, "spacing", path, 1.0);
  } else if (type == "sphere3d") {
    p.kind = ProblemKind::kSphere3d;
    reject_unknown(j, path, {"type", "levels", "points_per_level", "noise_sigma_t", "noise_sigma_r", "radius",
                             "loop_closure_prob", "outliers"});
    p.sphere.levels = static_cast<int>(get_integer(j, "levels", path, 5, 1));
    p.sphere.points_per_level = static_cast<int>(get_integer(j, "points_per_level", path, 10, 2));
    p.sphere.noise_sigma_t = get_nonnegative(j, "noise_sigma_t", path, 0.01);
    p.sphere.noise_sigma_r = get_nonnegative(j, "noise_sigma_r", path, 0.01);
    p.sphere.radius = get_positive(j, "radius", path, 10.0);
    p.sphere.loop_closure_prob = probability(j, "loop_closure_prob", path, 1.0);
  } else if (type == "g2o") {
    p.kind = ProblemKind::kG2o;
    reject_unknown(j, path, {"type", "path", "outliers"});
    p.g2o_path = get_string(j, "path", path, "");
    if (p.g2o_path.empty()) fail(path + ".path", "missing");
  } else {
    fail(path + ".type", "unknown problem type '" + type + "'");
  }
  return p;
}

AlgorithmSpec parse_algorithm(const json& j, const std::string& path) {
  AlgorithmSpec a;
  if (j.is_string()) {
    a.name = j.get<std::string>();
  } else if (j.is_object()) {
    reject_unknown(j, path, {"name", "label", "epsilon", "noise_up_bnd", "noise_low_bnd", "max_iterations",
                             "samples_to_converge", "thr_discount", "mu_update_factor", "theta_mode",
                             "theta_probability"});
    a.name = get_string(j, "name", path, "");
    a.label = get_string(j, "label", path, "");
    if (j.contains("epsilon")) a.epsilon = get_positive(j, "epsilon", path, 1.0);
    if (j.contains("noise_up_bnd")) a.noise_up_bnd = get_positive(j, "noise_up_bnd", path, 1.0);
    if (j.contains("noise_low_bnd")) a.noise_low_bnd = get_nonnegative(j, "noise_low_bnd", path, 0.0);
    if (j.contains("max_iterations")) a.max_iterations = static_cast<int>(get_integer(j, "max_iterations", path, 1, 1));
    if (j.contains("samples_to_converge")) {
      a.samples_to_converge = static_cast<int>(get_integer(j, "samples_to_converge", path, 1, 1));
    }
    if (j.contains("thr_discount")) {
      const double d = get_number(j, "thr_discount", path, 0.99);
      if (!(d > 0.0 && d < 1.0)) fail(path + ".thr_discount", "must lie in (0, 1)");
      a.thr_discount = d;
    }
    if (j.contains("mu_update_factor")) {
      const double f = get_number(j, "mu_update_factor", path, 1.4);
      if (!(f > 1.0)) fail(path + ".mu_update_factor", "must exceed 1");
      a.mu_update_factor = f;
    }
    const std::string mode = get_string(j, "theta_mode", path, "sqrt_quantile");
    if (mode == "sqrt_quantile") {
      a.theta_mode = ThetaMode::kSqrtQuantile;
    } else if (mode == "quantile") {
      a.theta_mode = ThetaMode::kQuantile;
    } else {
      fail(path + ".theta_mode", "expected 'sqrt_quantile' or 'quantile'");
    }
    a.theta_probability = probability(j, "theta_probability", path, 0.05);
    if (a.theta_probability >= 1.0) fail(path + ".theta_probability", "must be < 1");
  } else {
    fail(path, "expected an algorithm name or object");
  }
  if (a.name.empty()) fail(path + ".name", "missing");
  const auto& names = algorithm_names();
  if (std::find(names.begin(), names.end(), a.name) == names.end()) {
    fail(j.is_string() ? path : path + ".name", "unknown algorithm '" + a.name + "'");
  }
  if (a.label.empty()) a.label = a.name;
  if (a.noise_up_bnd && a.noise_low_bnd && !(*a.noise_low_bnd < *a.noise_up_bnd)) {
    fail(path + ".noise_low_bnd", "must be below noise_up_bnd");
  }
  return a;
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  if (!j.is_object()) fail("$", "expected an object");
  reject_unknown(j, "$", {"problem", "algorithms", "outlier_rates", "trials", "base_seed", "output"});
  ExperimentConfig cfg;
  if (!j.contains("problem")) fail("$.problem", "missing");
  cfg.problem = parse_problem(j.at("problem"), "$.problem");

  if (!j.contains("algorithms")) fail("$.algorithms", "missing");
  const auto& algs = j.at("algorithms");
  if (!algs.is_array() || algs.empty()) fail("$.algorithms", "expected a non-empty array");
  for (std::size_t i = 0; i < algs.size(); ++i) {
    cfg.algorithms.push_back(parse_algorithm(algs[i], "$.algorithms[" + std::to_string(i) + "]"));
  }

  if (j.contains("outlier_rates")) {
    const auto& rates = j.at("outlier_rates");
    if (!rates.is_array() || rates.empty()) fail("$.outlier_rates", "expected a non-empty array");
    cfg.outlier_rates.clear();
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const std::string p = "$.outlier_rates[" + std::to_string(i) + "]";
      if (!rates[i].is_number()) fail(p, "expected a number");
      cfg.outlier_rates.push_back(rates[i].get<double>());
    }
  }
  cfg.trials = static_cast<int>(get_integer(j, "trials", "$", 1, 1));
  if (j.contains("base_seed")) {
    const auto& s = j.at("base_seed");
    if (!s.is_number_integer() || s.get<long long>() < 0) fail("$.base_seed", "expected a non-negative integer");
    cfg.base_seed = s.get<std::uint64_t>();
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object()) fail("$.output", "expected an object");
    reject_unknown(o, "$.output", {"csv", "summary"});
    cfg.csv_path = get_string(o, "csv", "$.output", "");
    cfg.summary_path = get_string(o, "summary", "$.output", "");
  }
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.algorithms.empty()) fail("$.algorithms", "expected a non-empty array");
  if (cfg.trials < 1) fail("$.trials", "must be >= 1");
  if (cfg.outlier_rates.empty()) fail("$.outlier_rates", "expected a non-empty array");
  for (std::size_t i = 0; i < cfg.outlier_rates.size(); ++i) {
    const double r = cfg.outlier_rates[i];
    const std::string p = "$.outlier_rates[" + std::to_string(i) + "]";
    if (!(r >= 0.0 && r < 1.0)) fail(p, "must lie in [0, 1)");
    if (i > 0 && !(r > cfg.outlier_rates[i - 1])) fail(p, "rates must be strictly increasing");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
    if (!labels.insert(cfg.algorithms[i].label).second) {
      fail("$.algorithms[" + std::to_string(i) + "].label", "duplicate label '" + cfg.algorithms[i].label + "'");
    }
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path + ": invalid JSON: " + e.what());
  }
  return parse_experiment_config(j);
}

}  // namespace robustkit
