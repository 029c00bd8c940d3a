#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "robustkit/experiment/config.hpp"
#include "robustkit/io/g2o.hpp"
#include "robustkit/io/generators.hpp"

namespace robustkit {

struct TrialRecord {
  std::string algorithm;
  double rate = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  // NaN where the metric does not apply to the problem, or the trial failed.
  double rot_err_deg = 0.0;
  double trans_err = 0.0;
  double ate = 0.0;
  double tp_rate = 0.0;
  double fp_rate = 0.0;
  double wall_time_s = 0.0;
  int iterations = 0;
  bool converged = false;
  double chi_bound = 0.0;
  std::string error;  // non-empty when the solver threw
};

/// Noise scale the default thresholds are derived from: the generator sigma,
/// or 1 for pose graphs whose residuals are already whitened.
double threshold_sigma(const ProblemSpec& problem);
int problem_dof(const ProblemSpec& problem);

using AnyInstance = std::variant<LinearInstance, RegistrationInstance, ShapeInstance, PoseGraphInstance<2>,
                                 PoseGraphInstance<3>>;

/// The corrupted instance a trial with this seed runs on. `g2o` is the loaded
/// graph for g2o problems and ignored otherwise.
AnyInstance generate_instance(const ExperimentConfig& cfg, const AnyPoseGraph* g2o, double rate, std::uint64_t seed);

/// Instance data, ground truth and outlier labels as JSON (pose graphs embed g2o text).
nlohmann::json instance_to_json(const AnyInstance& instance);

/// Rows ordered by algorithm, then rate, then trial, whatever `threads` is.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, int threads = 1);

inline const char* kCsvHeader =
    "algorithm,rate,trial,seed,rot_err_deg,trans_err,ate,tp_rate,fp_rate,wall_time_s,iterations,converged,chi_bound";

std::string to_csv(const std::vector<TrialRecord>& records);
/// Per-(algorithm, rate) medians and means of every numeric column, ignoring NaN.
nlohmann::json summarize(const std::vector<TrialRecord>& records);

}  // namespace robustkit
