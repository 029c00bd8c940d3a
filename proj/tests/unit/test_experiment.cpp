#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "robustkit/core/error.hpp"
#include "robustkit/experiment/config.hpp"
#include "robustkit/experiment/metrics.hpp"
#include "robustkit/experiment/runner.hpp"
#include "robustkit/experiment/verify.hpp"
#include "robustkit/problems/lie.hpp"

using namespace robustkit;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    parse_experiment_config(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    return e.what();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return {};
}

json small_registration() {
  return json::parse(R"({"problem": {"type": "registration", "count": 30, "noise_sigma": 0.01},
                         "algorithms": ["gnc", "greedy_mts", {"name": "gnc_mint", "label": "mint"}],
                         "outlier_rates": [0.0, 0.5], "trials": 3, "base_seed": 4})");
}

}  // namespace

TEST(Config, ParsesDefaultsAndLabels) {
  const auto cfg = parse_experiment_config(small_registration());
  EXPECT_EQ(cfg.problem.kind, ProblemKind::kRegistration);
  EXPECT_EQ(cfg.problem.count, 30u);
  ASSERT_EQ(cfg.algorithms.size(), 3u);
  EXPECT_EQ(cfg.algorithms[0].label, "gnc");
  EXPECT_EQ(cfg.algorithms[2].label, "mint");
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_EQ(cfg.base_seed, 4u);
}

TEST(Config, ErrorsNameTheField) {
  auto j = small_registration();
  j["algorithms"] = json::array({"ransac"});
  EXPECT_NE(config_error(j).find("$.algorithms[0]"), std::string::npos);

  j = small_registration();
  j["outlier_rates"] = json::array({0.5, 1.0});
  EXPECT_NE(config_error(j).find("outlier_rates"), std::string::npos);

  j = small_registration();
  j["problem"]["colour"] = "red";
  EXPECT_NE(config_error(j).find("$.problem.colour"), std::string::npos);

  j = small_registration();
  j["algorithms"] = json::array({{{"name", "gnc_mint"}, {"noise_up_bnd", 0.1}, {"noise_low_bnd", 0.2}}});
  EXPECT_NE(config_error(j).find("noise_low_bnd"), std::string::npos);

  j = small_registration();
  j["trials"] = 0;
  config_error(j);
  j = small_registration();
  j.erase("problem");
  config_error(j);
}

TEST(Metrics, DetectionRates) {
  const std::vector<bool> labels{false, false, true, true, false};
  const auto r = detection_rates(IndexSet{0, 1, 3}, labels);
  EXPECT_DOUBLE_EQ(r.tp_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.fp_rate, 1.0 / 3.0);
  const auto none = detection_rates(IndexSet{0, 1}, std::vector<bool>{false, false});
  EXPECT_EQ(none.tp_rate, 1.0);
  EXPECT_EQ(none.fp_rate, 0.0);
}

TEST(Metrics, RotationError) {
  const Eigen::Matrix3d r = so3_exp(Eigen::Vector3d(0.1, 0.2, -0.3));
  EXPECT_NEAR(rotation_error_deg(r * so3_exp(Eigen::Vector3d(0, 0.1, 0)), r), 0.1 * 180.0 / M_PI, 1e-9);
  EXPECT_EQ(rotation_error_deg(r, r), 0.0);
}

TEST(Metrics, AteIgnoresRigidMotion) {
  Trajectory<2> truth(5);
  for (int i = 0; i < 5; ++i) truth[static_cast<std::size_t>(i)].translation = Eigen::Vector2d(i, i * i * 0.1);
  Pose2 g;
  g.rotation = so2_exp(0.7);
  g.translation = Eigen::Vector2d(3, -2);
  Trajectory<2> moved = truth;
  for (auto& p : moved) p = g * p;
  EXPECT_LT(absolute_trajectory_error<2>(moved, truth), 1e-12);
  moved[2].translation += Eigen::Vector2d(0.5, 0.0);
  EXPECT_GT(absolute_trajectory_error<2>(moved, truth), 0.1);
}

TEST(Runner, DeterministicAcrossThreadCounts) {
  const auto cfg = parse_experiment_config(small_registration());
  auto strip_time = [](std::vector<TrialRecord> rows) {
    for (auto& r : rows) r.wall_time_s = 0.0;
    return to_csv(rows);
  };
  const auto a = strip_time(run_experiment(cfg, 1));
  EXPECT_EQ(a, strip_time(run_experiment(cfg, 1)));
  EXPECT_EQ(a, strip_time(run_experiment(cfg, 3)));
}

TEST(Runner, CsvLayoutAndOrdering) {
  const auto cfg = parse_experiment_config(small_registration());
  const auto rows = run_experiment(cfg, 2);
  ASSERT_EQ(rows.size(), 3u * 2u * 3u);
  EXPECT_EQ(rows.front().algorithm, "gnc");
  EXPECT_EQ(rows.back().algorithm, "mint");
  EXPECT_EQ(rows[3].rate, 0.5);
  // All algorithms see the same instance for a given rate and trial.
  EXPECT_EQ(rows[0].seed, rows[6].seed);
  const std::string csv = to_csv(rows);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 12);
  }
  EXPECT_EQ(n, 18);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_TRUE(std::isnan(r.ate));
    if (r.algorithm != "greedy_mts") EXPECT_LT(r.rot_err_deg, 2.0);
  }
}

TEST(Runner, SummaryGroups) {
  const auto cfg = parse_experiment_config(small_registration());
  const auto s = summarize(run_experiment(cfg, 1));
  ASSERT_EQ(s["groups"].size(), 6u);
  EXPECT_EQ(s["groups"][0]["trials"], 3);
  EXPECT_TRUE(s["groups"][0]["median"].contains("rot_err_deg"));
}

TEST(Runner, InstanceJsonHasLabels) {
  const auto cfg = parse_experiment_config(small_registration());
  const auto j = instance_to_json(generate_instance(cfg, nullptr, 0.5, 11));
  EXPECT_TRUE(j.contains("outlier_labels"));
  EXPECT_EQ(j["outlier_labels"].size(), 30u);
}

TEST(Verify, ToyExample) {
  const auto s = verify_toy_example();
  EXPECT_TRUE(s.passed()) << s.detail;
}

TEST(Verify, UnknownSuite) {
  EXPECT_THROW(run_verification(0, {"nope"}), Error);
}
