#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "robustkit/problems/pose_graph.hpp"

namespace robustkit {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string detail;  // first failure, plus any informational tallies
  bool passed() const { return failures == 0 && cases > 0; }
};

/// y = [0, 0, 4] with unit design: TLS, MTS and MC oracles and GNC-TLS.
SuiteResult verify_toy_example();
/// TLS / MTS cardinality relationships on seeded linear instances.
SuiteResult verify_relationship_suite(std::uint64_t seed, int instances = 50, std::size_t m = 8,
                                      double outlier_rate = 0.3);
/// chi_O of every solver against the enumerated a-posteriori ratio.
SuiteResult verify_bound_suite(std::uint64_t seed, int instances = 50, std::size_t m = 10);
/// Full-graph optimum over any loop-closure subset K dominates the sum of b_k over K.
SuiteResult verify_cycle_suite(std::uint64_t seed, int graphs = 20);

/// Six poses on a noisy chain with two to three loop closures; the first
/// `corrupted` loop closures get a large rotation offset.
PoseGraph2 small_cycle_graph(std::uint64_t seed, std::size_t loop_closures, std::size_t corrupted = 0);

/// Suite names: toy, relationship, bounds, cycles.
std::vector<SuiteResult> run_verification(std::uint64_t seed, const std::vector<std::string>& suites);

}  // namespace robustkit
