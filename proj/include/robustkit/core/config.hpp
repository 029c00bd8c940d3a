#pragma once

#include <cstddef>
#include <functional>

#include "robustkit/core/problem.hpp"

namespace robustkit {

/// Bound as a function of the current inlier count n.
using BoundFn = std::function<double(std::size_t n)>;
/// Convergence tolerance theta(|I^(t)|, |I^(t-1)|).
using ThetaFn = std::function<double(std::size_t n_current, std::size_t n_previous)>;

inline BoundFn constant_bound(double value) {
  return [value](std::size_t) { return value; };
}
inline ThetaFn constant_theta(double value) {
  return [value](std::size_t, std::size_t) { return value; };
}

struct GreedyConfig {
  Norm norm = Norm::kL2;
  BoundFn bound;
};

struct AdaptConfig {
  BoundFn tau;
  ThetaFn theta;
  Norm norm = Norm::kL2;
  int max_iterations = 1000;
  int samples_to_converge = 3;
  double thr_discount = 0.99;
  // Absolute slack in the inlier test r <= eps; keeps exactly-fitting data
  // from being peeled away by round-off.
  double residual_slack = 1e-10;
};

struct GncConfig {
  double epsilon = 0.0;
  int max_iterations = 1000;
  double mu_update_factor = 1.4;
  double binary_tolerance = 1e-3;
  double mu_floor = 1e-6;
};

struct AdaptMintConfig {
  int max_iterations = 1000;
  double thr_discount = 0.99;
  int samples_to_converge = 5;
  std::size_t window_size = 3;
  double converg_thr = 1e-4;
  double residual_slack = 1e-10;
};

struct GncMintConfig {
  int max_iterations = 1000;
  double mu_update_factor = 1.96;
  double noise_up_bnd = 0.0;
  double noise_low_bnd = 0.0;
  int samples_to_converge = 2;
  /// Residual degrees of freedom for the chi-square fit; 0 takes the problem's.
  int dof = 0;
  double binary_tolerance = 1e-3;
  double mu_floor = 1e-6;
};

void validate(const GreedyConfig& cfg);
void validate(const AdaptConfig& cfg);
void validate(const GncConfig& cfg);
void validate(const AdaptMintConfig& cfg);
void validate(const GncMintConfig& cfg);

}  // namespace robustkit
