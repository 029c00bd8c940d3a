#pragma once

#include <span>
#include <vector>

namespace robustkit {

/// Closed-form minimizer of the GNC-TLS surrogate over a single weight in [0, 1].
double gnc_weight(double residual, double mu, double epsilon);

std::vector<double> gnc_weight_update(std::span<const double> residuals, double mu, double epsilon);

/// mu^0 = eps^2 / (2 max r^2 - eps^2), or `floor` when the denominator is not positive.
double gnc_mu_init(std::span<const double> residuals, double epsilon, double floor = 1e-6);

/// True when every weight lies within `tolerance` of 0 or 1.
bool is_binary(std::span<const double> weights, double tolerance);

/// GNC stopping test: every weight within `tolerance` of 1 or exactly 0. A
/// small positive weight is still on the graded branch of the update; early on
/// every weight is tiny because mu is, and stopping there would reject everything.
bool gnc_weights_settled(std::span<const double> weights, double tolerance);

/// Rounds each weight to the nearest of {0, 1}.
void snap_binary(std::vector<double>& weights);

}  // namespace robustkit
