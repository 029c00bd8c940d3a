#include "robustkit/core/gnc.hpp"

#include <algorithm>
#include <cmath>

#include "robustkit/core/error.hpp"

namespace robustkit {

double gnc_weight(double residual, double mu, double epsilon) {
  if (!(mu > 0.0) || !(epsilon > 0.0) || residual < 0.0) {
    throw Error(ErrorCode::kDomain, "gnc_weight: requires mu > 0, epsilon > 0, residual >= 0");
  }
  const double lower = epsilon * std::sqrt(mu / (mu + 1.0));
  const double upper = epsilon * std::sqrt((mu + 1.0) / mu);
  if (residual < lower) return 1.0;
  if (residual > upper) return 0.0;
  const double w = epsilon * std::sqrt(mu * (mu + 1.0)) / residual - mu;
  return std::clamp(w, 0.0, 1.0);
}

std::vector<double> gnc_weight_update(std::span<const double> residuals, double mu,
                                      double epsilon) {
  std::vector<double> w(residuals.size());
  std::transform(residuals.begin(), residuals.end(), w.begin(),
                 [&](double r) { return gnc_weight(r, mu, epsilon); });
  return w;
}

double gnc_mu_init(std::span<const double> residuals, double epsilon, double floor) {
  if (residuals.empty()) throw Error(ErrorCode::kDomain, "gnc_mu_init: empty residuals");
  double max_r = 0.0;
  for (double r : residuals) max_r = std::max(max_r, r);
  const double eps2 = epsilon * epsilon;
  const double denom = 2.0 * max_r * max_r - eps2;
  if (!(denom > 0.0)) return floor;
  return eps2 / denom;
}

bool is_binary(std::span<const double> weights, double tolerance) {
  return std::all_of(weights.begin(), weights.end(), [&](double w) {
    return std::abs(w) <= tolerance || std::abs(1.0 - w) <= tolerance;
  });
}

bool gnc_weights_settled(std::span<const double> weights, double tolerance) {
  return std::all_of(weights.begin(), weights.end(),
                     [&](double w) { return w == 0.0 || std::abs(1.0 - w) <= tolerance; });
}

void snap_binary(std::vector<double>& weights) {
  for (double& w : weights) w = w > 0.5 ? 1.0 : 0.0;
}

}  // namespace robustkit
