#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace robustkit {

double gamma_cdf(double x, double shape, double scale);
double chi2_cdf(double x, double dof);
/// Inverse chi-square CDF. Requires p in [0, 1) and dof > 0.
double chi2_inv(double p, double dof);

/// Cramer-von Mises statistic of `samples` against a continuous CDF:
/// 1/(12n) + sum_i ((2i-1)/(2n) - F(x_(i)))^2.
double cramer_von_mises(std::span<const double> samples, const std::function<double(double)>& cdf);

struct FitScore {
  double statistic = 0.0;
  double estimated_sigma2 = 0.0;
};

/// Goodness of fit of residuals to sigma_hat^2 * chi2(dof), sigma_hat^2 = sum r^2 / ((n-1) dof).
/// Requires at least two residuals. All-zero residuals give a zero statistic.
FitScore fit_chi(std::span<const double> residuals, int dof);

/// Gap between the centroids of the low and high cluster, at the split of the
/// sorted values that minimizes the summed within-cluster scatter.
double clusters_separation(std::span<const double> values);

/// p-quantile of |sigma2 * (X1 - X2)|, X1 ~ chi2(dof1), X2 ~ chi2(dof2), by Monte Carlo.
/// A zero dof contributes the constant 0.
double abs_chi_diff_quantile(double p, double dof1, double dof2, double sigma2,
                             std::uint64_t seed, std::size_t draws = 200000);

/// Sample standard deviation of the trailing `window` entries of `history`.
double moving_std(std::span<const double> history, std::size_t window);

/// Memoized abs_chi_diff_quantile at sigma2 = 1; queries rescale by sigma2.
/// Thread-safe.
class ChiDiffQuantileCache {
 public:
  explicit ChiDiffQuantileCache(double p, std::uint64_t seed = 0x5eedULL,
                                std::size_t draws = 200000);
  double operator()(double dof1, double dof2, double sigma2);

 private:
  double p_;
  std::uint64_t seed_;
  std::size_t draws_;
  std::mutex mutex_;
  std::map<std::pair<double, double>, double> table_;
};

}  // namespace robustkit
