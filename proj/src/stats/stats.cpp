#include "robustkit/stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include <boost/math/special_functions/gamma.hpp>

#include "robustkit/core/error.hpp"

namespace robustkit {

double gamma_cdf(double x, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw Error(ErrorCode::kDomain, "gamma_cdf: shape and scale must be positive");
  }
  if (std::isnan(x)) throw Error(ErrorCode::kDomain, "gamma_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, x / scale);
}

double chi2_cdf(double x, double dof) { return gamma_cdf(x, dof / 2.0, 2.0); }

double chi2_inv(double p, double dof) {
  if (!(dof > 0.0)) throw Error(ErrorCode::kDomain, "chi2_inv: dof must be positive");
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorCode::kDomain, "chi2_inv: p must lie in [0, 1)");
  if (p == 0.0) return 0.0;

  return 2.0 * boost::math::gamma_p_inv(dof / 2.0, p);
}

double cramer_von_mises(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(ErrorCode::kInsufficientSamples, "cramer_von_mises: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double stat = 1.0 / (12.0 * n);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double d = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n) - cdf(sorted[i]);
    stat += d * d;
  }
  return stat;
}

FitScore fit_chi(std::span<const double> residuals, int dof) {
  if (dof <= 0) throw Error(ErrorCode::kDomain, "fit_chi: dof must be positive");
  if (residuals.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples, "fit_chi: needs at least two residuals");
  }
  std::vector<double> sq(residuals.size());
  std::transform(residuals.begin(), residuals.end(), sq.begin(), [](double r) { return r * r; });
  const double total = std::accumulate(sq.begin(), sq.end(), 0.0);
  const double n = static_cast<double>(sq.size());
  FitScore fit;
  fit.estimated_sigma2 = total / ((n - 1.0) * dof);
  if (!(fit.estimated_sigma2 > 0.0)) return fit;
  const double shape = dof / 2.0;
  const double scale = 2.0 * fit.estimated_sigma2;
  fit.statistic = cramer_von_mises(sq, [&](double x) { return gamma_cdf(x, shape, scale); });
  return fit;
}

double clusters_separation(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorCode::kTooFew, "clusters_separation: needs two values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted[i];

  // Within-cluster scatter of a split equals the total scatter minus
  // |A||B|/n (meanA - meanB)^2, so the minimizing split maximizes that term.
  // Split k puts sorted[0..k) in the low cluster; ties keep the smallest k.
  double best_between = -1.0;
  double best_gap = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double na = static_cast<double>(k);
    const double nb = static_cast<double>(n - k);
    const double gap = (prefix[n] - prefix[k]) / nb - prefix[k] / na;
    const double between = na * nb * gap * gap;
    if (between > best_between) {
      best_between = between;
      best_gap = gap;
    }
  }
  return std::max(best_gap, 0.0);
}

double abs_chi_diff_quantile(double p, double dof1, double dof2, double sigma2,
                             std::uint64_t seed, std::size_t draws) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kDomain, "abs_chi_diff_quantile: p must lie in (0,1)");
  if (dof1 < 0.0 || dof2 < 0.0) throw Error(ErrorCode::kDomain, "abs_chi_diff_quantile: negative dof");
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::kDomain, "abs_chi_diff_quantile: sigma2 must be positive");
  if (draws == 0) throw Error(ErrorCode::kDomain, "abs_chi_diff_quantile: zero draws");

  std::mt19937_64 rng(seed);
  auto sampler = [&rng](double dof) -> std::function<double()> {
    if (dof == 0.0) return [] { return 0.0; };
    auto dist = std::make_shared<std::gamma_distribution<double>>(dof / 2.0, 2.0);
    return [dist, &rng] { return (*dist)(rng); };
  };
  auto draw1 = sampler(dof1);
  auto draw2 = sampler(dof2);
  std::vector<double> z(draws);
  for (double& v : z) {
    const double a = draw1();
    const double b = draw2();
    v = std::abs(sigma2 * a - sigma2 * b);
  }
  const auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(draws))) - 1;
  std::nth_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(idx), z.end());
  return z[idx];
}

double moving_std(std::span<const double> history, std::size_t window) {
  if (window == 0) throw Error(ErrorCode::kDomain, "moving_std: window must be positive");
  if (history.empty()) return 0.0;
  const std::size_t count = std::min(window, history.size());
  const auto tail = history.subspan(history.size() - count);
  if (count == 1) return 0.0;
  const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(count);
  double ss = 0.0;
  for (double v : tail) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(count - 1));
}

ChiDiffQuantileCache::ChiDiffQuantileCache(double p, std::uint64_t seed, std::size_t draws)
    : p_(p), seed_(seed), draws_(draws) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kDomain, "ChiDiffQuantileCache: p must lie in (0,1)");
}

double ChiDiffQuantileCache::operator()(double dof1, double dof2, double sigma2) {
  const auto key = std::make_pair(dof1, dof2);
  {
    std::lock_guard lock(mutex_);
    if (auto it = table_.find(key); it != table_.end()) return sigma2 * it->second;
  }
  // Computed outside the lock; a racing duplicate computes the same value.
  const double unit = abs_chi_diff_quantile(p_, dof1, dof2, 1.0, seed_, draws_);
  std::lock_guard lock(mutex_);
  table_.emplace(key, unit);
  return sigma2 * unit;
}

}  // namespace robustkit
