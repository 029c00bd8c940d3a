#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "robustkit/core/error.hpp"

namespace robustkit {

enum class Norm { kL2, kLinf };

// A measurement model the robust solvers can drive: per-measurement residuals
// r(y_i, x) >= 0 and a weighted least-squares solve argmin_x sum_i w_i r_i^2.
// Implementations must be safe to share read-only across threads.
template <class P>
concept EstimationProblem =
    requires(const P& p, const typename P::Estimate& x, std::span<const double> w) {
      typename P::Estimate;
      { p.size() } -> std::convertible_to<std::size_t>;
      { p.residual_dof() } -> std::convertible_to<int>;
      { p.residuals(x) } -> std::convertible_to<std::vector<double>>;
      { p.weighted_solve(w) } -> std::convertible_to<typename P::Estimate>;
    };

// Problems that know how many measurements pin down a unique estimate.
template <class P>
concept HasMinimalSupport = requires(const P& p) {
  { p.minimal_support() } -> std::convertible_to<std::size_t>;
};

// Problems with an exact l-infinity (Chebyshev) fit over the positive-weight support.
template <class P>
concept HasMinimaxSolve = requires(const P& p, std::span<const double> w) {
  { p.minimax_solve(w) } -> std::convertible_to<typename P::Estimate>;
};

using IndexSet = std::vector<std::size_t>;

struct TraceRecord {
  int iteration = 0;
  /// Inlier threshold (ADAPT family, Greedy bound) or mu (GNC family) in effect.
  double control = 0.0;
  std::size_t inlier_count = 0;
  double inlier_sq_sum = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

template <class Estimate>
struct RobustEstimate {
  Estimate estimate;
  IndexSet inliers;
  std::vector<double> weights;
  std::vector<TraceRecord> trace;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline IndexSet all_indices(std::size_t m) {
  IndexSet idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

inline std::vector<double> indicator(std::size_t m, const IndexSet& idx) {
  std::vector<double> w(m, 0.0);
  for (std::size_t i : idx) w[i] = 1.0;
  return w;
}

inline IndexSet support(std::span<const double> w) {
  IndexSet idx;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0.5) idx.push_back(i);
  }
  return idx;
}

inline double sq_sum(std::span<const double> r, const IndexSet& idx) {
  double s = 0.0;
  for (std::size_t i : idx) s += r[i] * r[i];
  return s;
}

inline double max_over(std::span<const double> r, const IndexSet& idx) {
  double mx = 0.0;
  for (std::size_t i : idx) mx = std::max(mx, r[i]);
  return mx;
}

inline double norm_over(std::span<const double> r, const IndexSet& idx, Norm norm) {
  return norm == Norm::kL2 ? std::sqrt(sq_sum(r, idx)) : max_over(r, idx);
}

}  // namespace detail
}  // namespace robustkit
