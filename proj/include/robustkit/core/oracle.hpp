#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "robustkit/core/problem.hpp"

namespace robustkit {

enum class Formulation { kMC, kMTS, kTLS };

inline constexpr std::size_t kOracleMaxMeasurements = 20;

template <class Estimate>
struct OracleSolution {
  IndexSet outliers;
  IndexSet inliers;
  /// Empty when the inlier set is smaller than the problem's minimal support.
  std::optional<Estimate> estimate;
  /// l-infinity norm for MC, l2 norm for MTS and TLS, over the inliers.
  double inlier_norm = 0.0;
  /// |O| for MC and MTS; sum of inlier r^2 plus eps^2 |O| for TLS.
  double objective = 0.0;
};

/// r(O) = min sum r^2 over M \ O, and the a-posteriori bound r(O) / (r(empty) - r(O)).
double suboptimality_bound(double r_empty, double r_outliers);

namespace detail {

// Feasibility comparisons tolerate round-off relative to the bound.
inline bool within(double value, double bound) {
  return value <= bound + 1e-9 * std::max(1.0, std::abs(bound));
}

// Calls f(subset) for every k-subset of {0..m-1} in lexicographic order;
// stops early when f returns true.
template <class F>
bool for_each_combination(std::size_t m, std::size_t k, F&& f) {
  if (k > m) return false;
  IndexSet idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    if (f(static_cast<const IndexSet&>(idx))) return true;
    if (k == 0) return false;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline IndexSet complement(std::size_t m, const IndexSet& set) {
  IndexSet out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (j < set.size() && set[j] == i) {
      ++j;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

template <class P>
std::size_t minimal_support_of(const P& p) {
  if constexpr (HasMinimalSupport<P>) {
    return p.minimal_support();
  } else {
    return 1;
  }
}

// Lawson's iteratively reweighted scheme for the Chebyshev fit when the problem
// has no exact minimax routine.
template <EstimationProblem P>
typename P::Estimate lawson_minimax(const P& p, const std::vector<double>& mask) {
  std::vector<double> u(mask);
  double total = 0.0;
  for (double v : u) total += v;
  for (double& v : u) v /= total;
  auto x = p.weighted_solve(u);
  for (int it = 0; it < 500; ++it) {
    const auto r = p.residuals(x);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * r[i];
    if (!(s > 0.0)) break;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] * r[i] / s;
    x = p.weighted_solve(u);
  }
  return x;
}

struct SubsetFit {
  bool ok = false;
  double norm = 0.0;     // inlier norm in the requested sense
  double sq_sum = 0.0;   // sum of inlier r^2 (least-squares fit)
};

// Fits the inlier subset and reports its residual norm. Subsets below the
// minimal support interpolate their data exactly; singular fits are infeasible.
template <EstimationProblem P>
SubsetFit fit_subset(const P& p, const IndexSet& inliers, Norm norm,
                     std::optional<typename P::Estimate>* estimate = nullptr) {
  SubsetFit fit;
  if (inliers.size() < minimal_support_of(p)) {
    fit.ok = true;
    return fit;
  }
  const auto mask = indicator(p.size(), inliers);
  try {
    if (norm == Norm::kLinf) {
      typename P::Estimate x = [&] {
        if constexpr (HasMinimaxSolve<P>) {
          return p.minimax_solve(mask);
        } else {
          return lawson_minimax(p, mask);
        }
      }();
      const auto r = p.residuals(x);
      fit.norm = max_over(r, inliers);
      fit.sq_sum = sq_sum(r, inliers);
      if (estimate) *estimate = std::move(x);
    } else {
      typename P::Estimate x = p.weighted_solve(mask);
      const auto r = p.residuals(x);
      fit.sq_sum = sq_sum(r, inliers);
      fit.norm = std::sqrt(fit.sq_sum);
      if (estimate) *estimate = std::move(x);
    }
    fit.ok = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kRankDeficient && e.code() != ErrorCode::kDegenerate) throw;
  }
  return fit;
}

template <class P>
void check_oracle_size(const P& p) {
  if (p.size() > kOracleMaxMeasurements) {
    throw Error(ErrorCode::kTooLarge, "oracle: at most " + std::to_string(kOracleMaxMeasurements) +
                                          " measurements can be enumerated");
  }
}

}  // namespace detail

/// Exact solution of MC (l-infinity bound), MTS (l2 bound) or TLS (threshold) by
/// enumerating outlier sets. Ties go to the lexicographically smallest outlier set
/// among those of least cardinality.
template <EstimationProblem P>
OracleSolution<typename P::Estimate> oracle_enumerate(const P& problem, Formulation formulation,
                                                  double parameter) {
  detail::check_oracle_size(problem);
  if (!(parameter >= 0.0)) throw Error(ErrorCode::kDomain, "oracle: parameter must be non-negative");
  const std::size_t m = problem.size();
  OracleSolution<typename P::Estimate> best;

  if (formulation == Formulation::kTLS) {
    const double eps2 = parameter * parameter;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= m; ++k) {
      detail::for_each_combination(m, k, [&](const IndexSet& outliers) {
        const IndexSet inliers = detail::complement(m, outliers);
        std::optional<typename P::Estimate> x;
        const auto fit = detail::fit_subset(problem, inliers, Norm::kL2, &x);
        if (!fit.ok) return false;
        const double cost = fit.sq_sum + eps2 * static_cast<double>(k);
        if (!std::isfinite(best_cost) || cost < best_cost - 1e-12 * std::max(1.0, best_cost)) {
          best_cost = cost;
          best.outliers = outliers;
          best.inliers = inliers;
          best.estimate = std::move(x);
          best.inlier_norm = fit.norm;
          best.objective = cost;
        }
        return false;
      });
    }
    return best;
  }

  const Norm norm = formulation == Formulation::kMC ? Norm::kLinf : Norm::kL2;
  for (std::size_t k = 0; k <= m; ++k) {
    const bool found = detail::for_each_combination(m, k, [&](const IndexSet& outliers) {
      const IndexSet inliers = detail::complement(m, outliers);
      std::optional<typename P::Estimate> x;
      const auto fit = detail::fit_subset(problem, inliers, norm, &x);
      if (!fit.ok || !detail::within(fit.norm, parameter)) return false;
      best.outliers = outliers;
      best.inliers = inliers;
      best.estimate = std::move(x);
      best.inlier_norm = fit.norm;
      best.objective = static_cast<double>(k);
      return true;
    });
    if (found) return best;
  }
  throw Error(ErrorCode::kNoFeasibleSet, "oracle: no outlier set satisfies the bound");
}

/// Smallest least-squares residual sum over inlier sets with at most `max_rejections` rejections.
template <EstimationProblem P>
double oracle_min_sq_sum(const P& problem, std::size_t max_rejections) {
  detail::check_oracle_size(problem);
  const std::size_t m = problem.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= std::min(max_rejections, m); ++k) {
    detail::for_each_combination(m, k, [&](const IndexSet& outliers) {
      const auto fit = detail::fit_subset(problem, detail::complement(m, outliers), Norm::kL2);
      if (fit.ok) best = std::min(best, fit.sq_sum);
      return false;
    });
  }
  return best;
}

struct RelationshipClause {
  std::string name;
  bool passed = false;
  bool vacuous = false;
  std::string detail;
  /// Informational clauses are reported but do not affect all_passed().
  bool required = true;
};

struct RelationshipReport {
  std::vector<RelationshipClause> clauses;
  bool all_passed() const {
    return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.passed || !c.required; });
  }
};

/// Checks the TLS / MTS cardinality relationships and the l-infinity TLS / MC
/// equivalence on a small instance by exhaustive enumeration.
template <EstimationProblem P>
RelationshipReport verify_relationship(const P& problem, double epsilon) {
  detail::check_oracle_size(problem);
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kDomain, "verify_relationship: epsilon must be positive");
  const std::size_t m = problem.size();
  RelationshipReport report;

  const auto tls = oracle_enumerate(problem, Formulation::kTLS, epsilon);
  const double r_tls = tls.inlier_norm;
  const std::size_t n_tls = tls.outliers.size();
  auto mts_count = [&](double tau) { return oracle_enumerate(problem, Formulation::kMTS, tau).outliers.size(); };
  auto describe = [&](double tau, std::size_t n_mts) {
    return "tau=" + std::to_string(tau) + " |O_TLS|=" + std::to_string(n_tls) +
           " |O_MTS|=" + std::to_string(n_mts);
  };

  {
    const std::size_t n = mts_count(r_tls);
    report.clauses.push_back({"tau_equal", n_tls == n, false, describe(r_tls, n)});
  }
  {
    const double tau = 1.25 * r_tls + 1e-6;
    const std::size_t n = mts_count(tau);
    report.clauses.push_back({"tau_above", n_tls >= n, false, describe(tau, n)});
  }
  if (r_tls > 0.0) {
    const double tau = 0.8 * r_tls;
    const std::size_t n = mts_count(tau);
    report.clauses.push_back({"tau_below", n_tls < n, false, describe(tau, n)});
  } else {
    report.clauses.push_back({"tau_below", true, true, "r_TLS = 0 leaves no smaller tau"});
  }

  // l-infinity TLS: |M \ O| max r^2 + eps^2 |O| against maximum consensus.
  const auto mc = oracle_enumerate(problem, Formulation::kMC, epsilon);
  if (mc.inlier_norm < epsilon * (1.0 - 1e-9)) {
    double best_cost = std::numeric_limits<double>::infinity();
    IndexSet best_outliers;
    double best_norm = 0.0;
    for (std::size_t k = 0; k <= m; ++k) {
      detail::for_each_combination(m, k, [&](const IndexSet& outliers) {
        const IndexSet inliers = detail::complement(m, outliers);
        const auto fit = detail::fit_subset(problem, inliers, Norm::kLinf);
        if (!fit.ok) return false;
        const double cost = static_cast<double>(inliers.size()) * fit.norm * fit.norm +
                            epsilon * epsilon * static_cast<double>(k);
        if (!std::isfinite(best_cost) || cost < best_cost - 1e-12 * std::max(1.0, best_cost)) {
          best_cost = cost;
          best_outliers = outliers;
          best_norm = fit.norm;
        }
        return false;
      });
    }
    // Feasibility of the l-infinity TLS optimum for MC follows from comparing it
    // with O = M. Equal cardinality additionally needs the coefficient |M \ O|
    // to drop out, which it does not in general, so that clause is informational.
    const bool feasible = detail::within(best_norm, epsilon);
    const std::string sizes = "|O_TLSinf|=" + std::to_string(best_outliers.size()) +
                              " |O_MC|=" + std::to_string(mc.outliers.size());
    report.clauses.push_back({"linf_tls_feasible_for_mc", feasible && best_outliers.size() >= mc.outliers.size(),
                              false, sizes + " max r=" + std::to_string(best_norm)});
    report.clauses.push_back(
        {"linf_tls_equals_mc", best_outliers.size() == mc.outliers.size(), false, sizes, false});
  } else {
    report.clauses.push_back({"linf_tls_feasible_for_mc", true, true, "MC optimum is not strictly feasible"});
    report.clauses.push_back({"linf_tls_equals_mc", true, true, "MC optimum is not strictly feasible", false});
  }
  return report;
}

}  // namespace robustkit
