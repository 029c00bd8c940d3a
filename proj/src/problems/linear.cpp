#include "robustkit/problems/linear.hpp"

#include <cmath>
#include <limits>

#include "robustkit/core/error.hpp"

namespace robustkit {
namespace {

void check_shapes(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, std::span<const double> w) {
  if (design.rows() != y.size() || static_cast<std::size_t>(design.rows()) != w.size()) {
    throw Error(ErrorCode::kDomain, "linear: design, observations and weights disagree in size");
  }
}

}  // namespace

Eigen::VectorXd linear_weighted_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                      std::span<const double> weights) {
  check_shapes(design, y, weights);
  Eigen::MatrixXd a(design.rows(), design.cols());
  Eigen::VectorXd b(y.size());
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    if (w < 0.0) throw Error(ErrorCode::kDomain, "linear: negative weight");
    const double s = std::sqrt(w);
    a.row(i) = s * design.row(i);
    b(i) = s * y(i);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorCode::kRankDeficient, "linear: weighted design is rank deficient");
  }
  return qr.solve(b);
}

Eigen::VectorXd linear_minimax_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                     std::span<const double> weights) {
  check_shapes(design, y, weights);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    if (weights[static_cast<std::size_t>(i)] > 0.0) rows.push_back(i);
  }
  const Eigen::Index n = design.cols();
  const auto k = static_cast<Eigen::Index>(rows.size());
  if (k <= n) {
    std::vector<double> w(weights.size(), 0.0);
    for (auto i : rows) w[static_cast<std::size_t>(i)] = 1.0;
    return linear_weighted_solve(design, y, w);
  }
  {
    Eigen::MatrixXd sub(k, n);
    for (Eigen::Index r = 0; r < k; ++r) sub.row(r) = design.row(rows[static_cast<std::size_t>(r)]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
    qr.setThreshold(1e-12);
    if (qr.rank() < n) throw Error(ErrorCode::kRankDeficient, "linear: minimax support is rank deficient");
  }

  // The Chebyshev optimum equioscillates on some n+1 rows: solve
  // a_i^T x + s_i h = y_i over every reference set and sign pattern, keep the best.
  auto max_residual = [&](const Eigen::VectorXd& x) {
    double mx = 0.0;
    for (auto i : rows) mx = std::max(mx, std::abs(y(i) - design.row(i).dot(x)));
    return mx;
  };
  Eigen::VectorXd best;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> ref(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i <= n; ++i) ref[static_cast<std::size_t>(i)] = i;
  Eigen::MatrixXd sys(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  while (true) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      for (Eigen::Index r = 0; r <= n; ++r) {
        const Eigen::Index row = rows[static_cast<std::size_t>(ref[static_cast<std::size_t>(r)])];
        const double sign = (r == 0 || !(mask & (1u << (r - 1)))) ? 1.0 : -1.0;
        sys.row(r).head(n) = design.row(row);
        sys(r, n) = sign;
        rhs(r) = y(row);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd sol = lu.solve(rhs);
      const Eigen::VectorXd x = sol.head(n);
      const double val = max_residual(x);
      if (val < best_val) {
        best_val = val;
        best = x;
      }
    }
    // Next (n+1)-combination of the k support rows.
    Eigen::Index i = n;
    while (i >= 0 && ref[static_cast<std::size_t>(i)] == k - (n + 1) + i) --i;
    if (i < 0) break;
    ++ref[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j <= n; ++j) {
      ref[static_cast<std::size_t>(j)] = ref[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  if (best.size() == 0) throw Error(ErrorCode::kRankDeficient, "linear: no regular reference set");
  return best;
}

LinearProblem::LinearProblem(Eigen::MatrixXd design, Eigen::VectorXd observations)
    : design_(std::move(design)), observations_(std::move(observations)) {
  if (design_.rows() != observations_.size()) {
    throw Error(ErrorCode::kDomain, "linear: design and observations disagree in size");
  }
  if (design_.cols() == 0 || design_.rows() < design_.cols()) {
    throw Error(ErrorCode::kDegenerate, "linear: need at least as many rows as unknowns");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design_);
  qr.setThreshold(1e-12);
  if (qr.rank() < design_.cols()) throw Error(ErrorCode::kDegenerate, "linear: design is rank deficient");
}

std::vector<double> LinearProblem::residuals(const Estimate& x) const {
  const Eigen::VectorXd r = (observations_ - design_ * x).cwiseAbs();
  return {r.data(), r.data() + r.size()};
}

LinearProblem::Estimate LinearProblem::weighted_solve(std::span<const double> weights) const {
  return linear_weighted_solve(design_, observations_, weights);
}

LinearProblem::Estimate LinearProblem::minimax_solve(std::span<const double> weights) const {
  return linear_minimax_solve(design_, observations_, weights);
}

}  // namespace robustkit
