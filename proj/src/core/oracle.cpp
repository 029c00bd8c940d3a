#include "robustkit/core/oracle.hpp"

namespace robustkit {

double suboptimality_bound(double r_empty, double r_outliers) {
  if (!(r_outliers >= 0.0)) throw Error(ErrorCode::kDomain, "suboptimality_bound: r(O) must be non-negative");
  if (!(r_empty > r_outliers)) {
    throw Error(ErrorCode::kInvalidBound, "suboptimality_bound: r(empty) must exceed r(O)");
  }
  return r_outliers / (r_empty - r_outliers);
}

}  // namespace robustkit
