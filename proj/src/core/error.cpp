#include "robustkit/core/error.hpp"

namespace robustkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "Domain";
    case ErrorCode::kNoFeasibleSet: return "NoFeasibleSet";
    case ErrorCode::kEmptyInlierSet: return "EmptyInlierSet";
    case ErrorCode::kDegenerateClusters: return "DegenerateClusters";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kInvalidBound: return "InvalidBound";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kTooFew: return "TooFew";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kMissingVertex: return "MissingVertex";
    case ErrorCode::kDisconnectedOdometry: return "DisconnectedOdometry";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kRateOutOfRange: return "RateOutOfRange";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace robustkit
