#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robustkit {

enum class ErrorCode {
  kDomain,
  kNoFeasibleSet,
  kEmptyInlierSet,
  kDegenerateClusters,
  kTooLarge,
  kInvalidBound,
  kInsufficientSamples,
  kTooFew,
  kRankDeficient,
  kDegenerate,
  kMissingVertex,
  kDisconnectedOdometry,
  kParse,
  kDegenerateGeometry,
  kRateOutOfRange,
  kConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace robustkit
