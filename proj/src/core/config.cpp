#include "robustkit/core/config.hpp"

#include <string>

namespace robustkit {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfig, message);
}

}  // namespace

void validate(const GreedyConfig& cfg) { require(static_cast<bool>(cfg.bound), "greedy: bound is not set"); }

void validate(const AdaptConfig& cfg) {
  require(static_cast<bool>(cfg.tau), "adapt: tau is not set");
  require(static_cast<bool>(cfg.theta), "adapt: theta is not set");
  require(cfg.max_iterations > 0, "adapt: max_iterations must be positive");
  require(cfg.samples_to_converge > 0, "adapt: samples_to_converge must be positive");
  require(cfg.thr_discount > 0.0 && cfg.thr_discount < 1.0, "adapt: thr_discount must lie in (0,1)");
  require(cfg.residual_slack >= 0.0, "adapt: residual_slack must be non-negative");
}

void validate(const GncConfig& cfg) {
  require(cfg.epsilon > 0.0, "gnc: epsilon must be positive");
  require(cfg.max_iterations > 0, "gnc: max_iterations must be positive");
  require(cfg.mu_update_factor > 1.0, "gnc: mu_update_factor must exceed 1");
  require(cfg.binary_tolerance > 0.0 && cfg.binary_tolerance < 0.5,
          "gnc: binary_tolerance must lie in (0, 0.5)");
  require(cfg.mu_floor > 0.0, "gnc: mu_floor must be positive");
}

void validate(const AdaptMintConfig& cfg) {
  require(cfg.max_iterations > 0, "adapt_mint: max_iterations must be positive");
  require(cfg.thr_discount > 0.0 && cfg.thr_discount < 1.0,
          "adapt_mint: thr_discount must lie in (0,1)");
  require(cfg.samples_to_converge > 0, "adapt_mint: samples_to_converge must be positive");
  require(cfg.window_size >= 1, "adapt_mint: window_size must be at least 1");
  require(cfg.converg_thr >= 0.0, "adapt_mint: converg_thr must be non-negative");
}

void validate(const GncMintConfig& cfg) {
  require(cfg.max_iterations > 0, "gnc_mint: max_iterations must be positive");
  require(cfg.mu_update_factor > 1.0, "gnc_mint: mu_update_factor must exceed 1");
  require(cfg.noise_low_bnd >= 0.0, "gnc_mint: noise_low_bnd must be non-negative");
  require(cfg.noise_up_bnd > cfg.noise_low_bnd, "gnc_mint: noise_up_bnd must exceed noise_low_bnd");
  require(cfg.samples_to_converge > 0, "gnc_mint: samples_to_converge must be positive");
  require(cfg.dof >= 0, "gnc_mint: dof must be non-negative");
  require(cfg.binary_tolerance > 0.0 && cfg.binary_tolerance < 0.5,
          "gnc_mint: binary_tolerance must lie in (0, 0.5)");
}

}  // namespace robustkit
