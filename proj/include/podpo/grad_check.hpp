#ifndef PODPO_GRAD_CHECK_HPP
#define PODPO_GRAD_CHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "podpo/config.hpp"

namespace podpo {

struct GradSuiteResult {
  std::string name;
  double worst_relative_error = 0.0;
  bool pass = false;
};

struct GradCheckOptions {
  std::uint64_t seed = 0;
  int seeds = 10;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Test fixture: flips the sign of the analytic gradient of this suite.
  std::string corrupt_suite;
};

/// Suite names in report order.
const std::vector<std::string>& grad_suite_names();

/// Analytic vs central-difference gradients for the MLP, the drifting loss
/// (target frozen at the base point), the clipped value loss and the PPO
/// surrogate. Network shapes come from `config`.
std::vector<GradSuiteResult> run_grad_checks(const TrainConfig& config, const GradCheckOptions& options = {});

std::string format_grad_report(const std::vector<GradSuiteResult>& results);

}  // namespace podpo

#endif  // PODPO_GRAD_CHECK_HPP
