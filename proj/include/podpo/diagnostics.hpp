#ifndef PODPO_DIAGNOSTICS_HPP
#define PODPO_DIAGNOSTICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "podpo/drift.hpp"
#include "podpo/trainer.hpp"

namespace podpo {

/// Candidates x ~ N(0, 0.25 I), one positive at (2, 0), negatives = candidates,
/// self mask on, D = 2.
DriftInputs<double> mismatch_configuration(std::uint64_t seed, Eigen::Index batch = 512, Eigen::Index group = 8);

/// x, y_pos and y_neg all i.i.d. standard normal (N_pos = M_neg = G), no mask.
DriftInputs<double> equilibrium_configuration(std::uint64_t seed, Eigen::Index batch = 4096, Eigen::Index group = 8,
                                              Eigen::Index dim = 2);

struct EquilibriumResult {
  VectorXd mean;       ///< batch mean of V_total, per component
  VectorXd std_error;  ///< standard error from the per-item means
  double max_abs_z = 0.0;
  bool pass = false;   ///< every |mean| within 4 standard errors
};

EquilibriumResult equilibrium_check(const DriftInputs<double>& inputs, double z_limit = 4.0);

struct CompressionResult {
  double rv_total = 0.0;
  double rv_low = 0.0;      ///< RV at the lowest temperature
  double low_temperature = 0.0;
  std::vector<double> rv_per_temperature;
  bool pass = false;        ///< rv_low >= margin * rv_total
};

CompressionResult variance_compression_check(const DriftInputs<double>& inputs, double margin = 1.5);

struct EssOrderingResult {
  std::vector<double> temps;  ///< sorted ascending
  std::vector<double> ess_ratio;
  std::vector<double> max_p;
  bool pass = false;  ///< ess strictly increasing and max_p strictly decreasing in tau
};

EssOrderingResult ess_ordering_check(const DriftInputs<double>& inputs);

/// Field diagnostics of the current policy: one rollout, its positive samples,
/// G candidates per positive.
std::optional<DriftDiagnostics<double>> policy_drift_diagnostics(TrainState& state);

struct DiagReport {
  EquilibriumResult equilibrium;
  CompressionResult compression;
  EssOrderingResult ess;
  DriftDiagnostics<double> mismatch;
  std::optional<DriftDiagnostics<double>> policy;
  [[nodiscard]] bool all_pass() const { return equilibrium.pass && compression.pass && ess.pass; }
};

DiagReport run_diagnostics(const TrainConfig& config, TrainState* policy_state = nullptr);
std::string format_report(const DiagReport& report);

}  // namespace podpo

#endif  // PODPO_DIAGNOSTICS_HPP
