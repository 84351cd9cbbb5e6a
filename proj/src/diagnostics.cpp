#include "podpo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "podpo/losses.hpp"

namespace podpo {

DriftInputs<double> mismatch_configuration(std::uint64_t seed, Eigen::Index batch, Eigen::Index group) {
  RngStream rng(seed, "mismatch_configuration");
  DriftInputs<double> in;
  in.temps = default_temperatures();
  in.mask_self = true;
  Eigen::RowVector2d target(2.0, 0.0);
  for (Eigen::Index b = 0; b < batch; ++b) {
    in.x.push_back(0.5 * rng.normal_matrix(group, 2));
    in.y_pos.push_back(target);
  }
  in.y_neg = in.x;
  return in;
}

DriftInputs<double> equilibrium_configuration(std::uint64_t seed, Eigen::Index batch, Eigen::Index group,
                                              Eigen::Index dim) {
  RngStream rng(seed, "equilibrium_configuration");
  DriftInputs<double> in;
  in.temps = default_temperatures();
  in.mask_self = false;
  for (Eigen::Index b = 0; b < batch; ++b) {
    in.x.push_back(rng.normal_matrix(group, dim));
    in.y_pos.push_back(rng.normal_matrix(group, dim));
    in.y_neg.push_back(rng.normal_matrix(group, dim));
  }
  return in;
}

EquilibriumResult equilibrium_check(const DriftInputs<double>& inputs, double z_limit) {
  const auto v = compute_v(inputs);
  const auto batch = static_cast<Eigen::Index>(v.size());
  MatrixXd item_means(batch, v.front().cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    item_means.row(b) = v[static_cast<std::size_t>(b)].colwise().mean();
  }
  EquilibriumResult out;
  out.mean = item_means.colwise().mean().transpose();
  const MatrixXd centered = item_means.rowwise() - out.mean.transpose();
  const VectorXd var = centered.array().square().colwise().sum().transpose() / static_cast<double>(batch - 1);
  out.std_error = (var / static_cast<double>(batch)).cwiseSqrt();
  out.max_abs_z = (out.mean.cwiseAbs().array() / out.std_error.array()).maxCoeff();
  out.pass = out.max_abs_z <= z_limit;
  return out;
}

CompressionResult variance_compression_check(const DriftInputs<double>& inputs, double margin) {
  const auto diag = drift_diagnostics(inputs);
  CompressionResult out;
  out.rv_total = diag.rv_total;
  out.rv_per_temperature = diag.rv_per_temperature;
  const auto low = std::min_element(diag.temps.begin(), diag.temps.end()) - diag.temps.begin();
  out.low_temperature = diag.temps[static_cast<std::size_t>(low)];
  out.rv_low = diag.rv_per_temperature[static_cast<std::size_t>(low)];
  out.pass = out.rv_low >= margin * out.rv_total;
  return out;
}

EssOrderingResult ess_ordering_check(const DriftInputs<double>& inputs) {
  EssOrderingResult out;
  out.temps = inputs.temps;
  std::sort(out.temps.begin(), out.temps.end());
  const auto dist = drift_distances(inputs);
  for (const double t : out.temps) {
    const auto m = ess_metrics(dist, t);
    out.ess_ratio.push_back(m.ess_ratio);
    out.max_p.push_back(m.max_p);
  }
  out.pass = true;
  for (std::size_t i = 1; i < out.temps.size(); ++i) {
    out.pass = out.pass && out.ess_ratio[i] > out.ess_ratio[i - 1] && out.max_p[i] < out.max_p[i - 1];
  }
  return out;
}

std::optional<DriftDiagnostics<double>> policy_drift_diagnostics(TrainState& state) {
  if (!state.actor) {
    return std::nullopt;
  }
  const auto& cfg = state.config;
  Trajectory traj = collect_rollout(state.envs, *state.actor, state.critic, cfg.steps, state.noise_streams);
  compute_gae(traj, cfg.gamma, cfg.lambda);
  const auto positives = filter_positive(traj.obs, traj.actions, normalize_advantages(Trajectory::flatten(traj.advantages)));
  if (positives.empty()) {
    return std::nullopt;
  }
  RngStream rng(cfg.seed, "diag_candidates");
  const auto candidates = sample_candidates(*state.actor, positives.obs_pos, cfg.group, rng);
  return drift_diagnostics(podpo_drift_inputs(candidates, positives.actions_pos, cfg.temps));
}

DiagReport run_diagnostics(const TrainConfig& config, TrainState* policy_state) {
  DiagReport report;
  report.equilibrium = equilibrium_check(equilibrium_configuration(config.seed));
  const auto mismatch = mismatch_configuration(config.seed);
  report.compression = variance_compression_check(mismatch);
  report.ess = ess_ordering_check(mismatch);
  report.mismatch = drift_diagnostics(mismatch);
  if (policy_state != nullptr) {
    report.policy = policy_drift_diagnostics(*policy_state);
  }
  return report;
}

namespace {

std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

void sweep_table(std::ostringstream& out, const DriftDiagnostics<double>& d) {
  out << "t\tESS_ratio\tMax_p\tRV\n";
  for (std::size_t i = 0; i < d.temps.size(); ++i) {
    out << num(d.temps[i]) << '\t' << num(d.ess_ratio[i]) << '\t' << num(d.max_p[i]) << '\t'
        << num(d.rv_per_temperature[i]) << '\n';
  }
  out << "rv_total\t" << num(d.rv_total) << '\n';
}

}  // namespace

std::string format_report(const DiagReport& r) {
  std::ostringstream out;
  out << "[equilibrium]\n";
  out << "mean_v\t" << num(r.equilibrium.mean(0)) << '\t' << num(r.equilibrium.mean(1)) << '\n';
  out << "std_error\t" << num(r.equilibrium.std_error(0)) << '\t' << num(r.equilibrium.std_error(1)) << '\n';
  out << "max_abs_z\t" << num(r.equilibrium.max_abs_z) << '\n';
  out << "status\t" << (r.equilibrium.pass ? "PASS" : "FAIL") << "\n\n";

  out << "[variance_compression]\n";
  out << "rv_total\t" << num(r.compression.rv_total) << '\n';
  out << "rv_t" << num(r.compression.low_temperature) << '\t' << num(r.compression.rv_low) << '\n';
  out << "criterion\trv_t" << num(r.compression.low_temperature) << " >= 1.5 * rv_total\n";
  out << "status\t" << (r.compression.pass ? "PASS" : "FAIL") << "\n\n";

  out << "[ess_ordering]\n";
  out << "status\t" << (r.ess.pass ? "PASS" : "FAIL") << "\n\n";

  out << "[temperature_sweep mismatch]\n";
  sweep_table(out, r.mismatch);
  if (r.policy) {
    out << "\n[temperature_sweep policy]\n";
    sweep_table(out, *r.policy);
  }
  return out.str();
}

}  // namespace podpo
