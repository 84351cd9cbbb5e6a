#include "podpo/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "podpo/errors.hpp"

namespace podpo {
namespace {

std::string format(double value) {
  if (!std::isfinite(value)) {
    return {};
  }
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string format(const std::optional<double>& value) { return value ? format(*value) : std::string(); }

std::string format_at(const std::vector<double>& values, std::size_t i) {
  return i < values.size() ? format(values[i]) : std::string();
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> columns{
      "iteration",    "mean_episode_return", "frac_positive", "loss_drift",   "loss_value",
      "loss_surrogate", "rv_total",          "ess_ratio_t1",  "ess_ratio_t2", "ess_ratio_t3",
      "max_p_t1",     "max_p_t2",            "max_p_t3",      "wall_ms"};
  return columns;
}

std::string metrics_csv_header() {
  std::string out;
  for (const auto& c : metrics_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out + "\n";
}

std::string metrics_csv_line(const MetricsRow& row) {
  const std::vector<std::string> cells{std::to_string(row.iteration),
                                       format(row.mean_episode_return),
                                       format(row.frac_positive),
                                       format(row.loss_drift),
                                       format(row.loss_value),
                                       format(row.loss_surrogate),
                                       format(row.rv_total),
                                       format_at(row.ess_ratio, 0),
                                       format_at(row.ess_ratio, 1),
                                       format_at(row.ess_ratio, 2),
                                       format_at(row.max_p, 0),
                                       format_at(row.max_p, 1),
                                       format_at(row.max_p, 2),
                                       format(row.wall_ms)};
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += cells[i];
  }
  return out + "\n";
}

MetricsWriter::MetricsWriter(const std::string& path) : path_(path) {
  std::ofstream out(path_, std::ios::trunc);
  if (!out) {
    throw Error("cannot create metrics file " + path_);
  }
  out << metrics_csv_header();
}

void MetricsWriter::append(const MetricsRow& row) {
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    throw Error("cannot append to metrics file " + path_);
  }
  out << metrics_csv_line(row);
  out.flush();
}

}  // namespace podpo
