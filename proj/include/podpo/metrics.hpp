#ifndef PODPO_METRICS_HPP
#define PODPO_METRICS_HPP

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace podpo {

/// Scalars of one training iteration. Absent values are written as empty CSV cells.
struct MetricsRow {
  int iteration = 0;
  std::optional<double> mean_episode_return;
  double frac_positive = 0.0;
  std::optional<double> loss_drift;
  std::optional<double> loss_value;
  std::optional<double> loss_surrogate;
  std::optional<double> rv_total;
  std::vector<double> ess_ratio;  ///< one per temperature, first three are persisted
  std::vector<double> max_p;
  std::optional<double> wall_ms;
};

/// Fixed column order of the metrics file.
const std::vector<std::string>& metrics_columns();

std::string metrics_csv_header();
/// Numbers use 17 significant digits so rows round-trip exactly.
std::string metrics_csv_line(const MetricsRow& row);

/// Appends rows to a CSV file, flushing after each one.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const MetricsRow& row);

 private:
  std::string path_;
};

}  // namespace podpo

#endif  // PODPO_METRICS_HPP
