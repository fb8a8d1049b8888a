#pragma once

#include <optional>
#include <string>
#include <vector>

namespace scar {

// One aggregated row of the summary table ("VAT", "VAT + SCAR", ...).
struct ReportRow {
  std::string label;
  std::vector<double> accuracies;  // one per contributing run (seed)

  double mean() const;
  std::optional<double> stddev() const;  // absent for a single run
};

// Scans run directories for pretrain_metrics.csv / scar_metrics.csv and
// groups final test accuracies by method and phase.
std::vector<ReportRow> collect_report_rows(const std::vector<std::string>& run_dirs);

std::string render_report_text(const std::vector<ReportRow>& rows);
void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows);

}  // namespace scar
