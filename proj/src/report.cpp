#include "scar/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "scar/config.hpp"
#include "scar/csv.hpp"
#include "scar/errors.hpp"

namespace fs = std::filesystem;

namespace scar {

double ReportRow::mean() const {
  double s = 0;
  for (double a : accuracies) s += a;
  return accuracies.empty() ? 0.0 : s / static_cast<double>(accuracies.size());
}

std::optional<double> ReportRow::stddev() const {
  if (accuracies.size() < 2) return std::nullopt;
  const double m = mean();
  double sq = 0;
  for (double a : accuracies) sq += (a - m) * (a - m);
  return std::sqrt(sq / static_cast<double>(accuracies.size() - 1));
}

namespace {

std::string display_name(const std::string& method) {
  if (method == "supervised") return "Supervised";
  if (method == "vat") return "VAT";
  if (method == "mixmatch") return "MixMatch";
  if (method == "fixmatch") return "FixMatch";
  return method;
}

// Final test accuracy of a metrics CSV (accuracy values are echoed, never
// recomputed).
double final_accuracy(const std::string& metrics_path) {
  const CsvTable table = read_csv(metrics_path);
  if (table.rows.empty()) throw ParseError(metrics_path + ": no rows");
  return std::stod(table.at(table.rows.size() - 1, "test_accuracy"));
}

}  // namespace

std::vector<ReportRow> collect_report_rows(const std::vector<std::string>& run_dirs) {
  // ordered per the summary-table layout: method, then method + SCAR
  const std::vector<std::string> method_order = {"supervised", "vat", "mixmatch", "fixmatch"};
  std::map<std::string, std::vector<double>> groups;

  for (const auto& dir : run_dirs) {
    const fs::path resolved = fs::path(dir) / "resolved.ini";
    if (!fs::exists(resolved))
      throw ConfigError("run dir " + dir + " has no resolved.ini");
    const ExperimentConfig cfg = parse_config_file(resolved.string());
    const std::string method = cfg.method.name();

    const fs::path pre = fs::path(dir) / "pretrain_metrics.csv";
    const fs::path post = fs::path(dir) / "scar_metrics.csv";
    if (fs::exists(pre)) groups[method].push_back(final_accuracy(pre.string()));
    if (fs::exists(post)) groups[method + "+scar"].push_back(final_accuracy(post.string()));
    if (!fs::exists(pre) && !fs::exists(post))
      throw ConfigError("run dir " + dir + " has no metrics CSV");
  }

  std::vector<ReportRow> rows;
  for (const auto& method : method_order) {
    if (groups.count(method))
      rows.push_back({display_name(method), groups[method]});
    if (groups.count(method + "+scar"))
      rows.push_back({display_name(method) + " + SCAR", groups[method + "+scar"]});
  }
  return rows;
}

std::string render_report_text(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-20s %10s %10s %6s\n", "Method", "Acc. mean", "Acc. std", "Seeds");
  os << buf;
  for (const auto& row : rows) {
    std::string std_str = "";
    if (auto sd = row.stddev()) {
      std::snprintf(buf, sizeof(buf), "%.2f", *sd * 100.0);
      std_str = buf;
    }
    std::snprintf(buf, sizeof(buf), "%-20s %10.2f %10s %6zu\n", row.label.c_str(),
                  row.mean() * 100.0, std_str.c_str(), row.accuracies.size());
    os << buf;
  }
  return os.str();
}

void write_report_csv(const std::string& path, const std::vector<ReportRow>& rows) {
  CsvWriter csv(path, {"method", "accuracy_mean", "accuracy_std", "seeds"});
  for (const auto& row : rows) {
    csv.begin_row();
    csv.field(row.label);
    csv.field(row.mean());
    csv.field(row.stddev());
    csv.field(static_cast<long>(row.accuracies.size()));
    csv.end_row();
  }
}

}  // namespace scar
