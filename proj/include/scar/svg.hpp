#pragma once

#include <optional>
#include <string>
#include <vector>

namespace scar {

// One polyline on the chart; points with absent y are skipped.
struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<std::optional<double>> y;
};

// Self-contained SVG line chart with axes, ticks, and a legend. No external
// plotting dependency; output is static and deterministic.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<SvgSeries>& series);

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series);

}  // namespace scar
