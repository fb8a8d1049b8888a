#include "scar/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scar/errors.hpp"

namespace scar {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 30, kTop = 50, kBottom = 60;

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<SvgSeries>& series) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool seen = false;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!s.y[i].has_value()) continue;
      if (!seen) {
        xmin = xmax = s.x[i];
        ymin = ymax = *s.y[i];
        seen = true;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, *s.y[i]);
        ymax = std::max(ymax, *s.y[i]);
      }
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  // pad the y range a little
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">" << title << "</text>\n";

  // axes
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
     << kTop + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\""
     << kTop + ph << "\" stroke=\"black\"/>\n";

  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = xmin + (xmax - xmin) * t / ticks;
    const double fy = ymin + (ymax - ymin) * t / ticks;
    const double px = sx(fx), py = sy(fy);
    os << "<line x1=\"" << px << "\" y1=\"" << kTop + ph << "\" x2=\"" << px << "\" y2=\""
       << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px << "\" y=\"" << kTop + ph + 20
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(fx)
       << "</text>\n";
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py << "\" x2=\"" << kLeft << "\" y2=\"" << py
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 9 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(fy)
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
     << "</text>\n";
  os << "<text x=\"18\" y=\"" << kTop + ph / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
     << kTop + ph / 2 << ")\">" << y_label << "</text>\n";

  double legend_y = kTop + 8;
  for (const auto& s : series) {
    std::ostringstream pts;
    bool open = false;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!s.y[i].has_value()) {
        if (open) {
          os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\""
             << pts.str() << "\"/>\n";
          pts.str("");
          open = false;
        }
        continue;
      }
      pts << sx(s.x[i]) << "," << sy(*s.y[i]) << " ";
      open = true;
      os << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(*s.y[i]) << "\" r=\"3\" fill=\""
         << s.color << "\"/>\n";
    }
    if (open)
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\""
         << pts.str() << "\"/>\n";

    os << "<line x1=\"" << kLeft + pw - 130 << "\" y1=\"" << legend_y << "\" x2=\""
       << kLeft + pw - 105 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kLeft + pw - 100 << "\" y=\"" << legend_y + 4
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    legend_y += 18;
  }
  os << "</svg>\n";
  return os.str();
}

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open SVG for writing: " + path);
  out << render_line_chart(title, x_label, y_label, series);
}

}  // namespace scar
