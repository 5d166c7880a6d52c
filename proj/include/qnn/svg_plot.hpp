#pragma once

#include <string>
#include <utility>
#include <vector>

namespace qnn {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
  bool connect = false;                          // draw a polyline through the points
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 480;
  /// When false a generation timestamp comment is embedded.
  bool deterministic = true;
};

/// Self-contained SVG scatter/line chart. Every data point becomes one
/// `<circle class="marker">`; log axes drop non-positive coordinates.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

}  // namespace qnn
