#pragma once

#include <string>
#include <vector>

namespace metaradar {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  double y_min = 0.0;
  double y_max = 1.0;
};

/// Static SVG line chart with a legend. Points with non-positive x are
/// dropped on a log axis.
std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace metaradar
