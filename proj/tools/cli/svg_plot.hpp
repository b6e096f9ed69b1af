#pragma once

#include <string>
#include <vector>

namespace edc::cli {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Self-contained SVG line chart (k vs mean silhouette), one polyline per
// series. Output depends only on the arguments.
std::string line_plot_svg(const std::vector<PlotSeries>& series, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::string& comment = {});

}  // namespace edc::cli
