#pragma once

#include <string>
#include <vector>

namespace netnmf::cli {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;  // non-finite values break the line
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 640;
  int height = 400;
};

/// Standalone SVG document; `metadata` is embedded verbatim in a <metadata> element.
std::string render_svg(const LineChart& chart, const std::string& metadata);

}  // namespace netnmf::cli
