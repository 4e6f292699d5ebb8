#pragma once

#include <string>
#include <vector>

namespace selab {

// Self-contained vector line chart; enough for the sweep and pipeline
// figures, not a general plotting layer.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;

  std::string render(int width = 640, int height = 420) const;
};

}  // namespace selab
