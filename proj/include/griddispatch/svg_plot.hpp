#pragma once

#include <string>
#include <vector>

namespace griddispatch::plot {

struct Series {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal polyline chart with axes, ticks and a legend. No dependencies;
// good enough for reward/violation curves.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          int width = 820, int height = 460);

} // namespace griddispatch::plot
