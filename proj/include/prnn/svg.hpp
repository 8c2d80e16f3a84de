#pragma once

// Minimal line-plot SVG writer for learning curves and prediction overlays.

#include <iosfwd>
#include <string>
#include <vector>

namespace prnn::svg {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x, y;
    bool markers = false; ///< dots instead of a polyline
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::string comment; ///< embedded as an XML comment
};

void write_plot(std::ostream& out, const PlotSpec& spec, const std::vector<Series>& series);

} // namespace prnn::svg
