#pragma once

#include <string>
#include <vector>

namespace latentbo::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    /// Optional shaded band; same length as x when present.
    std::vector<double> lo;
    std::vector<double> hi;
    bool step = false;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Panels stacked vertically in one SVG document.
std::string render(const std::vector<Panel>& panels, int width = 720, int panel_height = 360);

} // namespace latentbo::svg
