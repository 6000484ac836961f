// Minimal deterministic SVG line plots for scenario outputs.

#pragma once

#include <string>
#include <vector>

#include "qfilter/linalg.hpp"

namespace qfilter {

struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x;
    std::vector<double> y;
};

// Fixed 720x480 viewport, axes with tick labels; output is byte-stable for
// identical input.
std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<SvgSeries>& series);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace qfilter
