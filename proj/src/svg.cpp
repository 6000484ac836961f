#include "qfilter/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qfilter {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string render_line_plot(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<SvgSeries>& series) {
    const double W = 720, H = 480;
    const double ml = 70, mr = 20, mt = 40, mb = 50;

    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (first) {
                x_min = x_max = s.x[i];
                y_min = y_max = s.y[i];
                first = false;
            }
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;

    auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (W - ml - mr); };
    auto sy = [&](double y) { return H - mb - (y - y_min) / (y_max - y_min) * (H - mt - mb); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        double xv = x_min + (x_max - x_min) * k / 5.0;
        double yv = y_min + (y_max - y_min) * k / 5.0;
        out << "<text x=\"" << sx(xv) << "\" y=\"" << H - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(xv) << "</text>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(yv) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(yv) << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << (mt + H - mb) / 2 << ")\">" << y_label << "</text>\n";

    int color_idx = 0;
    double legend_y = mt + 6;
    for (const auto& s : series) {
        std::string color = s.color.empty() ? kPalette[color_idx % 6] : s.color;
        ++color_idx;
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            out << fmt(sx(s.x[i])) << "," << fmt(sy(s.y[i])) << " ";
        }
        out << "\"/>\n";
        if (!s.label.empty()) {
            out << "<line x1=\"" << W - mr - 150 << "\" y1=\"" << legend_y << "\" x2=\""
                << W - mr - 126 << "\" y2=\"" << legend_y << "\" stroke=\"" << color
                << "\" stroke-width=\"2\"/>\n";
            out << "<text x=\"" << W - mr - 120 << "\" y=\"" << legend_y + 4
                << "\" font-size=\"12\">" << s.label << "</text>\n";
            legend_y += 18;
        }
    }
    out << "</svg>\n";
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot open output file: " + path);
    out << content;
}

}  // namespace qfilter
