#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "mlbias/viz/tsne.hpp"

namespace mlbias::viz {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

inline const char* tag_color(GenderTag t) {
    switch (t) {
    case GenderTag::male_form: return "#1f77b4";
    case GenderTag::female_form: return "#d62728";
    case GenderTag::adjective: return "#2ca02c";
    }
    return "#000000";
}

/// 800x600 scatter plot, one colored point and text label per row, with a legend.
inline std::string render_svg(const Matrix& coords, const std::vector<std::string>& labels,
                              const std::vector<GenderTag>& tags, std::string_view title = {}) {
    constexpr double width = 800, height = 600, margin = 60;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        xmin = std::min(xmin, coords(i, 0));
        xmax = std::max(xmax, coords(i, 0));
        ymin = std::min(ymin, coords(i, 1));
        ymax = std::max(ymax, coords(i, 1));
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
    const double scale = std::min(width - 2 * margin, height - 2 * margin) / span;
    const double ox = (width - (xmax - xmin) * scale) / 2, oy = (height - (ymax - ymin) * scale) / 2;

    std::string svg;
    char buf[512];
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" width=\"800\" height=\"600\">\n";
    svg += "<rect width=\"800\" height=\"600\" fill=\"#ffffff\"/>\n";
    if (!title.empty()) svg += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" font-family=\"sans-serif\">" + xml_escape(title) + "</text>\n";
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        const double x = ox + (coords(i, 0) - xmin) * scale;
        const double y = height - (oy + (coords(i, 1) - ymin) * scale);  // SVG y grows downwards
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"5\" fill=\"%s\"/>\n", x, y, tag_color(tags[i]));
        svg += buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" font-family=\"sans-serif\">", x + 7, y - 7);
        svg += buf;
        svg += xml_escape(labels[i]) + "</text>\n";
    }
    const GenderTag legend[] = {GenderTag::male_form, GenderTag::female_form, GenderTag::adjective};
    for (int k = 0; k < 3; ++k) {
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"20\" cy=\"%d\" r=\"5\" fill=\"%s\"/><text x=\"32\" y=\"%d\" font-size=\"12\" "
                      "font-family=\"sans-serif\">%s</text>\n",
                      20 + 18 * k, tag_color(legend[k]), 24 + 18 * k, to_string(legend[k]).c_str());
        svg += buf;
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace mlbias::viz
