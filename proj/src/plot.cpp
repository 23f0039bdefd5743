#include "cignn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "cignn/errors.hpp"

namespace cignn {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;  // room for the legend
constexpr double kTop = 45.0;
constexpr double kBottom = 55.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string escape_xml(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string pixel(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.2f", v);
    return buffer;
}

std::string tick_label(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%g", v);
    return buffer;
}

/// Largest 1/2/5 x 10^k step that yields at most `most` intervals.
double nice_step(double range, int most) {
    const double raw = range / most;
    const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
    for (double factor : {1.0, 2.0, 5.0}) {
        if (magnitude * factor >= raw) {
            return magnitude * factor;
        }
    }
    return magnitude * 10.0;
}

}  // namespace

void write_line_chart_svg(const std::filesystem::path& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
    std::size_t longest = 0;
    double y_min = 0.0;
    double y_max = 0.0;
    bool any = false;
    for (const PlotSeries& s : series) {
        longest = std::max(longest, s.values.size());
        for (double v : s.values) {
            if (!std::isfinite(v)) {
                throw NumericError("chart series '" + s.label + "' contains a non-finite value");
            }
            y_min = any ? std::min(y_min, v) : v;
            y_max = any ? std::max(y_max, v) : v;
            any = true;
        }
    }
    if (!any) {
        throw ConfigError("chart needs at least one value");
    }
    if (y_max == y_min) {
        const double pad = std::max(1.0, std::abs(y_max)) * 0.1;
        y_min -= pad;
        y_max += pad;
    } else {
        const double pad = (y_max - y_min) * 0.05;
        y_min -= pad;
        y_max += pad;
    }
    const double x_max = longest > 1 ? static_cast<double>(longest - 1) : 1.0;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const auto x_pixel = [&](double x) { return kLeft + x / x_max * plot_w; };
    const auto y_pixel = [&](double y) {
        return kTop + (y_max - y) / (y_max - y_min) * plot_h;
    };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + pixel(kWidth) + "\" height=\"" +
           pixel(kHeight) + "\" viewBox=\"0 0 " + pixel(kWidth) + " " + pixel(kHeight) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    out += "<text x=\"" + pixel(kLeft + plot_w / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           escape_xml(title) + "</text>\n";

    // Grid and ticks.
    const double y_step = nice_step(y_max - y_min, 6);
    for (double tick = std::ceil(y_min / y_step) * y_step; tick <= y_max + y_step * 1e-9;
         tick += y_step) {
        const double py = y_pixel(tick);
        out += "<line x1=\"" + pixel(kLeft) + "\" y1=\"" + pixel(py) + "\" x2=\"" +
               pixel(kLeft + plot_w) + "\" y2=\"" + pixel(py) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        out += "<text x=\"" + pixel(kLeft - 8) + "\" y=\"" + pixel(py + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               tick_label(tick) + "</text>\n";
    }
    const double x_step = nice_step(x_max, 8);
    for (double tick = 0.0; tick <= x_max + x_step * 1e-9; tick += x_step) {
        const double px = x_pixel(tick);
        out += "<line x1=\"" + pixel(px) + "\" y1=\"" + pixel(kTop + plot_h) + "\" x2=\"" +
               pixel(px) + "\" y2=\"" + pixel(kTop + plot_h + 5) +
               "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
        out += "<text x=\"" + pixel(px) + "\" y=\"" + pixel(kTop + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               tick_label(tick) + "</text>\n";
    }

    // Axes.
    out += "<line x1=\"" + pixel(kLeft) + "\" y1=\"" + pixel(kTop) + "\" x2=\"" + pixel(kLeft) +
           "\" y2=\"" + pixel(kTop + plot_h) + "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + pixel(kLeft) + "\" y1=\"" + pixel(kTop + plot_h) + "\" x2=\"" +
           pixel(kLeft + plot_w) + "\" y2=\"" + pixel(kTop + plot_h) +
           "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + pixel(kLeft + plot_w / 2) + "\" y=\"" + pixel(kHeight - 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape_xml(x_label) + "</text>\n";
    out += "<text x=\"18\" y=\"" + pixel(kTop + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 " +
           pixel(kTop + plot_h / 2) + ")\">" + escape_xml(y_label) + "</text>\n";

    // Series and legend.
    for (std::size_t i = 0; i < series.size(); ++i) {
        const PlotSeries& s = series[i];
        const std::string color = s.color.empty() ? kPalette[i % kPaletteSize] : s.color;
        if (!s.values.empty()) {
            std::string points;
            for (std::size_t k = 0; k < s.values.size(); ++k) {
                points += pixel(x_pixel(static_cast<double>(k)));
                points += ',';
                points += pixel(y_pixel(s.values[k]));
                if (k + 1 < s.values.size()) {
                    points += ' ';
                }
            }
            if (s.values.size() == 1) {
                out += "<circle cx=\"" + pixel(x_pixel(0.0)) + "\" cy=\"" +
                       pixel(y_pixel(s.values[0])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
            } else {
                out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color +
                       "\" stroke-width=\"1.5\"/>\n";
            }
        }
        const double ly = kTop + 14.0 + static_cast<double>(i) * 18.0;
        out += "<line x1=\"" + pixel(kWidth - kRight + 12) + "\" y1=\"" + pixel(ly - 4) +
               "\" x2=\"" + pixel(kWidth - kRight + 36) + "\" y2=\"" + pixel(ly - 4) +
               "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + pixel(kWidth - kRight + 42) + "\" y=\"" + pixel(ly) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(s.label) +
               "</text>\n";
    }
    out += "</svg>\n";

    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw InputError("cannot open '" + path.string() + "' for writing");
    }
    file << out;
    if (!file) {
        throw InputError("failed to write '" + path.string() + "'");
    }
}

}  // namespace cignn
