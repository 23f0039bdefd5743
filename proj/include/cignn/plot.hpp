#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cignn {

/// One polyline of a chart: values[k] is plotted at integer x = k.
struct PlotSeries {
    std::string label;
    std::string color;  // CSS color; empty picks from a fixed palette
    std::vector<double> values;
};

/// Writes a dependency-free SVG line chart with axes, ticks, and a legend.
/// Output is deterministic: identical inputs produce identical bytes.
void write_line_chart_svg(const std::filesystem::path& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

}  // namespace cignn
