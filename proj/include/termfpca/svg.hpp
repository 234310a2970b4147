#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

namespace termfpca {

struct LineSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LinePlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<LineSeries> series;
};

struct HeatmapSpec {
    std::string title;
    Eigen::MatrixXd matrix;
    std::vector<std::string> axis_labels;  // optional tick labels
};

struct BarChartSpec {
    std::string title;
    std::string y_label;
    std::vector<std::string> labels;
    std::vector<double> values;
    std::vector<double> values_secondary;  // optional second bar per label
    std::string legend_primary;
    std::string legend_secondary;
    double reference_line = 0.0;  // horizontal rule, drawn when > 0
};

using PlotSpec = std::variant<LinePlotSpec, HeatmapSpec, BarChartSpec>;

/// Render a plot as a deterministic, self-contained SVG string. Identical
/// input yields byte-identical output. NaN or empty series are emission
/// errors naming the offending series.
std::string render_svg(const PlotSpec& spec);

/// render_svg + atomic write to path.
void emit_svg(const PlotSpec& spec, const std::string& path);

}  // namespace termfpca
