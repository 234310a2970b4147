#include "termfpca/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "termfpca/errors.hpp"

namespace termfpca {

namespace {

constexpr int kWidth = 760;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 48;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = 0.0, hi = 1.0;
    void expand(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (hi <= lo) {
            lo -= 0.5;
            hi += 0.5;
        } else {
            const double d = 0.05 * (hi - lo);
            lo -= d;
            hi += d;
        }
    }
};

void check_finite(const std::vector<double>& v, const std::string& label) {
    for (double x : v)
        if (!std::isfinite(x))
            throw_input("emission error: non-finite value in series '" + label + "'");
}

std::string header(const std::string& title) {
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(kHeight) + "\" viewBox=\"0 0 " +
         std::to_string(kWidth) + " " + std::to_string(kHeight) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    s += "<text x=\"" + std::to_string(kWidth / 2) +
         "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">" +
         escape(title) + "</text>\n";
    return s;
}

std::string axes_box() {
    const int x0 = kMarginLeft, y0 = kMarginTop;
    const int x1 = kWidth - kMarginRight, y1 = kHeight - kMarginBottom;
    return "<rect x=\"" + std::to_string(x0) + "\" y=\"" + std::to_string(y0) + "\" width=\"" +
           std::to_string(x1 - x0) + "\" height=\"" + std::to_string(y1 - y0) +
           "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
}

double map_x(double v, const Range& r) {
    return kMarginLeft + (v - r.lo) / (r.hi - r.lo) * (kWidth - kMarginLeft - kMarginRight);
}

double map_y(double v, const Range& r) {
    return kHeight - kMarginBottom -
           (v - r.lo) / (r.hi - r.lo) * (kHeight - kMarginTop - kMarginBottom);
}

std::string ticks(const Range& xr, const Range& yr, const std::string& x_label,
                  const std::string& y_label) {
    std::string s;
    for (int i = 0; i <= 5; ++i) {
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        s += "<text x=\"" + fmt(map_x(xv, xr)) + "\" y=\"" +
             std::to_string(kHeight - kMarginBottom + 18) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
             fmt_tick(xv) + "</text>\n";
        s += "<text x=\"" + std::to_string(kMarginLeft - 8) + "\" y=\"" +
             fmt(map_y(yv, yr) + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
             fmt_tick(yv) + "</text>\n";
    }
    if (!x_label.empty())
        s += "<text x=\"" + std::to_string((kMarginLeft + kWidth - kMarginRight) / 2) +
             "\" y=\"" + std::to_string(kHeight - 10) +
             "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
             escape(x_label) + "</text>\n";
    if (!y_label.empty())
        s += "<text x=\"16\" y=\"" + std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) +
             "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 16 " +
             std::to_string((kMarginTop + kHeight - kMarginBottom) / 2) + ")\">" +
             escape(y_label) + "</text>\n";
    return s;
}

std::string render_line(const LinePlotSpec& spec) {
    if (spec.series.empty()) throw_input("emission error: line plot has no series");
    Range xr{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
    Range yr = xr;
    for (const auto& s : spec.series) {
        if (s.x.empty() || s.x.size() != s.y.size())
            throw_input("emission error: empty or mismatched series '" + s.label + "'");
        check_finite(s.x, s.label);
        check_finite(s.y, s.label);
        for (double v : s.x) xr.expand(v);
        for (double v : s.y) yr.expand(v);
    }
    xr.pad();
    yr.pad();

    std::string out = header(spec.title) + axes_box();
    out += ticks(xr, yr, spec.x_label, spec.y_label);
    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const char* color = kPalette[si % 8];
        std::string path = "<polyline fill=\"none\" stroke=\"";
        path += color;
        path += "\" stroke-width=\"1.6\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            path += fmt(map_x(s.x[i], xr)) + "," + fmt(map_y(s.y[i], yr));
            if (i + 1 < s.x.size()) path += " ";
        }
        path += "\"/>\n";
        out += path;
        // legend entry
        const int ly = kMarginTop + 16 + static_cast<int>(si) * 16;
        out += "<line x1=\"" + std::to_string(kMarginLeft + 10) + "\" y1=\"" +
               std::to_string(ly - 4) + "\" x2=\"" + std::to_string(kMarginLeft + 34) +
               "\" y2=\"" + std::to_string(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + std::to_string(kMarginLeft + 40) + "\" y=\"" + std::to_string(ly) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(s.label) +
               "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

// Diverging blue-white-red scale, symmetric around zero.
std::string diverging_color(double v, double vmax) {
    double t = vmax > 0 ? v / vmax : 0.0;
    t = std::clamp(t, -1.0, 1.0);
    int r, g, b;
    if (t >= 0) {
        r = 255;
        g = static_cast<int>(std::lround(255 * (1.0 - t)));
        b = g;
    } else {
        b = 255;
        g = static_cast<int>(std::lround(255 * (1.0 + t)));
        r = g;
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string render_heatmap(const HeatmapSpec& spec) {
    const Eigen::Index n = spec.matrix.rows();
    if (n == 0 || spec.matrix.cols() != n)
        throw_input("emission error: heatmap needs a nonempty square matrix");
    if (!spec.matrix.allFinite())
        throw_input("emission error: non-finite value in heatmap '" + spec.title + "'");

    const double vmax = spec.matrix.cwiseAbs().maxCoeff();
    const int x0 = kMarginLeft, y0 = kMarginTop;
    const double cell_w =
        static_cast<double>(kWidth - kMarginLeft - kMarginRight) / static_cast<double>(n);
    const double cell_h =
        static_cast<double>(kHeight - kMarginTop - kMarginBottom) / static_cast<double>(n);

    std::string out = header(spec.title);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out += "<rect x=\"" + fmt(x0 + j * cell_w) + "\" y=\"" + fmt(y0 + i * cell_h) +
                   "\" width=\"" + fmt(cell_w + 0.5) + "\" height=\"" + fmt(cell_h + 0.5) +
                   "\" fill=\"" + diverging_color(spec.matrix(i, j), vmax) + "\"/>\n";
        }
    }
    out += axes_box();
    out += "</svg>\n";
    return out;
}

std::string render_bars(const BarChartSpec& spec) {
    if (spec.labels.empty() || spec.labels.size() != spec.values.size())
        throw_input("emission error: bar chart has empty or mismatched labels/values");
    check_finite(spec.values, spec.legend_primary.empty() ? "bars" : spec.legend_primary);
    const bool dual = !spec.values_secondary.empty();
    if (dual && spec.values_secondary.size() != spec.values.size())
        throw_input("emission error: secondary bar series length mismatch");
    if (dual)
        check_finite(spec.values_secondary,
                     spec.legend_secondary.empty() ? "bars2" : spec.legend_secondary);

    Range yr{0.0, std::numeric_limits<double>::lowest()};
    for (double v : spec.values) yr.expand(v);
    if (dual)
        for (double v : spec.values_secondary) yr.expand(v);
    if (spec.reference_line > 0) yr.expand(spec.reference_line);
    yr.pad();
    yr.lo = 0.0;

    const std::size_t n = spec.labels.size();
    const double slot =
        static_cast<double>(kWidth - kMarginLeft - kMarginRight) / static_cast<double>(n);
    const double bw = dual ? slot * 0.38 : slot * 0.7;

    std::string out = header(spec.title) + axes_box();
    for (int i = 0; i <= 5; ++i) {
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        out += "<text x=\"" + std::to_string(kMarginLeft - 8) + "\" y=\"" + fmt(map_y(yv, yr) + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               fmt_tick(yv) + "</text>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double cx = kMarginLeft + slot * (static_cast<double>(i) + 0.5);
        const double y_base = map_y(0.0, yr);
        const double y1 = map_y(spec.values[i], yr);
        out += "<rect x=\"" + fmt(cx - (dual ? bw : bw / 2)) + "\" y=\"" + fmt(y1) +
               "\" width=\"" + fmt(bw) + "\" height=\"" + fmt(y_base - y1) +
               "\" fill=\"#1f77b4\"/>\n";
        if (dual) {
            const double y2 = map_y(spec.values_secondary[i], yr);
            out += "<rect x=\"" + fmt(cx) + "\" y=\"" + fmt(y2) + "\" width=\"" + fmt(bw) +
                   "\" height=\"" + fmt(y_base - y2) + "\" fill=\"#ff7f0e\"/>\n";
        }
        // sparse x labels when crowded
        if (n <= 24 || i % ((n + 23) / 24) == 0)
            out += "<text x=\"" + fmt(cx) + "\" y=\"" +
                   std::to_string(kHeight - kMarginBottom + 16) +
                   "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" +
                   escape(spec.labels[i]) + "</text>\n";
    }
    if (spec.reference_line > 0) {
        const double y = map_y(spec.reference_line, yr);
        out += "<line x1=\"" + std::to_string(kMarginLeft) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
               std::to_string(kWidth - kMarginRight) + "\" y2=\"" + fmt(y) +
               "\" stroke=\"#d62728\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
    }
    if (!spec.legend_primary.empty()) {
        out += "<rect x=\"" + std::to_string(kMarginLeft + 10) + "\" y=\"" +
               std::to_string(kMarginTop + 8) + "\" width=\"12\" height=\"12\" fill=\"#1f77b4\"/>\n";
        out += "<text x=\"" + std::to_string(kMarginLeft + 26) + "\" y=\"" +
               std::to_string(kMarginTop + 18) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(spec.legend_primary) +
               "</text>\n";
    }
    if (dual && !spec.legend_secondary.empty()) {
        out += "<rect x=\"" + std::to_string(kMarginLeft + 10) + "\" y=\"" +
               std::to_string(kMarginTop + 26) +
               "\" width=\"12\" height=\"12\" fill=\"#ff7f0e\"/>\n";
        out += "<text x=\"" + std::to_string(kMarginLeft + 26) + "\" y=\"" +
               std::to_string(kMarginTop + 36) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(spec.legend_secondary) +
               "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinePlotSpec>) return render_line(s);
            else if constexpr (std::is_same_v<T, HeatmapSpec>) return render_heatmap(s);
            else return render_bars(s);
        },
        spec);
}

void emit_svg(const PlotSpec& spec, const std::string& path) {
    const std::string body = render_svg(spec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("I/O error: cannot open '" + path + "' for writing");
    out << body;
    if (!out) throw_io("I/O error: write failed for '" + path + "'");
}

}  // namespace termfpca
