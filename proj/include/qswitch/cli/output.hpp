#pragma once

// File emitters for the command-line tool: CSV tables, SVG line and heat
// plots, SHA-256 digests.
//
// SVG layout: a 720 x 480 canvas with the plot area at x in [80, 690] and
// y in [40, 420].  A data point (x, y) maps to
//   px = 80 + (x - xmin) / (xmax - xmin) * 610
//   py = 420 - (y - ymin) / (ymax - ymin) * 380
// with the minima and maxima taken over all plotted data (a zero range is
// widened to +-0.5 around its value).  Heat maps draw one rectangle per cell
// on an even raster over the plot area; the value v maps to
// k = round(255 (v - vmin) / (vmax - vmin)) and the fill rgb(k, 0, 255 - k),
// blue for the minimum and red for the maximum.  Overlay curves on heat maps
// use the cell centres as their axis range.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qswitch::cli {

struct Column {
    std::string name;
    std::vector<double> values;
};

/// Header line plus one row per index, 17 significant digits.
std::string format_csv(const std::vector<Column>& columns);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotLabels {
    std::string title;
    std::string x_label;
    std::string y_label;
};

namespace svg_layout {
inline constexpr double kWidth = 720.0;
inline constexpr double kHeight = 480.0;
inline constexpr double kLeft = 80.0;
inline constexpr double kRight = 690.0;
inline constexpr double kTop = 40.0;
inline constexpr double kBottom = 420.0;
}  // namespace svg_layout

/// Ramp index 0..255 for v within [lo, hi].
int color_index(double v, double lo, double hi);

/// Polyline plot; InvalidArgument on empty or non-finite data.
std::string line_svg(const std::vector<Series>& series, const PlotLabels& labels);

/// values has one row per y and one column per x.
std::string heatmap_svg(const std::vector<double>& x, const std::vector<double>& y,
                        const Eigen::MatrixXd& values, const PlotLabels& labels,
                        const std::vector<Series>& overlays = {});

std::string sha256_hex(const std::string& bytes);

void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace qswitch::cli
