#pragma once

#include "adm/zernike.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace adm {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Blue (t = -1) through white (t = 0) to red (t = +1); t is clamped.
Rgb diverging_color(double t);
/// Dark blue (t = 0) through teal to yellow (t = 1); t is clamped.
Rgb sequential_color(double t);
/// Pixels outside the rendered region.
inline constexpr Rgb kMaskColor{128, 128, 128};

struct ColorScale {
    double lo = 0.0;
    double hi = 1.0;
    bool diverging = false;
};

/// [-a, a] with a = max |v|, a diverging map centered on zero.
ColorScale symmetric_scale(const Eigen::VectorXd& values);
/// [min v, max v] on the sequential map.
ColorScale range_scale(const Eigen::VectorXd& values);

/// Renders the pixels of `surface` within `radius_fraction` of the aperture radius as
/// an 8-bit RGB PNG, upscaled by an integer factor to at least `min_size` pixels wide.
void write_heatmap_png(const std::filesystem::path& path, const SurfaceMap& surface, double radius_fraction,
                       const ColorScale& scale, int min_size = 256);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
};

/// Static SVG line chart. Non-positive values are dropped when log_y is set.
void write_line_plot_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<PlotSeries>& series, bool log_y);

}  // namespace adm
