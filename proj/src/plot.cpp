#include "adm/plot.hpp"

#include "adm/errors.hpp"
#include "adm/surface_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace adm {

namespace {

std::uint8_t to_byte(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

Rgb lerp_stops(const std::array<std::array<double, 3>, 5>& stops, double t)
{
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * static_cast<double>(stops.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), stops.size() - 2);
    const double f = pos - static_cast<double>(i);
    const auto& a = stops[i];
    const auto& b = stops[i + 1];
    return {to_byte(a[0] + f * (b[0] - a[0])), to_byte(a[1] + f * (b[1] - a[1])), to_byte(a[2] + f * (b[2] - a[2]))};
}

std::string svg_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double nice_step(double span, int target_ticks)
{
    const double raw = span / std::max(1, target_ticks);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            return m * mag;
        }
    }
    return 10.0 * mag;
}

}  // namespace

Rgb diverging_color(double t)
{
    static const std::array<std::array<double, 3>, 5> stops = {{
        {0.019, 0.188, 0.380},
        {0.263, 0.576, 0.765},
        {1.0, 1.0, 1.0},
        {0.839, 0.376, 0.302},
        {0.404, 0.0, 0.122},
    }};
    return lerp_stops(stops, 0.5 * (t + 1.0));
}

Rgb sequential_color(double t)
{
    static const std::array<std::array<double, 3>, 5> stops = {{
        {0.267, 0.005, 0.329},
        {0.231, 0.322, 0.545},
        {0.129, 0.569, 0.549},
        {0.369, 0.788, 0.384},
        {0.993, 0.906, 0.144},
    }};
    return lerp_stops(stops, t);
}

ColorScale symmetric_scale(const Eigen::VectorXd& values)
{
    const double a = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
    return {-a, a, true};
}

ColorScale range_scale(const Eigen::VectorXd& values)
{
    if (values.size() == 0) {
        return {0.0, 1.0, false};
    }
    return {values.minCoeff(), values.maxCoeff(), false};
}

void write_heatmap_png(const std::filesystem::path& path, const SurfaceMap& surface, double radius_fraction,
                       const ColorScale& scale, int min_size)
{
    const auto& g = surface.grid;
    const int factor = std::max(1, (min_size + g.width_px - 1) / g.width_px);
    const int w = g.width_px * factor;
    const int h = g.height_px * factor;

    std::vector<Rgb> cells(static_cast<std::size_t>(g.width_px) * static_cast<std::size_t>(g.height_px));
    const double span = scale.hi - scale.lo;
    for (int r = 0; r < g.height_px; ++r) {
        for (int c = 0; c < g.width_px; ++c) {
            Rgb color = kMaskColor;
            if (g.normalized_radius(r, c) <= radius_fraction) {
                const double v = surface.heights_um(r, c);
                if (scale.diverging) {
                    color = diverging_color(scale.hi > 0.0 ? v / scale.hi : 0.0);
                } else {
                    color = sequential_color(span > 0.0 ? (v - scale.lo) / span : 0.5);
                }
            }
            cells[static_cast<std::size_t>(r) * static_cast<std::size_t>(g.width_px) + static_cast<std::size_t>(c)] =
                color;
        }
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    FILE* fp = std::fopen(tmp.c_str(), "wb");
    if (!fp) {
        throw IoError("cannot write " + tmp.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        std::filesystem::remove(tmp);
        throw IoError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        const int r = y / factor;
        for (int x = 0; x < w; ++x) {
            const Rgb& c = cells[static_cast<std::size_t>(r) * static_cast<std::size_t>(g.width_px) +
                                 static_cast<std::size_t>(x / factor)];
            row[static_cast<std::size_t>(x) * 3] = c.r;
            row[static_cast<std::size_t>(x) * 3 + 1] = c.g;
            row[static_cast<std::size_t>(x) * 3 + 2] = c.b;
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp) != 0) {
        throw IoError("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_line_plot_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<PlotSeries>& series, bool log_y)
{
    constexpr double W = 720;
    constexpr double H = 440;
    constexpr double left = 80;
    constexpr double right = 20;
    constexpr double top = 40;
    constexpr double bottom = 60;
    const double pw = W - left - right;
    const double ph = H - top - bottom;

    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) {
                continue;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            const double y = log_y ? std::log10(s.y[i]) : s.y[i];
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if (xmax == xmin) {
        xmax = xmin + 1.0;
    }
    if (log_y) {
        ymin = std::floor(ymin);
        ymax = std::ceil(ymax);
        if (ymax == ymin) {
            ymax = ymin + 1.0;
        }
    } else {
        if (ymax == ymin) {
            ymax = ymin + 1.0;
        }
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(title)
        << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    const double xstep = nice_step(xmax - xmin, 8);
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9 * xstep; x += xstep) {
        svg << "<line x1=\"" << px(x) << "\" y1=\"" << top + ph << "\" x2=\"" << px(x) << "\" y2=\"" << top + ph + 5
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\">" << tick_label(x)
            << "</text>\n";
    }
    if (log_y) {
        for (double e = ymin; e <= ymax + 1e-9; e += 1.0) {
            svg << "<line x1=\"" << left << "\" y1=\"" << py(e) << "\" x2=\"" << left + pw << "\" y2=\"" << py(e)
                << "\" stroke=\"#dddddd\"/>\n";
            svg << "<text x=\"" << left - 8 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\">1e"
                << static_cast<int>(e) << "</text>\n";
        }
    } else {
        const double ystep = nice_step(ymax - ymin, 6);
        for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax; y += ystep) {
            svg << "<line x1=\"" << left << "\" y1=\"" << py(y) << "\" x2=\"" << left + pw << "\" y2=\"" << py(y)
                << "\" stroke=\"#dddddd\"/>\n";
            svg << "<text x=\"" << left - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << tick_label(y)
                << "</text>\n";
        }
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << svg_escape(x_label)
        << "</text>\n";
    svg << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << svg_escape(y_label) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) {
                continue;
            }
            svg << px(s.x[i]) << ',' << py(log_y ? std::log10(s.y[i]) : s.y[i]) << ' ';
        }
        svg << "\"/>\n";
        const double ly = top + 16 + 18 * static_cast<double>(si);
        svg << "<line x1=\"" << left + pw - 150 << "\" y1=\"" << ly << "\" x2=\"" << left + pw - 125 << "\" y2=\"" << ly
            << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << left + pw - 118 << "\" y=\"" << ly + 4 << "\">" << svg_escape(s.label) << "</text>\n";
    }
    svg << "</svg>\n";
    write_file_atomic(path, svg.str());
}

}  // namespace adm
