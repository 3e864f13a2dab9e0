#include "adm/zernike.hpp"

#include "adm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>

namespace adm {

ApertureGrid ApertureGrid::centered(int width_px, int height_px, double diameter_px, double pixel_pitch_um)
{
    ApertureGrid g;
    g.width_px = width_px;
    g.height_px = height_px;
    g.center_x_px = 0.5 * (width_px - 1);
    g.center_y_px = 0.5 * (height_px - 1);
    g.diameter_px = diameter_px;
    g.pixel_pitch_um = pixel_pitch_um;
    return g;
}

void ApertureGrid::validate() const
{
    if (width_px <= 0 || height_px <= 0) {
        throw DomainError("aperture grid: width_px and height_px must be positive");
    }
    if (!(diameter_px > 0.0) || !(pixel_pitch_um > 0.0)) {
        throw DomainError("aperture grid: diameter_px and pixel_pitch_um must be positive");
    }
    if (diameter_px > std::min(width_px, height_px)) {
        throw DomainError("aperture grid: diameter_px exceeds min(width_px, height_px)");
    }
    if (aperture_pixels().empty()) {
        throw DomainError("aperture grid: aperture contains no pixel centers");
    }
}

bool ApertureGrid::in_aperture(int row, int col) const
{
    return normalized_radius(row, col) <= 1.0;
}

double ApertureGrid::normalized_radius(int row, int col) const
{
    return std::hypot(col - center_x_px, row - center_y_px) / radius_px();
}

std::vector<Eigen::Index> ApertureGrid::aperture_pixels() const
{
    std::vector<Eigen::Index> out;
    for (int r = 0; r < height_px; ++r) {
        for (int c = 0; c < width_px; ++c) {
            if (in_aperture(r, c)) {
                out.push_back(static_cast<Eigen::Index>(r) * width_px + c);
            }
        }
    }
    return out;
}

SurfaceMap::SurfaceMap(const ApertureGrid& g)
    : grid(g), heights_um(Heights::Zero(g.height_px, g.width_px))
{
}

SurfaceMap::SurfaceMap(const ApertureGrid& g, Heights heights)
    : grid(g), heights_um(std::move(heights))
{
    if (heights_um.rows() != g.height_px || heights_um.cols() != g.width_px) {
        throw DimensionError("surface map: heights shape does not match grid");
    }
}

Eigen::VectorXd SurfaceMap::masked_values() const
{
    const auto pixels = grid.aperture_pixels();
    Eigen::VectorXd v(static_cast<Eigen::Index>(pixels.size()));
    const double* data = heights_um.data();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = data[pixels[i]];
    }
    return v;
}

SurfaceMap SurfaceMap::from_masked(const ApertureGrid& g, const Eigen::VectorXd& values)
{
    const auto pixels = g.aperture_pixels();
    if (static_cast<std::size_t>(values.size()) != pixels.size()) {
        throw DimensionError("surface map: masked value count does not match aperture");
    }
    SurfaceMap s(g);
    double* data = s.heights_um.data();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        data[pixels[i]] = values[static_cast<Eigen::Index>(i)];
    }
    return s;
}

ZernikeMode noll_to_mode(int j)
{
    if (j < 1) {
        throw DomainError("Noll index must be >= 1");
    }
    int n = 0;
    while ((n + 1) * (n + 2) / 2 < j) {
        ++n;
    }
    const int p = j - n * (n + 1) / 2;  // 1-based position within the radial row
    const int abs_m = (n % 2 == 0) ? 2 * (p / 2) : 2 * ((p - 1) / 2) + 1;
    if (abs_m == 0) {
        return {n, 0};
    }
    return {n, (j % 2 == 0) ? abs_m : -abs_m};
}

int mode_to_noll(ZernikeMode mode)
{
    const int n = mode.radial_degree;
    const int abs_m = std::abs(mode.azimuthal);
    if (n < 0 || abs_m > n || (n - abs_m) % 2 != 0) {
        throw DomainError("invalid Zernike mode (n=" + std::to_string(n) + ", m=" +
                          std::to_string(mode.azimuthal) + ")");
    }
    for (int j = n * (n + 1) / 2 + 1; j <= (n + 1) * (n + 2) / 2; ++j) {
        if (noll_to_mode(j) == mode) {
            return j;
        }
    }
    throw DomainError("invalid Zernike mode");
}

int parse_mode_name(const std::string& name)
{
    static const std::regex zform(R"(^\s*Z\s*(\d+)\s*\^\s*(-?\d+)\s*$)");
    static const std::regex nollform(R"(^\s*noll\s*:\s*(\d+)\s*$)");
    std::smatch match;
    if (std::regex_match(name, match, zform)) {
        return mode_to_noll({std::stoi(match[1]), std::stoi(match[2])});
    }
    if (std::regex_match(name, match, nollform)) {
        const int j = std::stoi(match[1]);
        if (j < 1) {
            throw DomainError("Noll index must be >= 1");
        }
        return j;
    }
    throw DomainError("unrecognized Zernike mode name '" + name + "' (expected Z<n>^<m> or noll:<j>)");
}

namespace {

// table(n, m) = R_n^m(rho) for 0 <= m <= n <= max_n, zero where n - m is odd.
Eigen::MatrixXd radial_table(int max_n, double rho)
{
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(max_n + 1, max_n + 2);
    double rho_pow = 1.0;
    for (int n = 0; n <= max_n; ++n) {
        t(n, n) = rho_pow;
        rho_pow *= rho;
        for (int m = n - 2; m >= 0; m -= 2) {
            const double lower = (n >= 2) ? t(n - 2, m) : 0.0;
            t(n, m) = rho * (t(n - 1, std::abs(m - 1)) + t(n - 1, m + 1)) - lower;
        }
    }
    return t;
}

double normalization(ZernikeMode mode)
{
    const double n1 = mode.radial_degree + 1.0;
    return mode.azimuthal == 0 ? std::sqrt(n1) : std::sqrt(2.0 * n1);
}

double angular(int m, double phi)
{
    if (m > 0) {
        return std::cos(m * phi);
    }
    if (m < 0) {
        return std::sin(-m * phi);
    }
    return 1.0;
}

}  // namespace

double zernike_radial(int n, int m, double rho)
{
    m = std::abs(m);
    if (n < 0 || m > n) {
        throw DomainError("zernike_radial: require 0 <= |m| <= n");
    }
    if ((n - m) % 2 != 0) {
        return 0.0;
    }
    return radial_table(n, rho)(n, m);
}

double zernike_value(ZernikeMode mode, double rho, double phi)
{
    return normalization(mode) * zernike_radial(mode.radial_degree, mode.azimuthal, rho) *
           angular(mode.azimuthal, phi);
}

ZernikeBasis::ZernikeBasis(const ApertureGrid& grid, int n_modes) : grid_(grid)
{
    grid_.validate();
    if (n_modes < 1) {
        throw DomainError("zernike basis: n_modes must be >= 1");
    }
    pixels_ = grid_.aperture_pixels();
    const auto n_pixels = static_cast<Eigen::Index>(pixels_.size());
    if (n_pixels < n_modes) {
        throw DomainError("zernike basis: aperture has " + std::to_string(n_pixels) +
                          " pixels, fewer than n_modes = " + std::to_string(n_modes));
    }

    modes_.reserve(static_cast<std::size_t>(n_modes));
    int max_n = 0;
    for (int j = 1; j <= n_modes; ++j) {
        modes_.push_back(noll_to_mode(j));
        max_n = std::max(max_n, modes_.back().radial_degree);
    }
    std::vector<double> norms;
    for (const auto& mode : modes_) {
        norms.push_back(normalization(mode));
    }

    samples_.resize(n_pixels, n_modes);
    for (Eigen::Index p = 0; p < n_pixels; ++p) {
        const auto row = static_cast<int>(pixels_[static_cast<std::size_t>(p)] / grid_.width_px);
        const auto col = static_cast<int>(pixels_[static_cast<std::size_t>(p)] % grid_.width_px);
        const double x = col - grid_.center_x_px;
        const double y = grid_.center_y_px - row;
        const double rho = std::hypot(x, y) / grid_.radius_px();
        const double phi = std::atan2(y, x);
        const Eigen::MatrixXd table = radial_table(max_n, rho);
        for (int j = 0; j < n_modes; ++j) {
            const auto& mode = modes_[static_cast<std::size_t>(j)];
            samples_(p, j) = norms[static_cast<std::size_t>(j)] *
                             table(mode.radial_degree, std::abs(mode.azimuthal)) *
                             angular(mode.azimuthal, phi);
        }
    }

    qr_.compute(samples_);
    // A = QR, so A and R share singular values.
    const Eigen::MatrixXd R = qr_.matrixQR().topRows(n_modes).triangularView<Eigen::Upper>();
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(R).singularValues();
    const double cutoff = 1e-9 * sv[0];
    const auto rank = (sv.array() > cutoff).count();
    if (rank < n_modes) {
        throw NumericalError("zernike basis: sample matrix has rank " + std::to_string(rank) + " < n_modes = " +
                             std::to_string(n_modes) + " (aperture too small for the requested modes)");
    }
}

ZernikeCoeffs ZernikeBasis::fit(const SurfaceMap& surface) const
{
    if (!(surface.grid == grid_)) {
        throw DimensionError("fit_surface: surface grid does not match basis grid");
    }
    return fit_masked(surface.masked_values());
}

Eigen::MatrixXd ZernikeBasis::fit_masked(const Eigen::MatrixXd& values) const
{
    if (values.rows() != samples_.rows()) {
        throw DimensionError("fit_surface: expected " + std::to_string(samples_.rows()) +
                             " aperture values, got " + std::to_string(values.rows()));
    }
    return qr_.solve(values);
}

SurfaceMap ZernikeBasis::synthesize(const ZernikeCoeffs& coeffs) const
{
    if (coeffs.size() != n_modes()) {
        throw DimensionError("synthesize: coefficient count " + std::to_string(coeffs.size()) +
                             " != n_modes " + std::to_string(n_modes()));
    }
    return SurfaceMap::from_masked(grid_, samples_ * coeffs);
}

double peak_to_valley(const SurfaceMap& surface)
{
    const Eigen::VectorXd v = surface.masked_values();
    if (v.size() == 0) {
        throw DomainError("peak_to_valley: empty aperture");
    }
    return v.maxCoeff() - v.minCoeff();
}

}  // namespace adm
