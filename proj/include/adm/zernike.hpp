#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace adm {

using ZernikeCoeffs = Eigen::VectorXd;

/// Pixel geometry of the observation region.
///
/// Pixel (row r, col c) has its center at x = c, y = r in pixel units. A pixel belongs
/// to the aperture when its center lies within diameter_px / 2 of center_px. Physical
/// coordinates put +x along increasing columns and +y along decreasing rows.
struct ApertureGrid {
    int width_px = 256;
    int height_px = 256;
    double center_x_px = 127.5;
    double center_y_px = 127.5;
    double diameter_px = 200.0;
    double pixel_pitch_um = 22.0;

    /// Grid with the aperture centered on the image.
    static ApertureGrid centered(int width_px, int height_px, double diameter_px, double pixel_pitch_um);

    /// Throws DomainError when the geometry is invalid or the aperture is empty.
    void validate() const;

    double radius_px() const { return 0.5 * diameter_px; }
    bool in_aperture(int row, int col) const;
    /// Distance of pixel (row, col) from the center normalized by the aperture radius.
    double normalized_radius(int row, int col) const;

    /// Row-major linear indices (row * width_px + col) of aperture pixels, ascending.
    std::vector<Eigen::Index> aperture_pixels() const;

    bool operator==(const ApertureGrid&) const = default;
};

/// Dense height field in micrometers, stored row-major (height_px rows, width_px cols).
/// Values outside the aperture are carried along but ignored by every operation.
struct SurfaceMap {
    using Heights = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    ApertureGrid grid;
    Heights heights_um;

    explicit SurfaceMap(const ApertureGrid& g);
    SurfaceMap(const ApertureGrid& g, Heights heights);

    /// Heights at aperture pixels, in aperture_pixels() order.
    Eigen::VectorXd masked_values() const;
    /// Scatter aperture values back onto a zero-filled grid.
    static SurfaceMap from_masked(const ApertureGrid& g, const Eigen::VectorXd& values);
};

/// Radial degree n and signed azimuthal frequency m (m > 0 cosine, m < 0 sine).
struct ZernikeMode {
    int radial_degree = 0;
    int azimuthal = 0;
    bool operator==(const ZernikeMode&) const = default;
};

/// Noll sequential index (1-based, 1 = piston) to (n, m).
ZernikeMode noll_to_mode(int noll_index);
/// Inverse of noll_to_mode; throws DomainError for invalid (n, m).
int mode_to_noll(ZernikeMode mode);
/// Parses "Z4^2", "Z4^-2", "Z6^2" or "noll:12" into a Noll index.
int parse_mode_name(const std::string& name);

/// Radial polynomial R_n^{|m|}(rho) through the three-term recurrence.
double zernike_radial(int n, int m, double rho);
/// Unit-RMS (Noll) normalized Zernike function at polar coordinates (rho, phi).
double zernike_value(ZernikeMode mode, double rho, double phi);

/// Discretized Zernike basis over a circular aperture.
///
/// Columns follow Noll ordering and unit-RMS normalization over the continuous disc.
/// Fits go through a Householder QR of the sample matrix computed once here, so the
/// discrete non-orthogonality of the modes is absorbed by least squares.
/// Immutable after construction.
class ZernikeBasis {
public:
    /// Throws DomainError for a bad grid / n_modes and NumericalError when the sample
    /// matrix is rank deficient (aperture too coarse for the requested modes).
    ZernikeBasis(const ApertureGrid& grid, int n_modes);

    int n_modes() const { return static_cast<int>(modes_.size()); }
    const ApertureGrid& grid() const { return grid_; }
    const std::vector<ZernikeMode>& modes() const { return modes_; }
    const std::vector<Eigen::Index>& aperture_pixels() const { return pixels_; }
    /// (#aperture pixels) x n_modes.
    const Eigen::MatrixXd& sample_matrix() const { return samples_; }

    /// Least-squares coefficients of a surface over the aperture.
    ZernikeCoeffs fit(const SurfaceMap& surface) const;
    /// Same as fit() for values already gathered at aperture pixels; one column per surface.
    Eigen::MatrixXd fit_masked(const Eigen::MatrixXd& values) const;

    SurfaceMap synthesize(const ZernikeCoeffs& coeffs) const;

private:
    ApertureGrid grid_;
    std::vector<ZernikeMode> modes_;
    std::vector<Eigen::Index> pixels_;
    Eigen::MatrixXd samples_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
};

/// Max minus min over the aperture. Throws DomainError for an empty aperture.
double peak_to_valley(const SurfaceMap& surface);

}  // namespace adm
