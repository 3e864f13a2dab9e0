#pragma once

#include "adm/zernike.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace adm {

inline constexpr double kDefaultTheta = 1.742;

/// Rectangular actuator grid with some sites disabled. Active actuators are numbered
/// row-major, skipping inactive sites.
struct ActuatorLayout {
    int grid_rows = 12;
    int grid_cols = 12;
    std::vector<std::pair<int, int>> inactive = {{0, 0}, {0, 11}, {11, 0}, {11, 11}};
    double pitch_um = 400.0;

    /// 12x12 grid, four dead corners: 140 actuators.
    static ActuatorLayout corners_removed(int rows, int cols, double pitch_um);

    int count() const;
    bool is_active(int row, int col) const;
    /// (row, col) of every active actuator in index order.
    std::vector<std::pair<int, int>> sites() const;
    /// Index of the active actuator at (row, col), or -1.
    int index_of(int row, int col) const;
    void validate() const;

    bool operator==(const ActuatorLayout&) const = default;
};

/// Per-actuator gain multipliers applied from iteration `onset` of the control phase on.
struct DriftSchedule {
    int onset = 0;
    Eigen::VectorXd gains;

    /// `multiplier` on the rectangular block [row, row + rows) x [col, col + cols), 1 elsewhere.
    static DriftSchedule block_step(const ActuatorLayout& layout, int onset, int row, int col, int rows,
                                    int cols, double multiplier);
};

struct PlantConfig {
    ActuatorLayout layout;
    double theta_true = kDefaultTheta;
    double stroke_um = 2.0;
    double influence_sigma_um = 340.0;  // 0.85 * pitch
    double coupling_gamma = 0.0;
    double noise_sigma_um = 5e-3;
    std::optional<DriftSchedule> drift;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Element-wise u^theta. Throws DomainError when any u_i lies outside [0, 1].
Eigen::VectorXd lift(const Eigen::VectorXd& u, double theta);

/// Voltage vector together with its nonlinear lift b = u^theta.
class ControlInput {
public:
    ControlInput(Eigen::VectorXd u, double theta_assumed);

    const Eigen::VectorXd& u() const { return u_; }
    const Eigen::VectorXd& b() const { return b_; }
    double theta() const { return theta_; }

    void set_u(Eigen::VectorXd u);
    void set_theta(double theta_assumed);

private:
    Eigen::VectorXd u_;
    double theta_;
    Eigen::VectorXd b_;
};

/// Calibration (probe collection) and control iterations draw noise from disjoint
/// streams; drift only ever applies to the control phase.
enum class PlantPhase : std::uint32_t { calibration = 0, control = 1 };

/// Synthetic MEMS deformable mirror.
///
/// Surface = sum_i p_i g_i + noise, where g_i is a unit-peak Gaussian bump of width
/// influence_sigma_um centered on actuator i, and
///   p_i = stroke * gain_i(k) * u_i^theta_true * (1 + coupling_gamma * sum_{j in N4(i)} u_j^theta_true).
/// Noise is i.i.d. Gaussian per aperture pixel from a stream keyed by (seed, phase, k),
/// so every call is a pure function of its arguments. Pixels outside the aperture are 0.
class DmPlant {
public:
    DmPlant(PlantConfig config, const ApertureGrid& grid);

    const PlantConfig& config() const { return config_; }
    const ApertureGrid& grid() const { return grid_; }
    int actuator_count() const { return config_.layout.count(); }

    SurfaceMap actuate(const Eigen::VectorXd& u, int k, PlantPhase phase = PlantPhase::control) const;

    /// fit_surface(basis, actuate(u, k)).
    ZernikeCoeffs observe(const ZernikeBasis& basis, const Eigen::VectorXd& u, int k,
                          PlantPhase phase = PlantPhase::control) const;

    /// Exact n x m influence matrix of the decoupled plant at iteration k (drift included),
    /// i.e. observe(u, k) = true_influence(k) * u^theta_true when noise is zero.
    /// Throws DomainError when coupling_gamma != 0.
    Eigen::MatrixXd true_influence(const ZernikeBasis& basis, int k, PlantPhase phase = PlantPhase::control) const;

    /// Drift multipliers in effect at (k, phase).
    Eigen::VectorXd gains(int k, PlantPhase phase) const;

    /// (#aperture pixels) x m matrix of unit-peak influence functions.
    const Eigen::MatrixXd& influence_functions() const { return bumps_; }

private:
    Eigen::VectorXd masked_response(const Eigen::VectorXd& u, int k, PlantPhase phase) const;
    void check_basis(const ZernikeBasis& basis) const;

    PlantConfig config_;
    ApertureGrid grid_;
    std::vector<std::vector<int>> neighbors_;
    Eigen::MatrixXd bumps_;
};

}  // namespace adm
