#include "adm/dm_plant.hpp"

#include "adm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace adm {

ActuatorLayout ActuatorLayout::corners_removed(int rows, int cols, double pitch_um)
{
    ActuatorLayout layout;
    layout.grid_rows = rows;
    layout.grid_cols = cols;
    layout.pitch_um = pitch_um;
    layout.inactive = {{0, 0}, {0, cols - 1}, {rows - 1, 0}, {rows - 1, cols - 1}};
    return layout;
}

bool ActuatorLayout::is_active(int row, int col) const
{
    if (row < 0 || row >= grid_rows || col < 0 || col >= grid_cols) {
        return false;
    }
    return std::find(inactive.begin(), inactive.end(), std::pair{row, col}) == inactive.end();
}

int ActuatorLayout::count() const
{
    return static_cast<int>(sites().size());
}

std::vector<std::pair<int, int>> ActuatorLayout::sites() const
{
    std::vector<std::pair<int, int>> out;
    for (int r = 0; r < grid_rows; ++r) {
        for (int c = 0; c < grid_cols; ++c) {
            if (is_active(r, c)) {
                out.emplace_back(r, c);
            }
        }
    }
    return out;
}

int ActuatorLayout::index_of(int row, int col) const
{
    const auto s = sites();
    const auto it = std::find(s.begin(), s.end(), std::pair{row, col});
    return it == s.end() ? -1 : static_cast<int>(it - s.begin());
}

void ActuatorLayout::validate() const
{
    if (grid_rows <= 0 || grid_cols <= 0) {
        throw DomainError("actuator layout: grid_rows and grid_cols must be positive");
    }
    if (!(pitch_um > 0.0)) {
        throw DomainError("actuator layout: pitch_um must be positive");
    }
    for (const auto& [r, c] : inactive) {
        if (r < 0 || r >= grid_rows || c < 0 || c >= grid_cols) {
            throw DomainError("actuator layout: inactive site (" + std::to_string(r) + ", " + std::to_string(c) +
                              ") is outside the grid");
        }
    }
    if (count() == 0) {
        throw DomainError("actuator layout: no active actuators");
    }
}

DriftSchedule DriftSchedule::block_step(const ActuatorLayout& layout, int onset, int row, int col, int rows,
                                        int cols, double multiplier)
{
    DriftSchedule d;
    d.onset = onset;
    d.gains = Eigen::VectorXd::Ones(layout.count());
    const auto s = layout.sites();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto [r, c] = s[i];
        if (r >= row && r < row + rows && c >= col && c < col + cols) {
            d.gains[static_cast<Eigen::Index>(i)] = multiplier;
        }
    }
    return d;
}

void PlantConfig::validate() const
{
    layout.validate();
    if (!(theta_true > 0.0)) {
        throw DomainError("plant: theta_true must be positive");
    }
    if (!(stroke_um > 0.0)) {
        throw DomainError("plant: stroke_um must be positive");
    }
    if (!(influence_sigma_um > 0.0)) {
        throw DomainError("plant: influence_sigma_um must be positive");
    }
    if (!(coupling_gamma >= 0.0)) {
        throw DomainError("plant: coupling_gamma must be >= 0");
    }
    if (!(noise_sigma_um >= 0.0)) {
        throw DomainError("plant: noise_sigma_um must be >= 0");
    }
    if (drift) {
        if (drift->onset < 0) {
            throw DomainError("plant: drift onset must be >= 0");
        }
        if (drift->gains.size() != layout.count()) {
            throw DimensionError("plant: drift gains must have one entry per actuator");
        }
        if (!drift->gains.allFinite() || (drift->gains.array() < 0.0).any()) {
            throw DomainError("plant: drift gains must be finite and non-negative");
        }
    }
}

Eigen::VectorXd lift(const Eigen::VectorXd& u, double theta)
{
    if (!(theta > 0.0)) {
        throw DomainError("lift: theta must be positive");
    }
    Eigen::VectorXd b(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (!(u[i] >= 0.0 && u[i] <= 1.0)) {
            throw DomainError("control input u[" + std::to_string(i) + "] = " + std::to_string(u[i]) +
                              " is outside [0, 1]");
        }
        b[i] = std::pow(u[i], theta);
    }
    return b;
}

ControlInput::ControlInput(Eigen::VectorXd u, double theta_assumed)
    : u_(std::move(u)), theta_(theta_assumed), b_(lift(u_, theta_))
{
}

void ControlInput::set_u(Eigen::VectorXd u)
{
    b_ = lift(u, theta_);
    u_ = std::move(u);
}

void ControlInput::set_theta(double theta_assumed)
{
    b_ = lift(u_, theta_assumed);
    theta_ = theta_assumed;
}

DmPlant::DmPlant(PlantConfig config, const ApertureGrid& grid) : config_(std::move(config)), grid_(grid)
{
    config_.validate();
    grid_.validate();

    const auto& layout = config_.layout;
    const auto sites = layout.sites();
    const auto m = static_cast<Eigen::Index>(sites.size());

    neighbors_.resize(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const auto [r, c] = sites[i];
        for (const auto& [dr, dc] : {std::pair{-1, 0}, std::pair{1, 0}, std::pair{0, -1}, std::pair{0, 1}}) {
            const int j = layout.index_of(r + dr, c + dc);
            if (j >= 0) {
                neighbors_[i].push_back(j);
            }
        }
    }

    // Actuator grid is centered on the aperture center.
    const auto pixels = grid_.aperture_pixels();
    bumps_.resize(static_cast<Eigen::Index>(pixels.size()), m);
    const double inv_two_sigma2 = 1.0 / (2.0 * config_.influence_sigma_um * config_.influence_sigma_um);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto [ar, ac] = sites[static_cast<std::size_t>(i)];
        const double ax = (ac - 0.5 * (layout.grid_cols - 1)) * layout.pitch_um;
        const double ay = (0.5 * (layout.grid_rows - 1) - ar) * layout.pitch_um;
        for (std::size_t p = 0; p < pixels.size(); ++p) {
            const auto row = static_cast<double>(pixels[p] / grid_.width_px);
            const auto col = static_cast<double>(pixels[p] % grid_.width_px);
            const double x = (col - grid_.center_x_px) * grid_.pixel_pitch_um;
            const double y = (grid_.center_y_px - row) * grid_.pixel_pitch_um;
            const double d2 = (x - ax) * (x - ax) + (y - ay) * (y - ay);
            bumps_(static_cast<Eigen::Index>(p), i) = std::exp(-d2 * inv_two_sigma2);
        }
    }
}

Eigen::VectorXd DmPlant::gains(int k, PlantPhase phase) const
{
    if (config_.drift && phase == PlantPhase::control && k >= config_.drift->onset) {
        return config_.drift->gains;
    }
    return Eigen::VectorXd::Ones(actuator_count());
}

Eigen::VectorXd DmPlant::masked_response(const Eigen::VectorXd& u, int k, PlantPhase phase) const
{
    if (u.size() != actuator_count()) {
        throw DimensionError("actuate: expected " + std::to_string(actuator_count()) + " voltages, got " +
                             std::to_string(u.size()));
    }
    if (k < 0) {
        throw DomainError("actuate: iteration index must be >= 0");
    }
    const Eigen::VectorXd b = lift(u, config_.theta_true);
    const Eigen::VectorXd gain = gains(k, phase);

    Eigen::VectorXd p(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        double coupling = 0.0;
        for (int j : neighbors_[static_cast<std::size_t>(i)]) {
            coupling += b[j];
        }
        p[i] = config_.stroke_um * gain[i] * b[i] * (1.0 + config_.coupling_gamma * coupling);
    }

    Eigen::VectorXd values = bumps_ * p;
    if (config_.noise_sigma_um > 0.0) {
        std::seed_seq seq{static_cast<std::uint32_t>(config_.seed & 0xffffffffu),
                          static_cast<std::uint32_t>(config_.seed >> 32), static_cast<std::uint32_t>(phase),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> noise(0.0, config_.noise_sigma_um);
        for (Eigen::Index i = 0; i < values.size(); ++i) {
            values[i] += noise(rng);
        }
    }
    return values;
}

SurfaceMap DmPlant::actuate(const Eigen::VectorXd& u, int k, PlantPhase phase) const
{
    return SurfaceMap::from_masked(grid_, masked_response(u, k, phase));
}

void DmPlant::check_basis(const ZernikeBasis& basis) const
{
    if (!(basis.grid() == grid_)) {
        throw DimensionError("plant and basis use different aperture grids");
    }
}

ZernikeCoeffs DmPlant::observe(const ZernikeBasis& basis, const Eigen::VectorXd& u, int k, PlantPhase phase) const
{
    check_basis(basis);
    return basis.fit_masked(masked_response(u, k, phase));
}

Eigen::MatrixXd DmPlant::true_influence(const ZernikeBasis& basis, int k, PlantPhase phase) const
{
    check_basis(basis);
    if (config_.coupling_gamma != 0.0) {
        throw DomainError("true_influence: only defined for a decoupled plant (coupling_gamma = 0)");
    }
    const Eigen::VectorXd scale = config_.stroke_um * gains(k, phase);
    return basis.fit_masked(bumps_ * scale.asDiagonal());
}

}  // namespace adm
