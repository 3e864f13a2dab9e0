#include "adm/control_loop.hpp"

#include "adm/errors.hpp"

#include <cmath>
#include <string>

namespace adm {

TargetShape make_target(const ZernikeBasis& basis, int noll_index, double pv_um, double piston_um)
{
    if (noll_index < 2 || noll_index > basis.n_modes()) {
        throw DomainError("target: Noll index " + std::to_string(noll_index) + " must be in [2, " +
                          std::to_string(basis.n_modes()) + "]");
    }
    if (!(pv_um >= 0.0)) {
        throw DomainError("target: requested P-V must be >= 0");
    }
    ZernikeCoeffs unit = ZernikeCoeffs::Zero(basis.n_modes());
    unit[noll_index - 1] = 1.0;
    const double unit_pv = peak_to_valley(basis.synthesize(unit));

    TargetShape t;
    t.z_D = (pv_um / unit_pv) * unit;
    t.z_D[0] += piston_um;
    const auto mode = noll_to_mode(noll_index);
    t.description = "Z" + std::to_string(mode.radial_degree) + "^" + std::to_string(mode.azimuthal) +
                    " (Noll " + std::to_string(noll_index) + ") scaled to P-V " + std::to_string(pv_um) +
                    " um, piston " + std::to_string(piston_um) + " um";
    return t;
}

void LoopConfig::validate() const
{
    if (iterations < 1) {
        throw DomainError("loop: iterations must be >= 1");
    }
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw DomainError("loop: beta must lie in (0, 1]");
    }
    if (!(delta > 0.0)) {
        throw DomainError("loop: delta must be positive");
    }
    if (!(crop_fraction > 0.0 && crop_fraction <= 1.0)) {
        throw DomainError("loop: crop_fraction must lie in (0, 1]");
    }
    if (!(theta_assumed > 0.0)) {
        throw DomainError("loop: theta_assumed must be positive");
    }
}

BvlsSummary summarize(const BvlsSolution& s)
{
    return {s.iterations,
            s.converged,
            s.objective,
            s.kkt_residual,
            static_cast<int>(s.active_lower.size()),
            static_cast<int>(s.active_upper.size())};
}

RmsError rms_error(const SurfaceMap& produced, const SurfaceMap& desired, double crop_fraction)
{
    if (!(produced.grid == desired.grid)) {
        throw DimensionError("rms_error: surfaces are on different grids");
    }
    if (!(crop_fraction > 0.0 && crop_fraction <= 1.0)) {
        throw DomainError("rms_error: crop_fraction must lie in (0, 1]");
    }
    const auto& g = produced.grid;
    double sum_all = 0.0;
    double sum_central = 0.0;
    long count_all = 0;
    long count_central = 0;
    for (int r = 0; r < g.height_px; ++r) {
        for (int c = 0; c < g.width_px; ++c) {
            const double rho = g.normalized_radius(r, c);
            if (rho > 1.0) {
                continue;
            }
            const double e = produced.heights_um(r, c) - desired.heights_um(r, c);
            sum_all += e * e;
            ++count_all;
            if (rho <= crop_fraction) {
                sum_central += e * e;
                ++count_central;
            }
        }
    }
    if (count_all == 0) {
        throw DomainError("rms_error: empty aperture");
    }
    if (count_central == 0) {
        throw DomainError("rms_error: central region is empty; increase crop_fraction");
    }
    return {std::sqrt(sum_all / count_all), std::sqrt(sum_central / count_central)};
}

LoopResult run_loop(const DmPlant& plant, const ZernikeBasis& basis, const TargetShape& target,
                    EstimatorState estimator, const BvlsSolution& initial, const LoopConfig& cfg,
                    const IterationSink& sink)
{
    cfg.validate();
    const Eigen::Index m = plant.actuator_count();
    if (target.z_D.size() != basis.n_modes() || estimator.n() != basis.n_modes() || estimator.m() != m ||
        initial.b_star.size() != m) {
        throw DimensionError("control loop: plant, basis, target, estimator and initial input disagree in size");
    }

    const BoxBounds bounds = BoxBounds::unit(m);
    const SurfaceMap desired = basis.synthesize(target.z_D);

    BvlsSolution solution = initial;
    std::vector<IterationRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.iterations));
    std::optional<SurfaceMap> best_surface;
    int best = 0;

    for (int k = 0; k < cfg.iterations; ++k) {
        IterationRecord rec;
        rec.k = k;
        rec.b = solution.b_star;
        rec.u = voltages_from_b(rec.b, cfg.theta_assumed);
        rec.bvls = summarize(solution);

        const SurfaceMap produced = plant.actuate(rec.u, k, PlantPhase::control);
        const Eigen::VectorXd z_next = basis.fit(produced);

        if (cfg.record_checkpoints) {
            rec.checkpoint = Checkpoint{estimator, rec.b, z_next};
        }

        if (cfg.adapt) {
            try {
                estimator.update(rec.b, z_next);
            } catch (const NumericalError& e) {
                throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
            }
            rec.epsilon_norm = estimator.last_epsilon().norm();
            solution = solve_bvls(estimator.current_L(), target.z_D, bounds, cfg.bvls);
        } else {
            rec.epsilon_norm = (z_next - estimator.predict(rec.b)).norm();
        }

        const RmsError err = rms_error(produced, desired, cfg.crop_fraction);
        rec.rms_global = err.global;
        rec.rms_central = err.central;
        rec.pv_produced = peak_to_valley(produced);

        if (k == 0 || rec.rms_central < records[static_cast<std::size_t>(best)].rms_central) {
            best = k;
            best_surface = produced;
        }
        if (sink) {
            sink(rec);
        }
        records.push_back(std::move(rec));
    }

    return LoopResult{std::move(records), best, desired, std::move(*best_surface), std::move(estimator)};
}

}  // namespace adm
