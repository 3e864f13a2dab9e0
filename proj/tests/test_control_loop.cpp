#include "adm/control_loop.hpp"
#include "adm/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace adm;

namespace {

ApertureGrid desk_grid()
{
    return ApertureGrid::centered(64, 64, 60.0, 4400.0 / 60.0);
}

// Small smooth plant whose responses lie (numerically) inside a 66-mode basis.
struct SmoothPlant {
    ApertureGrid grid = ApertureGrid::centered(64, 64, 60.0, 1600.0 / 60.0);
    PlantConfig config;
    SmoothPlant()
    {
        config.layout.grid_rows = 4;
        config.layout.grid_cols = 4;
        config.layout.inactive.clear();
        config.influence_sigma_um = 800.0;
        config.theta_true = 1.0;
        config.noise_sigma_um = 0.0;
    }
};

SurfaceMap random_surface(const ApertureGrid& grid, std::mt19937_64& rng)
{
    std::normal_distribution<double> d(0.0, 0.3);
    SurfaceMap s(grid);
    for (auto& v : s.heights_um.reshaped()) {
        v = d(rng);
    }
    return s;
}

struct Scenario {
    ZernikeBasis basis;
    DmPlant plant;
    TargetShape target;
    EstimatorState estimator;
    BvlsSolution initial;
};

Scenario mismatch_scenario(int n, std::uint64_t seed)
{
    const auto grid = desk_grid();
    PlantConfig pc;
    pc.coupling_gamma = 0.05;
    pc.seed = seed;
    ZernikeBasis basis(grid, n);
    DmPlant plant(pc, grid);
    const int m = plant.actuator_count();
    const ProbeDataset probes = generate_probes(m, 200, 2.0, seed + 1, [&](const Eigen::VectorXd& u, int j) {
        return plant.observe(basis, u, j, PlantPhase::calibration);
    });
    const InitReport init = batch_init(probes);
    TargetShape target = make_target(basis, 12, 1.1829, 1.0);
    BvlsSolution initial = solve_bvls(init.L0_hat, target.z_D, BoxBounds::unit(m));
    EstimatorState est = EstimatorState::init(init.L0_hat, 1e-2, 0.98, EstimatorForm::factored);
    return {std::move(basis), std::move(plant), std::move(target), std::move(est), std::move(initial)};
}

}  // namespace

TEST_CASE("rms error trivial cases")
{
    const auto grid = desk_grid();
    std::mt19937_64 rng(1);
    const SurfaceMap a = random_surface(grid, rng);
    const RmsError same = rms_error(a, a, 0.85);
    CHECK(same.global == 0.0);
    CHECK(same.central == 0.0);

    SurfaceMap shifted = a;
    shifted.heights_um.array() -= 0.37;
    const RmsError off = rms_error(shifted, a, 0.5);
    CHECK(off.global == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(off.central == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("rms error matches a two-pass oracle")
{
    const auto grid = ApertureGrid::centered(41, 37, 33.0, 10.0);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const SurfaceMap p = random_surface(grid, rng);
        const SurfaceMap d = random_surface(grid, rng);
        const double crop = std::uniform_real_distribution<double>(0.3, 1.0)(rng);

        std::vector<double> all;
        std::vector<double> central;
        for (int r = 0; r < grid.height_px; ++r) {
            for (int c = 0; c < grid.width_px; ++c) {
                const double dx = c - grid.center_x_px;
                const double dy = r - grid.center_y_px;
                const double rad = std::sqrt(dx * dx + dy * dy);
                const double e = p.heights_um(r, c) - d.heights_um(r, c);
                if (rad <= grid.radius_px()) {
                    all.push_back(e);
                }
                if (rad <= crop * grid.radius_px()) {
                    central.push_back(e);
                }
            }
        }
        auto rms = [](const std::vector<double>& v) {
            double mean_sq = 0.0;
            for (double x : v) {
                mean_sq += x * x / static_cast<double>(v.size());
            }
            return std::sqrt(mean_sq);
        };
        const RmsError got = rms_error(p, d, crop);
        CHECK(got.global == doctest::Approx(rms(all)).epsilon(1e-12));
        CHECK(got.central == doctest::Approx(rms(central)).epsilon(1e-12));
        CHECK(rms_error(p, d, 1.0).central == got.global);
    }
}

TEST_CASE("rms error preconditions")
{
    const auto grid = ApertureGrid::centered(20, 20, 18.0, 1.0);
    const SurfaceMap s(grid);
    CHECK_THROWS_AS(rms_error(s, s, 0.0), DomainError);
    CHECK_THROWS_AS(rms_error(s, s, 1.5), DomainError);
    // No pixel center lies within 0.01 * 9 px of the center of an even grid.
    CHECK_THROWS_AS(rms_error(s, s, 0.01), DomainError);
    CHECK_THROWS_AS(rms_error(s, SurfaceMap(ApertureGrid::centered(20, 20, 16.0, 1.0)), 0.5), DimensionError);
}

TEST_CASE("target construction hits the requested peak-to-valley")
{
    const ZernikeBasis basis(desk_grid(), 28);
    const TargetShape t = make_target(basis, parse_mode_name("Z4^2"), 1.1829, 0.75);
    CHECK(peak_to_valley(basis.synthesize(t.z_D)) == doctest::Approx(1.1829).epsilon(1e-12));
    CHECK(t.z_D[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK((t.z_D.array() != 0.0).count() == 2);
    CHECK(t.description.find("Z4^2") != std::string::npos);
    CHECK_THROWS_AS(make_target(basis, 1, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(make_target(basis, 29, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(make_target(basis, 12, -1.0, 0.0), DomainError);
}

TEST_CASE("exact model corrects an in-range target in one step")
{
    const SmoothPlant sp;
    const ZernikeBasis basis(sp.grid, 66);
    const DmPlant plant(sp.config, sp.grid);
    const int m = plant.actuator_count();
    const Eigen::MatrixXd L = plant.true_influence(basis, 0);
    Eigen::VectorXd b_true(m);
    for (int i = 0; i < m; ++i) {
        b_true[i] = 0.25 + 0.5 * ((i * 5) % m) / static_cast<double>(m);
    }
    TargetShape target{L * b_true, "in range"};
    LoopConfig cfg;
    cfg.iterations = 3;
    cfg.theta_assumed = 1.0;
    const BvlsSolution initial = solve_bvls(L, target.z_D, BoxBounds::unit(m));
    const LoopResult r =
        run_loop(plant, basis, target, EstimatorState::init(L, 1e-2, 0.98, EstimatorForm::factored), initial, cfg);
    CHECK(r.records[1].rms_central <= 1e-6);
    CHECK(r.records[0].rms_central <= 1e-6);
    CHECK(r.records[0].epsilon_norm <= 1e-9);
}

TEST_CASE("zero target drives every voltage to zero")
{
    PlantConfig pc;
    pc.noise_sigma_um = 0.0;
    const auto grid = desk_grid();
    const ZernikeBasis basis(grid, 28);
    const DmPlant plant(pc, grid);
    const Eigen::MatrixXd L = plant.true_influence(basis, 0);
    const TargetShape target{ZernikeCoeffs::Zero(28), "flat"};
    LoopConfig cfg;
    cfg.iterations = 5;
    const LoopResult r = run_loop(plant, basis, target,
                                  EstimatorState::init(L, 1e-2, 0.98, EstimatorForm::factored),
                                  solve_bvls(L, target.z_D, BoxBounds::unit(140)), cfg);
    for (const auto& rec : r.records) {
        CHECK(rec.u.isZero(0.0));
        CHECK(rec.rms_global == 0.0);
        CHECK(rec.rms_central == 0.0);
    }
}

TEST_CASE("loop invariants on the mismatch scenario")
{
    Scenario s = mismatch_scenario(45, 3);
    LoopConfig cfg;
    cfg.iterations = 12;
    cfg.theta_assumed = 2.0;
    cfg.record_checkpoints = true;
    int sink_calls = 0;
    const LoopResult r = run_loop(s.plant, s.basis, s.target, s.estimator, s.initial, cfg,
                                  [&](const IterationRecord& rec) { CHECK(rec.k == sink_calls++); });
    CHECK(sink_calls == 12);
    REQUIRE(r.records.size() == 12);

    int best = 0;
    for (const auto& rec : r.records) {
        CHECK((rec.u.array() >= 0.0).all());
        CHECK((rec.u.array() <= 1.0).all());
        CHECK(std::isfinite(rec.rms_global));
        CHECK(std::isfinite(rec.epsilon_norm));
        REQUIRE(rec.checkpoint);
        const auto& cp = *rec.checkpoint;
        CHECK(cp.before.updates() == rec.k);
        const double eps = (cp.z_next - cp.before.predict(cp.b)).norm();
        CHECK(rec.epsilon_norm == doctest::Approx(eps).epsilon(1e-12));
        if (rec.rms_central < r.records[static_cast<std::size_t>(best)].rms_central) {
            best = rec.k;
        }
    }
    CHECK(r.best_index == best);
    CHECK(rms_error(r.best_produced, r.desired, cfg.crop_fraction).central ==
          r.records[static_cast<std::size_t>(best)].rms_central);
    CHECK(r.final_state.updates() == 12);

    // Bit-identical replay.
    const LoopResult again = run_loop(s.plant, s.basis, s.target, s.estimator, s.initial, cfg);
    for (std::size_t k = 0; k < r.records.size(); ++k) {
        CHECK(again.records[k].u == r.records[k].u);
        CHECK(again.records[k].rms_central == r.records[k].rms_central);
        CHECK(again.records[k].epsilon_norm == r.records[k].epsilon_norm);
    }
}

TEST_CASE("frozen model keeps its initial estimate and input")
{
    Scenario s = mismatch_scenario(28, 4);
    LoopConfig cfg;
    cfg.iterations = 6;
    cfg.theta_assumed = 2.0;
    cfg.adapt = false;
    const LoopResult r = run_loop(s.plant, s.basis, s.target, s.estimator, s.initial, cfg);
    CHECK(r.final_state.x_hat() == s.estimator.x_hat());
    CHECK(r.final_state.updates() == 0);
    for (const auto& rec : r.records) {
        CHECK(rec.b == s.initial.b_star);
        CHECK(rec.epsilon_norm > 0.0);
    }
}

TEST_CASE("exact linear model: frozen and adaptive runs agree")
{
    const SmoothPlant sp;
    const ZernikeBasis basis(sp.grid, 66);
    const DmPlant plant(sp.config, sp.grid);
    const Eigen::MatrixXd L = plant.true_influence(basis, 0);
    const TargetShape target{L * Eigen::VectorXd::Constant(16, 0.4), "flat piston"};
    LoopConfig cfg;
    cfg.iterations = 4;
    cfg.theta_assumed = 1.0;
    const auto est = EstimatorState::init(L, 1e-2, 0.98, EstimatorForm::factored);
    const auto init = solve_bvls(L, target.z_D, BoxBounds::unit(16));
    const LoopResult adaptive = run_loop(plant, basis, target, est, init, cfg);
    cfg.adapt = false;
    const LoopResult frozen = run_loop(plant, basis, target, est, init, cfg);
    CHECK(adaptive.records[adaptive.best_index].rms_central < 1e-6);
    CHECK(frozen.records[frozen.best_index].rms_central < 1e-6);
}

TEST_CASE("loop preconditions")
{
    Scenario s = mismatch_scenario(15, 5);
    LoopConfig cfg;
    cfg.iterations = 0;
    CHECK_THROWS_AS(run_loop(s.plant, s.basis, s.target, s.estimator, s.initial, cfg), DomainError);
    cfg = LoopConfig{};
    cfg.crop_fraction = 0.0;
    CHECK_THROWS_AS(run_loop(s.plant, s.basis, s.target, s.estimator, s.initial, cfg), DomainError);
    cfg = LoopConfig{};
    TargetShape wrong{ZernikeCoeffs::Zero(10), "short"};
    CHECK_THROWS_AS(run_loop(s.plant, s.basis, wrong, s.estimator, s.initial, cfg), DimensionError);
}
