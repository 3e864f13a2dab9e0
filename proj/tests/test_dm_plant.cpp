#include "adm/dm_plant.hpp"
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

PlantConfig quiet(double theta = kDefaultTheta)
{
    PlantConfig c;
    c.theta_true = theta;
    c.noise_sigma_um = 0.0;
    return c;
}

Eigen::VectorXd random_u(std::mt19937_64& rng, Eigen::Index m, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(0.0, hi);
    Eigen::VectorXd u(m);
    for (auto& v : u) {
        v = d(rng);
    }
    return u;
}

}  // namespace

TEST_CASE("actuator layout")
{
    const ActuatorLayout layout;
    CHECK(layout.count() == 140);
    CHECK_FALSE(layout.is_active(0, 0));
    CHECK_FALSE(layout.is_active(11, 11));
    CHECK(layout.is_active(0, 1));
    CHECK(layout.index_of(0, 1) == 0);
    CHECK(layout.index_of(1, 0) == 10);
    CHECK(layout.index_of(11, 11) == -1);
    CHECK(ActuatorLayout::corners_removed(12, 12, 400.0) == layout);

    ActuatorLayout bad = layout;
    bad.inactive.push_back({12, 0});
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("lift and control input")
{
    Eigen::VectorXd u(3);
    u << 0.0, 0.5, 1.0;
    const Eigen::VectorXd b = lift(u, 1.742);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == doctest::Approx(std::exp(1.742 * std::log(0.5))).epsilon(1e-15));
    CHECK(b[2] == 1.0);

    u[1] = 1.0 + 1e-12;
    CHECK_THROWS_AS(lift(u, 1.742), DomainError);
    u[1] = std::nan("");
    CHECK_THROWS_AS(lift(u, 1.742), DomainError);

    ControlInput in(Eigen::VectorXd::Constant(2, 0.25), 2.0);
    CHECK(in.b().isApprox(Eigen::VectorXd::Constant(2, 0.0625)));
    in.set_theta(1.0);
    CHECK(in.b().isApprox(Eigen::VectorXd::Constant(2, 0.25)));
    CHECK_THROWS_AS(in.set_u(Eigen::VectorXd::Constant(2, -0.1)), DomainError);
    CHECK(in.u()[0] == 0.25);
}

TEST_CASE("zero input gives a flat surface or pure noise")
{
    const auto grid = desk_grid();
    const DmPlant flat(quiet(), grid);
    CHECK(flat.actuate(Eigen::VectorXd::Zero(140), 0).heights_um.isZero(0.0));

    PlantConfig noisy = quiet();
    noisy.noise_sigma_um = 0.01;
    const DmPlant plant(noisy, grid);
    const Eigen::VectorXd v = plant.actuate(Eigen::VectorXd::Zero(140), 3).masked_values();
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
    CHECK(std::abs(mean) < 5.0 * 0.01 / std::sqrt(static_cast<double>(v.size())));
    CHECK(sd == doctest::Approx(0.01).epsilon(0.05));

    const SurfaceMap s = plant.actuate(Eigen::VectorXd::Zero(140), 3);
    for (int r = 0; r < grid.height_px; ++r) {
        for (int c = 0; c < grid.width_px; ++c) {
            if (!grid.in_aperture(r, c)) {
                CHECK(s.heights_um(r, c) == 0.0);
            }
        }
    }
}

TEST_CASE("single actuator peak equals the stroke")
{
    // Pixel grid whose centers land exactly on actuator centers: pitch 400 / 8 px.
    const ApertureGrid grid = ApertureGrid::centered(97, 97, 97.0, 50.0);
    PlantConfig cfg = quiet();
    cfg.stroke_um = 1.7;
    const DmPlant plant(cfg, grid);
    const int i = cfg.layout.index_of(3, 5);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(140);
    u[i] = 1.0;
    const SurfaceMap s = plant.actuate(u, 0);
    // actuator (3, 5) sits at x = -0.5 * 400, y = 2.5 * 400; center pixel is 48
    const int col = 48 - 4;
    const int row = 48 - 20;
    REQUIRE(grid.in_aperture(row, col));
    CHECK(s.heights_um(row, col) == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(s.heights_um.maxCoeff() == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("linear plant obeys superposition")
{
    const DmPlant plant(quiet(1.0), desk_grid());
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd u1 = random_u(rng, 140, 0.5);
        const Eigen::VectorXd u2 = random_u(rng, 140, 0.4);
        const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const Eigen::VectorXd lhs = plant.actuate(alpha * u1 + u2, 0).masked_values();
        const Eigen::VectorXd rhs =
            alpha * plant.actuate(u1, 0).masked_values() + plant.actuate(u2, 0).masked_values();
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("observe matches the column-probe oracle on a linear plant")
{
    const auto grid = desk_grid();
    const ZernikeBasis basis(grid, 28);
    const DmPlant plant(quiet(1.0), grid);
    Eigen::MatrixXd L(28, 140);
    for (int i = 0; i < 140; ++i) {
        L.col(i) = plant.observe(basis, Eigen::VectorXd::Unit(140, i), 0);
    }
    CHECK(plant.observe(basis, Eigen::VectorXd::Zero(140), 0).isZero(0.0));
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd u = random_u(rng, 140);
        const Eigen::VectorXd z = plant.observe(basis, u, 0);
        CHECK((z - L * u).norm() <= 1e-10 * z.norm());
    }
    CHECK((plant.true_influence(basis, 0) - L).norm() <= 1e-12 * L.norm());
}

TEST_CASE("decoupled consistency with true_influence")
{
    const auto grid = desk_grid();
    const ZernikeBasis basis(grid, 45);
    PlantConfig cfg = quiet();
    cfg.drift = DriftSchedule::block_step(cfg.layout, 2, 4, 4, 3, 3, 0.9);
    const DmPlant plant(cfg, grid);
    std::mt19937_64 rng(21);
    for (int k : {0, 1, 2, 5}) {
        const Eigen::VectorXd u = random_u(rng, 140);
        const Eigen::VectorXd z = plant.observe(basis, u, k);
        const Eigen::VectorXd pred = plant.true_influence(basis, k) * lift(u, cfg.theta_true);
        CHECK((z - pred).norm() <= 1e-9 * z.norm());
    }
}

TEST_CASE("stroke scales every influence column")
{
    const auto grid = desk_grid();
    const ZernikeBasis basis(grid, 21);
    PlantConfig a = quiet();
    PlantConfig b = quiet();
    b.stroke_um = 2.0 * a.stroke_um;
    const Eigen::MatrixXd La = DmPlant(a, grid).true_influence(basis, 0);
    const Eigen::MatrixXd Lb = DmPlant(b, grid).true_influence(basis, 0);
    for (Eigen::Index j = 0; j < La.cols(); ++j) {
        CHECK(Lb.col(j).norm() == doctest::Approx(2.0 * La.col(j).norm()).epsilon(1e-14));
    }
}

TEST_CASE("full-stroke surface stays within the stroke scale")
{
    const auto grid = desk_grid();
    const ZernikeBasis basis(grid, 66);
    const DmPlant plant(quiet(), grid);
    const Eigen::VectorXd z = plant.observe(basis, Eigen::VectorXd::Ones(140), 0);
    const double pv = peak_to_valley(basis.synthesize(z));
    const double mean_height = z[0];
    MESSAGE("u = 1: piston " << mean_height << " um, P-V " << pv << " um");
    // Overlapping bumps stack, so the mean exceeds one stroke, but only by the overlap factor.
    CHECK(mean_height > plant.config().stroke_um);
    CHECK(mean_height < 2.0 * M_PI * std::pow(0.85, 2) * plant.config().stroke_um * 1.01);
    CHECK(pv < mean_height);
}

TEST_CASE("coupling raises deflection only where neighbors are active")
{
    const auto grid = desk_grid();
    PlantConfig off = quiet();
    PlantConfig on = quiet();
    on.coupling_gamma = 0.2;
    const DmPlant a(off, grid);
    const DmPlant b(on, grid);
    Eigen::VectorXd single = Eigen::VectorXd::Zero(140);
    single[50] = 0.8;
    CHECK((a.actuate(single, 0).heights_um - b.actuate(single, 0).heights_um).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd pair = single;
    pair[51] = 0.8;
    const double lifted = std::pow(0.8, kDefaultTheta);
    const Eigen::VectorXd diff = b.actuate(pair, 0).masked_values() - a.actuate(pair, 0).masked_values();
    const Eigen::VectorXd expected =
        0.2 * lifted * (a.actuate(pair, 0).masked_values());
    CHECK((diff - expected).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(b.true_influence(ZernikeBasis(grid, 10), 0), DomainError);
}

TEST_CASE("drift applies from onset in the control phase only")
{
    const auto grid = desk_grid();
    PlantConfig cfg = quiet();
    cfg.drift = DriftSchedule::block_step(cfg.layout, 4, 5, 5, 2, 2, 1.1);
    const DmPlant plant(cfg, grid);
    CHECK((cfg.drift->gains.array() != 1.0).count() == 4);
    CHECK(plant.gains(3, PlantPhase::control).isOnes(0.0));
    CHECK(plant.gains(4, PlantPhase::control) == cfg.drift->gains);
    CHECK(plant.gains(40, PlantPhase::calibration).isOnes(0.0));

    const Eigen::VectorXd u = Eigen::VectorXd::Constant(140, 0.6);
    const SurfaceMap before = plant.actuate(u, 3);
    const SurfaceMap after = plant.actuate(u, 4);
    CHECK(after.heights_um.sum() > before.heights_um.sum());
    CHECK(plant.actuate(u, 9, PlantPhase::calibration).heights_um == before.heights_um);
}

TEST_CASE("noise streams are keyed by seed, phase and iteration")
{
    const auto grid = desk_grid();
    PlantConfig cfg;
    cfg.seed = 99;
    const DmPlant plant(cfg, grid);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(140, 0.3);

    // Call order does not matter.
    const SurfaceMap k5 = plant.actuate(u, 5);
    const SurfaceMap k2 = plant.actuate(u, 2);
    CHECK(plant.actuate(u, 5).heights_um == k5.heights_um);
    CHECK(DmPlant(cfg, grid).actuate(u, 2).heights_um == k2.heights_um);
    CHECK(k5.heights_um != k2.heights_um);
    CHECK(plant.actuate(u, 5, PlantPhase::calibration).heights_um != k5.heights_um);

    cfg.seed = 100;
    CHECK(DmPlant(cfg, grid).actuate(u, 5).heights_um != k5.heights_um);
}

TEST_CASE("plant preconditions")
{
    const auto grid = desk_grid();
    const DmPlant plant(PlantConfig{}, grid);
    CHECK_THROWS_AS(plant.actuate(Eigen::VectorXd::Zero(139), 0), DimensionError);
    CHECK_THROWS_AS(plant.actuate(Eigen::VectorXd::Constant(140, 1.5), 0), DomainError);
    CHECK_THROWS_AS(plant.actuate(Eigen::VectorXd::Zero(140), -1), DomainError);
    CHECK_THROWS_AS(plant.observe(ZernikeBasis(ApertureGrid::centered(64, 64, 50.0, 88.0), 6),
                                  Eigen::VectorXd::Zero(140), 0),
                    DimensionError);

    PlantConfig bad;
    bad.theta_true = 0.0;
    CHECK_THROWS_AS(DmPlant(bad, grid), DomainError);
    bad = PlantConfig{};
    bad.noise_sigma_um = -1.0;
    CHECK_THROWS_AS(DmPlant(bad, grid), DomainError);
    bad = PlantConfig{};
    bad.drift = DriftSchedule{0, Eigen::VectorXd::Ones(3)};
    CHECK_THROWS_AS(DmPlant(bad, grid), DimensionError);
}
