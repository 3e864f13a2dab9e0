#include "adm/errors.hpp"
#include "adm/zernike.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace adm;

namespace {

double factorial(int k)
{
    double f = 1.0;
    for (int i = 2; i <= k; ++i) {
        f *= i;
    }
    return f;
}

// Closed-form radial polynomial, independent of the recurrence used by the library.
double radial_explicit(int n, int m, double rho)
{
    m = std::abs(m);
    if ((n - m) % 2 != 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (int s = 0; s <= (n - m) / 2; ++s) {
        const double c = ((s % 2) ? -1.0 : 1.0) * factorial(n - s) /
                         (factorial(s) * factorial((n + m) / 2 - s) * factorial((n - m) / 2 - s));
        sum += c * std::pow(rho, n - 2 * s);
    }
    return sum;
}

double zernike_explicit(ZernikeMode mode, double rho, double phi)
{
    const int n = mode.radial_degree;
    const int m = mode.azimuthal;
    const double norm = (m == 0) ? std::sqrt(n + 1.0) : std::sqrt(2.0 * (n + 1.0));
    const double ang = (m > 0) ? std::cos(m * phi) : (m < 0 ? std::sin(-m * phi) : 1.0);
    return norm * radial_explicit(n, m, rho) * ang;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return (a - b).norm() / std::max(1.0, b.norm());
}

ApertureGrid small_grid()
{
    return ApertureGrid::centered(64, 64, 60.0, 73.0);
}

}  // namespace

TEST_CASE("Noll ordering matches the standard table")
{
    const ZernikeMode expected[] = {{0, 0},  {1, 1},  {1, -1}, {2, 0},  {2, -2}, {2, 2},  {3, -1}, {3, 1},
                                    {3, -3}, {3, 3},  {4, 0},  {4, 2},  {4, -2}, {4, 4},  {4, -4}, {5, 1},
                                    {5, -1}, {5, 3},  {5, -3}, {5, 5},  {5, -5}, {6, 0},  {6, -2}, {6, 2}};
    for (int j = 1; j <= 24; ++j) {
        const auto mode = noll_to_mode(j);
        CHECK(mode == expected[j - 1]);
    }
    for (int j = 1; j <= 600; ++j) {
        CHECK(mode_to_noll(noll_to_mode(j)) == j);
    }
    CHECK_THROWS_AS(noll_to_mode(0), DomainError);
    CHECK_THROWS_AS(mode_to_noll({3, 2}), DomainError);
}

TEST_CASE("mode names")
{
    CHECK(parse_mode_name("Z4^2") == 12);
    CHECK(parse_mode_name("Z4^-2") == 13);
    CHECK(parse_mode_name("Z6^2") == 24);
    CHECK(parse_mode_name("noll:7") == 7);
    CHECK_THROWS_AS(parse_mode_name("Z4^3"), DomainError);
    CHECK_THROWS_AS(parse_mode_name("astig"), DomainError);
}

TEST_CASE("radial recurrence agrees with the closed form")
{
    for (int n = 0; n <= 20; ++n) {
        for (int m = n % 2; m <= n; m += 2) {
            for (double rho : {0.0, 0.13, 0.5, 0.77, 0.999, 1.0}) {
                CHECK(zernike_radial(n, m, rho) == doctest::Approx(radial_explicit(n, m, rho)).epsilon(1e-9));
            }
        }
    }
    // R_n^m(1) = 1 for every admissible pair
    for (int n = 0; n <= 40; ++n) {
        for (int m = n % 2; m <= n; m += 2) {
            CHECK(zernike_radial(n, m, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("piston basis is a single constant column")
{
    const ZernikeBasis basis(small_grid(), 1);
    REQUIRE(basis.n_modes() == 1);
    CHECK(basis.sample_matrix().col(0).isOnes());
}

TEST_CASE("sample matrix matches the closed form and is near-orthonormal on the pixel grid")
{
    const auto grid = small_grid();
    const ZernikeBasis basis(grid, 36);
    const auto& pixels = basis.aperture_pixels();
    const auto P = static_cast<Eigen::Index>(pixels.size());

    Eigen::MatrixXd oracle(P, 36);
    for (Eigen::Index p = 0; p < P; ++p) {
        const double row = static_cast<double>(pixels[static_cast<std::size_t>(p)] / grid.width_px);
        const double col = static_cast<double>(pixels[static_cast<std::size_t>(p)] % grid.width_px);
        const double x = (col - grid.center_x_px) / grid.radius_px();
        const double y = (grid.center_y_px - row) / grid.radius_px();
        for (int j = 0; j < 36; ++j) {
            oracle(p, j) = zernike_explicit(noll_to_mode(j + 1), std::hypot(x, y), std::atan2(y, x));
        }
    }
    const Eigen::MatrixXd gram_oracle = oracle.transpose() * oracle / static_cast<double>(P);
    const Eigen::MatrixXd gram = basis.sample_matrix().transpose() * basis.sample_matrix() / static_cast<double>(P);
    CHECK((gram - gram_oracle).cwiseAbs().maxCoeff() < 1e-10);

    double worst_ratio = 0.0;
    for (int i = 0; i < 36; ++i) {
        for (int j = 0; j < 36; ++j) {
            if (i != j) {
                worst_ratio = std::max(worst_ratio, std::abs(gram(i, j)) / std::sqrt(gram(i, i) * gram(j, j)));
            }
        }
    }
    MESSAGE("max off-diagonal/diagonal Gram ratio: " << worst_ratio);
    CHECK(worst_ratio < 0.05);
}

TEST_CASE("fit recovers exact modes, zeros and synthesized surfaces")
{
    const ZernikeBasis basis(small_grid(), 45);
    for (int j = 0; j < basis.n_modes(); ++j) {
        const SurfaceMap s = SurfaceMap::from_masked(basis.grid(), basis.sample_matrix().col(j));
        const ZernikeCoeffs c = basis.fit(s);
        CHECK(rel_err(c, Eigen::VectorXd::Unit(basis.n_modes(), j)) < 1e-10);
    }
    CHECK(basis.fit(SurfaceMap(basis.grid())).isZero(0.0));
    CHECK(basis.synthesize(ZernikeCoeffs::Zero(45)).heights_um.isZero(0.0));

    const SurfaceMap piston = basis.synthesize(Eigen::VectorXd::Unit(45, 0));
    CHECK(peak_to_valley(piston) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(piston.masked_values().isOnes(1e-12));

    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        ZernikeCoeffs c(45);
        for (auto& v : c) {
            v = normal(rng) * std::pow(10.0, trial % 5 - 2);
        }
        CHECK(rel_err(basis.fit(basis.synthesize(c)), c) < 1e-10 * std::max(1.0, c.norm()));
    }
}

TEST_CASE("fit is linear and deterministic")
{
    const ZernikeBasis basis(small_grid(), 28);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    const auto P = static_cast<Eigen::Index>(basis.aperture_pixels().size());
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd v1(P), v2(P);
        for (Eigen::Index i = 0; i < P; ++i) {
            v1[i] = normal(rng);
            v2[i] = normal(rng);
        }
        const double alpha = normal(rng) * 3.0;
        const SurfaceMap s1 = SurfaceMap::from_masked(basis.grid(), v1);
        const SurfaceMap s2 = SurfaceMap::from_masked(basis.grid(), v2);
        const SurfaceMap combo = SurfaceMap::from_masked(basis.grid(), alpha * v1 + v2);
        const Eigen::VectorXd lhs = basis.fit(combo);
        const Eigen::VectorXd rhs = alpha * basis.fit(s1) + basis.fit(s2);
        CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm()));
    }

    const ZernikeBasis again(small_grid(), 28);
    CHECK(again.sample_matrix() == basis.sample_matrix());
    Eigen::VectorXd v(P);
    for (auto& x : v) {
        x = normal(rng);
    }
    const SurfaceMap s = SurfaceMap::from_masked(basis.grid(), v);
    CHECK(basis.fit(s) == again.fit(s));
}

TEST_CASE("fit residual is non-increasing over nested bases")
{
    const auto grid = small_grid();
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    const auto pixels = grid.aperture_pixels();
    Eigen::VectorXd v(static_cast<Eigen::Index>(pixels.size()));
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const double x = static_cast<double>(pixels[i] % grid.width_px) - grid.center_x_px;
        const double y = static_cast<double>(pixels[i] / grid.width_px) - grid.center_y_px;
        v[static_cast<Eigen::Index>(i)] = std::exp(-(x * x + y * y) / 90.0) + 0.01 * normal(rng);
    }
    const SurfaceMap s = SurfaceMap::from_masked(grid, v);
    double previous = std::numeric_limits<double>::infinity();
    for (int n : {1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 66}) {
        const ZernikeBasis basis(grid, n);
        const double residual = (basis.sample_matrix() * basis.fit(s) - v).norm();
        CHECK(residual <= previous * (1.0 + 1e-12));
        previous = residual;
    }
}

TEST_CASE("basis preconditions and rank deficiency")
{
    CHECK_THROWS_AS(ZernikeBasis(small_grid(), 0), DomainError);
    ApertureGrid tiny = ApertureGrid::centered(5, 5, 5.0, 1.0);
    CHECK_THROWS_AS(ZernikeBasis(tiny, 100), DomainError);
    // 21 symmetric pixel centers cannot separate 21 modes.
    CHECK_THROWS_AS(ZernikeBasis(tiny, 21), NumericalError);

    ApertureGrid bad = ApertureGrid::centered(32, 32, 40.0, 1.0);
    CHECK_THROWS_AS(bad.validate(), DomainError);

    const ZernikeBasis basis(small_grid(), 10);
    CHECK_THROWS_AS(basis.synthesize(ZernikeCoeffs::Zero(9)), DimensionError);
    CHECK_THROWS_AS(basis.fit(SurfaceMap(ApertureGrid::centered(64, 64, 50.0, 73.0))), DimensionError);
}

TEST_CASE("peak to valley")
{
    const auto grid = small_grid();
    SurfaceMap s(grid);
    CHECK(peak_to_valley(s) == 0.0);
    const auto pixels = grid.aperture_pixels();
    s.heights_um.data()[pixels[10]] = -0.5;
    s.heights_um.data()[pixels[200]] = 0.7;
    s.heights_um(0, 0) = 50.0;  // outside the aperture, ignored
    CHECK(peak_to_valley(s) == doctest::Approx(1.2).epsilon(1e-15));

    ApertureGrid empty;
    empty.width_px = 4;
    empty.height_px = 4;
    empty.center_x_px = 0.5;
    empty.center_y_px = 0.5;
    empty.diameter_px = 0.5;
    CHECK_THROWS_AS(peak_to_valley(SurfaceMap(empty)), DomainError);
}

TEST_CASE("full-scale aperture supports 498 modes")
{
    const ZernikeBasis basis(ApertureGrid::centered(400, 400, 398.0, 11.0), 498);
    CHECK(basis.n_modes() == 498);
    CHECK(basis.sample_matrix().cols() == 498);
}
