#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "deadcore/errors.hpp"
#include "deadcore/oracles.hpp"

using namespace deadcore;
using namespace deadcore::oracles;

TEST_CASE("p = 2, lambda0 = 2 in 1D gives (|x| - 1)_+^2") {
    // Closed-form radial profile in 1D: Theta = 1, shell width 1.
    RadialSpec s;
    CHECK(theta_constant(1, 2.0, 2.0) == doctest::Approx(1.0));
    CHECK(shell_width(s) == doctest::Approx(1.0));
    CHECK(dead_core_radius(s) == doctest::Approx(1.0));
    for (double x : {-2.0, -1.5, -1.0, -0.3, 0.0, 0.7, 1.0, 1.25, 2.0}) {
        const double expected = std::pow(std::max(std::abs(x) - 1.0, 0.0), 2.0);
        CHECK(dead_core_profile(s, {x, 0.0}) == doctest::Approx(expected));
    }
}

TEST_CASE("1D profile solves (|u'|^{p-2} u')' = lambda0 on its positive set") {
    // second difference of the flux, checked off the free boundary.
    for (double p : {2.0, 3.0, 4.0, 8.0}) {
        RadialSpec s;
        s.p = p;
        s.lambda0 = 1.5;
        s.radius = 3.0;
        const double r0 = dead_core_radius(s);
        const double dx = 1e-4;
        auto flux = [&](double x) {
            const double du = (dead_core_profile(s, {x + dx / 2, 0.0}) - dead_core_profile(s, {x - dx / 2, 0.0})) / dx;
            return std::pow(std::abs(du), p - 2.0) * du;
        };
        for (double x : {r0 + 0.3, r0 + 0.8, 0.5 * (r0 + s.radius)}) {
            const double div = (flux(x + dx) - flux(x - dx)) / (2.0 * dx);
            CHECK(div == doctest::Approx(s.lambda0).epsilon(1e-4));
        }
        CHECK(dead_core_profile(s, {s.radius, 0.0}) == doctest::Approx(s.kappa));
        CHECK(dead_core_profile(s, {0.5 * r0, 0.0}) == 0.0);
    }
}

TEST_CASE("shell width tends to kappa as p grows") {
    RadialSpec s;
    double previous_gap = 1e9;
    for (double p : {4.0, 16.0, 64.0, 1024.0}) {
        s.p = p;
        const double gap = std::abs(shell_width(s) - s.kappa);
        CHECK(gap < previous_gap);
        previous_gap = gap;
    }
    CHECK(previous_gap < 1e-2);
}

TEST_CASE("missing dead core raises NumericalError") {
    RadialSpec s;
    s.radius = 0.5;
    CHECK_THROWS_AS(dead_core_radius(s), NumericalError);
    CHECK_THROWS_AS(limit_radial_profile(0.5, 1.0, {0.0, 0.0}), NumericalError);
}

TEST_CASE("limit profile is the distance beyond R - kappa") {
    CHECK(limit_radial_profile(2.0, 1.0, {1.5, 0.0}) == doctest::Approx(0.5));
    CHECK(limit_radial_profile(2.0, 1.0, {0.6, 0.8}) == 0.0);
    CHECK(limit_radial_profile(2.0, 0.5, {0.0, 2.0}) == doctest::Approx(0.5));
    CHECK(limit_radial_profile(2.0, 1.0, {3.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
}

TEST_CASE("gradient-constraint solution on (-1, 4)") {
    CHECK(gradient_constraint_1d(-1.0) == doctest::Approx(1.0));
    CHECK(gradient_constraint_1d(0.0) == 0.0);
    CHECK(gradient_constraint_1d(4.0) == doctest::Approx(-1.0));
    CHECK(gradient_constraint_1d(2.0) == doctest::Approx(-0.5));
    CHECK(gradient_constraint_1d(-0.5) == doctest::Approx(0.5));
    // slope -1 where u > 0 (chi = |u'|), slope -1/4 < 1 where u < 0.
    const double d = 1e-6;
    CHECK((gradient_constraint_1d(-0.4 + d) - gradient_constraint_1d(-0.4 - d)) / (2 * d) == doctest::Approx(-1.0));
    CHECK((gradient_constraint_1d(1.0 + d) - gradient_constraint_1d(1.0 - d)) / (2 * d) == doctest::Approx(-0.25));
    CHECK_THROWS_AS(gradient_constraint_1d(4.5), ContractError);
    CHECK_THROWS_AS(gradient_constraint_1d(-1.01), ContractError);
}

TEST_CASE("disk_outside_fraction agrees with Monte Carlo area estimates") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto [rho, r0, d] : {std::tuple{0.1, 1.0, 1.0}, std::tuple{0.3, 1.0, 0.9}, std::tuple{0.5, 0.4, 0.2},
                              std::tuple{0.2, 1.0, 1.15}}) {
        std::size_t inside = 0, outside = 0;
        while (inside < 200000) {
            const double x = u(rng), y = u(rng);
            if (x * x + y * y > 1.0) continue;
            ++inside;
            const double px = d + rho * x, py = rho * y;
            if (px * px + py * py > r0 * r0) ++outside;
        }
        CHECK(disk_outside_fraction(rho, r0, d) == doctest::Approx(double(outside) / double(inside)).epsilon(0.01));
    }
    CHECK(disk_outside_fraction(0.1, 1.0, 0.5) == 0.0);
    CHECK(disk_outside_fraction(0.1, 1.0, 1.5) == 1.0);
    CHECK(disk_outside_fraction(0.1, 0.0, 0.0) == 1.0);
    CHECK(disk_outside_fraction(1e-6, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK_THROWS_AS(disk_outside_fraction(0.0, 1.0, 1.0), ContractError);
}

TEST_CASE("sample_oracle keeps the strip and fills the interior") {
    ProblemSpec s;
    s.dim = 1;
    s.shape = Interval{-2.0, 2.0};
    s.spacing = 0.25;
    s.epsilon = 0.5;
    const GridPtr g = build_grid(s);
    const ScalarField F = sample_field(g, ConstantDatum{7.0});
    const ScalarField u = sample_oracle(LimitRadialOracle{}, F);
    for (NodeIndex y : g->strip_nodes()) CHECK(u[y] == 7.0);
    for (NodeIndex x : g->interior_nodes()) CHECK(u[x] == doctest::Approx(std::max(std::abs(g->point(x)[0]) - 1.0, 0.0)));
    CHECK(std::string(name(OracleSpec{LimitRadialOracle{}})) == "limit_radial");
    CHECK(std::string(name(OracleSpec{DeadCoreOracle{}})) == "dead_core");
    CHECK(std::string(name(OracleSpec{GradientConstraintOracle{}})) == "gradient_constraint_1d");
}
