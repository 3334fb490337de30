#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "deadcore/errors.hpp"
#include "deadcore/fb_analysis.hpp"
#include "deadcore/oracles.hpp"

using namespace deadcore;

namespace {

GridPtr line_grid(double h) {
    ProblemSpec s;
    s.dim = 1;
    s.shape = Interval{-2.0, 2.0};
    s.spacing = h;
    s.epsilon = h;
    return build_grid(s);
}

GridPtr disk_grid(double h) {
    ProblemSpec s;
    s.dim = 2;
    s.shape = Ball{{0.0, 0.0}, 2.0};
    s.spacing = h;
    s.epsilon = h;
    return build_grid(s);
}

ScalarField limit_profile(const GridPtr& g) {
    return sample_function(g, [](const Point& p) { return std::max(std::hypot(p[0], p[1]) - 1.0, 0.0); });
}

}  // namespace

TEST_CASE("free boundary of (|x| - 1)_+ is the four nodes around -1 and 1") {
    const GridPtr g = line_grid(0.1);
    const ScalarField u = limit_profile(g);
    const Positivity pos = positivity_and_boundary(u, default_tol_pos(u));
    REQUIRE(pos.boundary.nodes.size() == 4);
    std::vector<double> xs;
    for (const Point& p : pos.boundary.points(*g)) xs.push_back(p[0]);
    CHECK(xs[0] == doctest::Approx(-1.1));
    CHECK(xs[1] == doctest::Approx(-1.0));
    CHECK(xs[2] == doctest::Approx(1.0));
    CHECK(xs[3] == doctest::Approx(1.1));
    CHECK(pos.boundary.dead_side_points(*g).size() == 2);
    CHECK(default_tol_pos(u) == doctest::Approx(2e-8));
}

TEST_CASE("limit profile has non-degeneracy ratio 1 and unit growth") {
    // sup over B_r(x0) of (|x| - 1)_+ is r - dist(x0, {|x| = 1}).
    const GridPtr g = line_grid(0.01);
    const ScalarField u = limit_profile(g);
    const double radii[] = {0.1, 0.2};
    const NondegeneracyReport nd = nondegeneracy_check(u, radii, 1.0, default_tol_pos(u));
    CHECK(nd.entries.size() == 8);
    CHECK(nd.min_ratio >= 1.0 - 0.01 / 0.1 - 1e-9);
    for (const auto& e : nd.entries) CHECK(e.ratio <= 1.0 + 0.01 / e.radius + 1e-9);
    const GrowthEnvelope env = growth_envelope(u, default_tol_pos(u));
    CHECK(env.c1 == doctest::Approx(1.0));
    CHECK(env.c2 == doctest::Approx(1.0));
    CHECK(lipschitz_seminorm(u) == doctest::Approx(1.0));
}

TEST_CASE("balls leaving the domain are skipped and noted") {
    const GridPtr g = line_grid(0.05);
    const ScalarField u = sample_function(g, [](const Point& p) { return std::max(std::abs(p[0]) - 1.9, 0.0); });
    const double radii[] = {0.5};
    const NondegeneracyReport nd = nondegeneracy_check(u, radii, 1.0, default_tol_pos(u));
    CHECK(nd.entries.empty());
    CHECK(nd.skipped > 0);
    CHECK_FALSE(nd.notes.empty());
}

TEST_CASE("empty free boundary conventions") {
    const GridPtr g = line_grid(0.1);
    const ScalarField u(g, 1.0);
    const double radii[] = {0.2};
    CHECK(nondegeneracy_check(u, radii, 1.0, 1e-8).min_ratio == 0.0);
    CHECK(density_check(u, 0.1, 1e-8) == 1.0);
    CHECK(porosity_estimate(u, radii, 1e-8).zeta == 1.0);
    CHECK_THROWS_AS(growth_envelope(u, 1e-8), ContractError);
}

TEST_CASE("Hausdorff distance is a metric on finite sets") {
    const std::vector<Point> a{{0.0, 0.0}}, b{{1.0, 0.0}, {3.0, 0.0}};
    CHECK(hausdorff(a, b) == doctest::Approx(3.0));
    CHECK(hausdorff(b, b) == 0.0);
    CHECK_THROWS_AS(hausdorff(a, std::vector<Point>{}), ContractError);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::uniform_int_distribution<int> n(1, 12);
    auto random_set = [&] {
        std::vector<Point> s(static_cast<std::size_t>(n(rng)));
        for (Point& p : s) p = {d(rng), d(rng)};
        return s;
    };
    for (int t = 0; t < 200; ++t) {
        const auto x = random_set(), y = random_set(), z = random_set();
        CHECK(hausdorff(x, y) == doctest::Approx(hausdorff(y, x)));
        CHECK(hausdorff(x, z) <= hausdorff(x, y) + hausdorff(y, z) + 1e-12);
        CHECK(hausdorff(x, y) >= 0.0);
    }
}

TEST_CASE("density of the 2D limit profile tracks the circle-intersection oracle") {
    // exact area fraction of B_rho(x0) outside the unit disk.
    const GridPtr g = disk_grid(0.02);
    const ScalarField u = limit_profile(g);
    const double tol = default_tol_pos(u);
    const double rho = 0.2;
    const double measured = density_check(u, rho, tol);
    const FreeBoundary fb = positivity_and_boundary(u, tol).boundary;
    double oracle_min = 1.0;
    for (const Point& p : fb.points(*g))
        oracle_min = std::min(oracle_min, oracles::disk_outside_fraction(rho, 1.0, std::hypot(p[0], p[1])));
    CHECK(measured == doctest::Approx(oracle_min).epsilon(0.05));
    CHECK(oracles::disk_outside_fraction(rho, 1.0, 1.0) >= 0.4);
}

TEST_CASE("porosity of the 1D limit profile is one half") {
    const GridPtr g = line_grid(0.01);
    const ScalarField u = limit_profile(g);
    const double radii[] = {0.1};
    const PorosityReport por = porosity_estimate(u, radii, default_tol_pos(u));
    CHECK(por.zeta == doctest::Approx(0.5));
    CHECK_FALSE(por.degenerate);
    CHECK(por.samples == 4);
}

TEST_CASE("null-set symmetric difference counts disagreeing interior nodes") {
    const GridPtr g = line_grid(0.1);
    const ScalarField a = limit_profile(g);
    ScalarField b = a;
    CHECK(null_set_symdiff(a, b, 1e-8) == 0.0);
    b[*g->find_point({0.0, 0.0})] = 0.5;
    b[*g->find_point({1.5, 0.0})] = 0.0;
    CHECK(null_set_symdiff(a, b, 1e-8) == doctest::Approx(2.0 / 39.0));
}

TEST_CASE("analyze_field bundles the measurements") {
    const GridPtr g = line_grid(0.01);
    const ScalarField u = limit_profile(g);
    AnalysisOptions o;
    o.radii = {0.1, 0.2};
    const AnalysisReport r = analyze_field(u, o, &u);
    CHECK(r.fb_points == 4);
    REQUIRE(r.hausdorff);
    CHECK(*r.hausdorff == 0.0);
    CHECK(r.lipschitz == doctest::Approx(1.0));
    CHECK(r.density_min > 0.4);
}
