#pragma once

#include <variant>

#include "deadcore/lattice.hpp"

namespace deadcore::oracles {

/// Dead-core problem on the ball B_R(center): -Delta_p u + lambda0 chi{u>0} = 0,
/// u = kappa on the boundary sphere.
struct RadialSpec {
    int dim = 1;
    double radius = 2.0;
    double kappa = 1.0;
    double lambda0 = 2.0;
    double p = 2.0;
    Point center{0.0, 0.0};
};

/// ((p-1)/p) * (lambda0 / N)^{1/(p-1)}. Also the growth constant in the
/// non-degeneracy bound sup_{B_r} u >= C0 r^{p/(p-1)}.
double theta_constant(int dim, double lambda0, double p);

/// (kappa / Theta)^{(p-1)/p}: width of the positivity shell.
double shell_width(const RadialSpec& spec);

/// Dead-core radius R - shell_width. Throws NumericalError when the
/// compatibility condition R > shell_width fails (no dead core).
double dead_core_radius(const RadialSpec& spec);

/// Theta * (|x - center| - r0)_+^{p/(p-1)}. Exact for dim = 1.
double dead_core_profile(const RadialSpec& spec, const Point& x);

/// (|x - center| - (R - kappa))_+, the p -> infinity limit of the profile.
/// Throws NumericalError when kappa > R (no dead core).
double limit_radial_profile(double radius, double kappa, const Point& x, const Point& center = {0.0, 0.0});

/// Solution of max{-u'', chi{u>0} - |u'|} = 0 on (-1, 4), u(-1) = 1,
/// u(4) = -1: -x on [-1, 0], -x/4 on [0, 4]. Throws ContractError outside
/// [-1, 4].
double gradient_constraint_1d(double x);

/// Exact positive-phase density for the 2D limit profile: the fraction of
/// the disk B_rho(x0), |x0 - center| = d, lying outside the dead disk of
/// radius r0, from the circle-circle intersection area.
double disk_outside_fraction(double rho, double r0, double d);

struct GradientConstraintOracle {};
struct DeadCoreOracle {
    RadialSpec spec;
};
struct LimitRadialOracle {
    double radius = 2.0;
    double kappa = 1.0;
    Point center{0.0, 0.0};
};
using OracleSpec = std::variant<GradientConstraintOracle, DeadCoreOracle, LimitRadialOracle>;

const char* name(const OracleSpec& oracle) noexcept;

/// Oracle values on interior nodes; strip nodes copy `boundary`.
ScalarField sample_oracle(const OracleSpec& oracle, const ScalarField& boundary);

}  // namespace deadcore::oracles
