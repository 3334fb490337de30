#include "deadcore/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include <fmt/core.h>

#include "deadcore/errors.hpp"

namespace deadcore::oracles {
namespace {

double radial_distance(const Point& x, const Point& center, int dim) {
    return dim == 1 ? std::abs(x[0] - center[0]) : std::hypot(x[0] - center[0], x[1] - center[1]);
}

}  // namespace

double theta_constant(int dim, double lambda0, double p) {
    return (p - 1.0) / p * std::pow(lambda0 / static_cast<double>(dim), 1.0 / (p - 1.0));
}

double shell_width(const RadialSpec& spec) {
    const double theta = theta_constant(spec.dim, spec.lambda0, spec.p);
    return std::pow(spec.kappa / theta, (spec.p - 1.0) / spec.p);
}

double dead_core_radius(const RadialSpec& spec) {
    const double width = shell_width(spec);
    if (!(spec.radius > width)) {
        throw NumericalError(fmt::format("no dead core: R = {} does not exceed the shell width {}", spec.radius, width));
    }
    return spec.radius - width;
}

double dead_core_profile(const RadialSpec& spec, const Point& x) {
    const double r0 = dead_core_radius(spec);
    const double t = radial_distance(x, spec.center, spec.dim) - r0;
    if (t <= 0.0) return 0.0;
    return theta_constant(spec.dim, spec.lambda0, spec.p) * std::pow(t, spec.p / (spec.p - 1.0));
}

double limit_radial_profile(double radius, double kappa, const Point& x, const Point& center) {
    if (kappa > radius) {
        throw NumericalError(fmt::format("kappa = {} exceeds R = {}: the limit profile has no dead core", kappa, radius));
    }
    const double t = std::hypot(x[0] - center[0], x[1] - center[1]) - (radius - kappa);
    return t > 0.0 ? t : 0.0;
}

double gradient_constraint_1d(double x) {
    if (!(x >= -1.0 && x <= 4.0)) throw ContractError(fmt::format("x = {} outside [-1, 4]", x));
    return x <= 0.0 ? -x : -0.25 * x;
}

const char* name(const OracleSpec& oracle) noexcept {
    switch (oracle.index()) {
        case 0: return "gradient_constraint_1d";
        case 1: return "dead_core";
        default: return "limit_radial";
    }
}

ScalarField sample_oracle(const OracleSpec& oracle, const ScalarField& boundary) {
    const auto& g = boundary.grid();
    ScalarField out = boundary;
    for (NodeIndex x : g.interior_nodes()) {
        const Point p = g.point(x);
        out[x] = std::visit(
            [&](const auto& o) -> double {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, GradientConstraintOracle>) {
                    return gradient_constraint_1d(p[0]);
                } else if constexpr (std::is_same_v<T, DeadCoreOracle>) {
                    return dead_core_profile(o.spec, p);
                } else {
                    return limit_radial_profile(o.radius, o.kappa, p, o.center);
                }
            },
            oracle);
    }
    return out;
}

double disk_outside_fraction(double rho, double r0, double d) {
    if (!(rho > 0.0) || r0 < 0.0 || d < 0.0) throw ContractError("disk_outside_fraction needs rho > 0, r0 >= 0, d >= 0");
    const double pi = std::acos(-1.0);
    double overlap;
    if (d >= r0 + rho) {
        overlap = 0.0;
    } else if (d + rho <= r0) {
        overlap = pi * rho * rho;
    } else if (d + r0 <= rho) {
        overlap = pi * r0 * r0;
    } else {
        // Lens = two circular segments cut by the common chord of half-length
        // c; a segment with half-angle t has area r^2 (t - sin(2t) / 2).
        const double k = (-d + rho + r0) * (d + rho - r0) * (d - rho + r0) * (d + rho + r0);
        const double c = 0.5 * std::sqrt(std::max(0.0, k)) / d;
        auto segment = [c](double r, double offset) {
            const double t = std::atan2(c, offset);
            if (t < 1e-3) return r * r * (2.0 * t * t * t / 3.0 - 2.0 * std::pow(t, 5) / 15.0);
            return r * r * (t - 0.5 * std::sin(2.0 * t));
        };
        overlap = segment(rho, (d * d + rho * rho - r0 * r0) / (2.0 * d)) + segment(r0, (d * d + r0 * r0 - rho * rho) / (2.0 * d));
    }
    return 1.0 - overlap / (pi * rho * rho);
}

}  // namespace deadcore::oracles
