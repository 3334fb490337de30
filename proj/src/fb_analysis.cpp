#include "deadcore/fb_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "deadcore/errors.hpp"

namespace deadcore {
namespace {

double euclid(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

double min_distance(const Point& x, std::span<const Point> cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& q : cloud) best = std::min(best, euclid(x, q));
    return best;
}

}  // namespace

std::vector<Point> FreeBoundary::points(const GridDomain& grid) const {
    std::vector<Point> out;
    out.reserve(nodes.size());
    for (NodeIndex n : nodes) out.push_back(grid.point(n));
    return out;
}

std::vector<Point> FreeBoundary::dead_side_points(const GridDomain& grid) const {
    std::vector<Point> out;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        if (!positive_side[k]) out.push_back(grid.point(nodes[k]));
    return out;
}

double default_tol_pos(const ScalarField& field) {
    double m = 0.0;
    for (double v : field.values()) m = std::max(m, std::abs(v));
    return 1e-8 * (m + 1.0);
}

Positivity positivity_and_boundary(const ScalarField& field, double tol_pos) {
    if (!(tol_pos >= 0.0)) throw ContractError("tol_pos must be non-negative");
    const auto& g = field.grid();
    Positivity out;
    out.mask.assign(g.size(), 0);
    out.boundary.tol_pos = tol_pos;
    for (NodeIndex x : g.interior_nodes()) out.mask[static_cast<std::size_t>(x)] = field[x] > tol_pos ? 1 : 0;

    for (NodeIndex x : g.interior_nodes()) {
        const auto side = out.mask[static_cast<std::size_t>(x)];
        bool on_fb = false;
        for (int axis = 0; axis < g.dim() && !on_fb; ++axis) {
            for (int dir : {-1, 1}) {
                const auto y = g.axis_neighbor(x, axis, dir);
                if (y && g.is_interior(*y) && out.mask[static_cast<std::size_t>(*y)] != side) {
                    on_fb = true;
                    break;
                }
            }
        }
        if (on_fb) {
            out.boundary.nodes.push_back(x);
            out.boundary.positive_side.push_back(side);
        }
    }
    return out;
}

NondegeneracyReport nondegeneracy_check(const ScalarField& field, std::span<const double> radii, double exponent,
                                        double tol_pos) {
    const auto& g = field.grid();
    const FreeBoundary fb = positivity_and_boundary(field, tol_pos).boundary;
    NondegeneracyReport report;
    report.min_ratio = fb.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (NodeIndex x0 : fb.nodes) {
        const double margin = g.boundary_distance(g.point(x0));
        for (double r : radii) {
            if (!(r > 0.0)) throw ContractError("radii must be positive");
            if (r > margin + 1e-9 * g.spacing()) {
                ++report.skipped;
                continue;
            }
            double sup = -std::numeric_limits<double>::infinity();
            for (NodeIndex y : g.lattice_ball(x0, r)) sup = std::max(sup, field[y]);
            const double ratio = sup / std::pow(r, exponent);
            report.entries.push_back({x0, r, sup, ratio});
            report.min_ratio = std::min(report.min_ratio, ratio);
        }
    }
    if (report.skipped > 0)
        report.notes.push_back(fmt::format("{} (node, radius) pairs skipped: ball reaches past the domain", report.skipped));
    if (report.entries.empty()) report.min_ratio = 0.0;
    return report;
}

double density_check(const ScalarField& field, double rho, double tol_pos) {
    if (!(rho > 0.0)) throw ContractError("rho must be positive");
    const auto& g = field.grid();
    const Positivity pos = positivity_and_boundary(field, tol_pos);
    double best = 1.0;
    for (NodeIndex x0 : pos.boundary.nodes) {
        std::size_t total = 0;
        std::size_t positive = 0;
        for (NodeIndex y : g.lattice_ball(x0, rho)) {
            if (!g.is_interior(y)) continue;
            ++total;
            positive += pos.mask[static_cast<std::size_t>(y)];
        }
        if (total > 0) best = std::min(best, static_cast<double>(positive) / static_cast<double>(total));
    }
    return best;
}

PorosityReport porosity_estimate(const ScalarField& field, std::span<const double> radii, double tol_pos) {
    const auto& g = field.grid();
    const FreeBoundary fb = positivity_and_boundary(field, tol_pos).boundary;
    const std::vector<Point> cloud = fb.points(g);
    PorosityReport report;
    std::vector<Point> local;
    for (std::size_t k = 0; k < fb.nodes.size(); ++k) {
        const Point x = cloud[k];
        for (double r : radii) {
            if (!(r > 0.0)) throw ContractError("radii must be positive");
            // Only cloud points within 2r can constrain a ball of radius <= r centred in B_r(x).
            local.clear();
            for (const Point& q : cloud)
                if (euclid(q, x) <= 2.0 * r) local.push_back(q);
            double best = 0.0;
            for (NodeIndex y : g.lattice_ball(fb.nodes[k], r)) {
                const Point py = g.point(y);
                const double room = std::min(r - euclid(py, x), min_distance(py, local));
                best = std::max(best, room);
            }
            ++report.samples;
            report.zeta = std::min(report.zeta, best / r);
            if (best <= g.spacing() * (1.0 + 1e-9)) report.degenerate = true;
        }
    }
    return report;
}

double hausdorff(std::span<const Point> a, std::span<const Point> b) {
    if (a.empty() || b.empty()) throw ContractError("Hausdorff distance of an empty set is undefined");
    double d = 0.0;
    for (const Point& x : a) d = std::max(d, min_distance(x, b));
    for (const Point& y : b) d = std::max(d, min_distance(y, a));
    return d;
}

GrowthEnvelope growth_envelope(const ScalarField& field, double tol_pos) {
    const auto& g = field.grid();
    const Positivity pos = positivity_and_boundary(field, tol_pos);
    if (pos.boundary.empty()) throw ContractError("growth envelope needs a nonempty free boundary");
    const std::vector<Point> dead = pos.boundary.dead_side_points(g);
    GrowthEnvelope env;
    env.c1 = std::numeric_limits<double>::infinity();
    for (NodeIndex x : g.interior_nodes()) {
        if (!pos.mask[static_cast<std::size_t>(x)]) continue;
        const double d = min_distance(g.point(x), dead);
        if (!(d > 0.0)) continue;
        const double ratio = field[x] / d;
        env.c1 = std::min(env.c1, ratio);
        env.c2 = std::max(env.c2, ratio);
        ++env.samples;
    }
    if (env.samples == 0) env.c1 = 0.0;
    return env;
}

double lipschitz_seminorm(const ScalarField& field) {
    const auto& g = field.grid();
    double lip = 0.0;
    for (NodeIndex x : g.interior_nodes()) {
        for (NodeIndex y : g.neighbors(x)) {
            if (y == x) continue;
            lip = std::max(lip, std::abs(field[y] - field[x]) / g.distance(x, y));
        }
    }
    return lip;
}

double null_set_symdiff(const ScalarField& a, const ScalarField& b, double tol) {
    if (a.size() != b.size()) throw ContractError("fields live on different grids");
    const auto& g = a.grid();
    std::size_t diff = 0;
    for (NodeIndex x : g.interior_nodes()) diff += (std::abs(a[x]) <= tol) != (std::abs(b[x]) <= tol) ? 1 : 0;
    return static_cast<double>(diff) / static_cast<double>(g.interior_nodes().size());
}

AnalysisReport analyze_field(const ScalarField& field, const AnalysisOptions& options, const ScalarField* reference) {
    const auto& g = field.grid();
    AnalysisReport r;
    r.tol_pos = options.tol_pos.value_or(default_tol_pos(field));
    const Positivity pos = positivity_and_boundary(field, r.tol_pos);
    r.fb_points = pos.boundary.nodes.size();
    r.lipschitz = lipschitz_seminorm(field);
    if (pos.boundary.empty()) return r;

    r.nondeg_min_ratio = nondegeneracy_check(field, options.radii, options.exponent, r.tol_pos).min_ratio;
    r.density_min = density_check(field, options.rho, r.tol_pos);
    const PorosityReport por = porosity_estimate(field, options.radii, r.tol_pos);
    r.porosity_zeta = por.zeta;
    r.porosity_degenerate = por.degenerate;
    const GrowthEnvelope env = growth_envelope(field, r.tol_pos);
    r.growth_c1 = env.c1;
    r.growth_c2 = env.c2;
    if (reference) {
        const FreeBoundary other = positivity_and_boundary(*reference, default_tol_pos(*reference)).boundary;
        if (!other.empty()) r.hausdorff = hausdorff(pos.boundary.points(g), other.points(reference->grid()));
    }
    return r;
}

}  // namespace deadcore
