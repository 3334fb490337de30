#include "deadcore/patch.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

#include <fmt/core.h>

#include "deadcore/errors.hpp"

namespace deadcore {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool allowed_at(const GridDomain& g, std::span<const std::uint8_t> allowed, const LatticePoint& q) {
    const auto n = g.find(q);
    return n && allowed[static_cast<std::size_t>(*n)];
}

/// Calls fn(y, length) for every path-graph edge leaving x.
template <typename Fn>
void for_each_edge(const GridDomain& g, std::span<const std::uint8_t> allowed, std::span<const LatticePoint> stencil,
                   NodeIndex x, Fn&& fn) {
    const LatticePoint q = g.lattice(x);
    const double h = g.spacing();
    for (const LatticePoint& s : stencil) {
        const LatticePoint target{q[0] + s[0], q[1] + s[1]};
        const auto y = g.find(target);
        if (!y || !allowed[static_cast<std::size_t>(*y)]) continue;
        const int major = std::abs(s[0]) >= std::abs(s[1]) ? 0 : 1;
        const int minor = 1 - major;
        const std::int64_t len = std::abs(s[major]);
        const std::int64_t sign = s[major] > 0 ? 1 : -1;
        bool clear = true;
        for (std::int64_t t = 1; t < len && clear; ++t) {
            // Minor offset t * s_minor / len, bracketed by floor and ceil.
            const std::int64_t num = t * s[minor];
            const std::int64_t fl = num >= 0 ? num / len : -((-num + len - 1) / len);
            const std::int64_t cl = num >= 0 ? (num + len - 1) / len : -((-num) / len);
            for (std::int64_t m : {fl, cl}) {
                LatticePoint p = q;
                p[major] += sign * t;
                p[minor] += m;
                if (!allowed_at(g, allowed, p)) {
                    clear = false;
                    break;
                }
            }
        }
        if (clear) fn(*y, h * std::hypot(static_cast<double>(s[0]), static_cast<double>(s[1])));
    }
}

}  // namespace

IterationResult solve_inf_harmonic(const ScalarField& boundary, std::span<const std::uint8_t> mask,
                                   const IterationOptions& options) {
    if (!mask.empty() && std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
        IterationReport report;
        report.converged = true;
        return IterationResult{boundary, report};
    }
    return iterate_from(boundary, OperatorKind::infinity_harmonic, mask, options);
}

ScalarField pointwise_lip(const ScalarField& field) {
    const auto& g = field.grid();
    ScalarField out(field.grid_ptr(), 0.0);
    for (NodeIndex x : g.interior_nodes()) {
        double lip = 0.0;
        for (NodeIndex y : g.neighbors(x)) {
            if (y == x) continue;
            lip = std::max(lip, std::abs(field[y] - field[x]) / g.distance(x, y));
        }
        out[x] = lip;
    }
    return out;
}

std::vector<LatticePoint> path_stencil(int dim, int radius) {
    if (radius < 1) throw ConfigError("stencil_radius", "stencil radius must be >= 1");
    if (dim == 1) return {LatticePoint{-1, 0}, LatticePoint{1, 0}};
    std::vector<LatticePoint> out;
    for (std::int64_t a = -radius; a <= radius; ++a)
        for (std::int64_t b = -radius; b <= radius; ++b)
            if ((a != 0 || b != 0) && std::gcd(a, b) == 1) out.push_back({a, b});
    return out;
}

double stencil_metric_error(int radius) {
    if (radius < 1) throw ConfigError("stencil_radius", "stencil radius must be >= 1");
    // First-octant primitive steps in angular order are consecutive Farey
    // fractions, so each adjacent pair is a unimodular cone basis.
    std::vector<std::pair<double, double>> dirs;
    for (int b = 1; b <= radius; ++b)
        for (int a = 0; a <= b; ++a)
            if (std::gcd(a, b) == 1) dirs.emplace_back(b, a);
    std::sort(dirs.begin(), dirs.end(), [](auto& l, auto& r) { return l.second * r.first < r.second * l.first; });
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < dirs.size(); ++k) {
        const auto [x1, y1] = dirs[k];
        const auto [x2, y2] = dirs[k + 1];
        const double n1 = std::hypot(x1, y1);
        const double n2 = std::hypot(x2, y2);
        // c with <c, s1> = |s1| and <c, s2> = |s2|; the path metric over the
        // cone is <c, v>, whose maximum over unit v is |c|.
        const double det = x1 * y2 - x2 * y1;
        const double cx = (n1 * y2 - n2 * y1) / det;
        const double cy = (x1 * n2 - x2 * n1) / det;
        worst = std::max(worst, std::hypot(cx, cy) - 1.0);
    }
    return worst;
}

std::vector<PathEdge> path_edges(const GridDomain& grid, std::span<const std::uint8_t> allowed, int stencil_radius) {
    if (allowed.size() != grid.size()) throw ContractError("allowed mask length differs from node count");
    const auto stencil = path_stencil(grid.dim(), stencil_radius);
    std::vector<PathEdge> edges;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!allowed[i]) continue;
        const auto x = static_cast<NodeIndex>(i);
        for_each_edge(grid, allowed, stencil, x, [&](NodeIndex y, double len) { edges.push_back({x, y, len}); });
    }
    return edges;
}

std::vector<double> path_distances(const GridDomain& grid, std::span<const std::uint8_t> allowed,
                                   std::span<const std::pair<NodeIndex, double>> sources, int stencil_radius) {
    if (allowed.size() != grid.size()) throw ContractError("allowed mask length differs from node count");
    const auto stencil = path_stencil(grid.dim(), stencil_radius);
    std::vector<double> dist(grid.size(), kInf);
    using Item = std::pair<double, NodeIndex>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (const auto& [s, c] : sources) {
        if (!allowed[static_cast<std::size_t>(s)]) throw ContractError("path source outside the allowed set");
        if (c < dist[static_cast<std::size_t>(s)]) {
            dist[static_cast<std::size_t>(s)] = c;
            heap.emplace(c, s);
        }
    }
    while (!heap.empty()) {
        const auto [d, x] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(x)]) continue;
        for_each_edge(grid, allowed, stencil, x, [&](NodeIndex y, double len) {
            const double nd = d + len;
            if (nd < dist[static_cast<std::size_t>(y)]) {
                dist[static_cast<std::size_t>(y)] = nd;
                heap.emplace(nd, y);
            }
        });
    }
    return dist;
}

PatchedZ build_patched_z(const ScalarField& h, const ScalarField& lip_field, double theta_tol, int stencil_radius) {
    const auto& g = h.grid();
    if (lip_field.size() != h.size()) throw ContractError("Lipschitz field has the wrong length");
    if (!(theta_tol >= 0.0)) throw ConfigError("theta_tol", "theta_tol must be non-negative");
    PatchedZ out{h, std::vector<std::uint8_t>(g.size(), 0), std::vector<int>(g.size(), -1), 0, theta_tol};
    for (NodeIndex x : g.interior_nodes())
        if (lip_field[x] < 1.0 - theta_tol) out.v_mask[static_cast<std::size_t>(x)] = 1;

    // Face-connected labelling.
    std::vector<std::vector<NodeIndex>> components;
    for (NodeIndex seed : g.interior_nodes()) {
        if (!out.v_mask[static_cast<std::size_t>(seed)] || out.labels[static_cast<std::size_t>(seed)] >= 0) continue;
        const int label = static_cast<int>(components.size());
        components.emplace_back();
        std::deque<NodeIndex> queue{seed};
        out.labels[static_cast<std::size_t>(seed)] = label;
        while (!queue.empty()) {
            const NodeIndex x = queue.front();
            queue.pop_front();
            components.back().push_back(x);
            for (int axis = 0; axis < g.dim(); ++axis) {
                for (int dir : {-1, 1}) {
                    const auto y = g.axis_neighbor(x, axis, dir);
                    if (!y) continue;
                    const auto k = static_cast<std::size_t>(*y);
                    if (out.v_mask[k] && out.labels[k] < 0) {
                        out.labels[k] = label;
                        queue.push_back(*y);
                    }
                }
            }
        }
    }
    out.n_components = static_cast<int>(components.size());

    std::vector<std::uint8_t> allowed(g.size(), 0);
    const int reach = 1;
    for (const auto& comp : components) {
        std::vector<NodeIndex> rim;
        for (NodeIndex x : comp) allowed[static_cast<std::size_t>(x)] = 1;
        for (NodeIndex x : comp) {
            const LatticePoint q = g.lattice(x);
            const int span_y = g.dim() == 2 ? reach : 0;
            for (int dx = -reach; dx <= reach; ++dx) {
                for (int dy = -span_y; dy <= span_y; ++dy) {
                    const auto y = g.find({q[0] + dx, q[1] + dy});
                    if (!y || allowed[static_cast<std::size_t>(*y)]) continue;
                    allowed[static_cast<std::size_t>(*y)] = 1;
                    rim.push_back(*y);
                }
            }
        }
        if (rim.empty()) throw ContractError("component of V has no lattice boundary");
        std::vector<std::pair<NodeIndex, double>> sources;
        sources.reserve(rim.size());
        for (NodeIndex y : rim) sources.emplace_back(y, -h[y]);
        const auto dist = path_distances(g, allowed, sources, stencil_radius);
        for (NodeIndex x : comp) {
            const double d = dist[static_cast<std::size_t>(x)];
            if (!std::isfinite(d)) throw ContractError("component node unreachable from its boundary");
            out.z[x] = -d;
        }
        for (NodeIndex x : comp) allowed[static_cast<std::size_t>(x)] = 0;
        for (NodeIndex y : rim) allowed[static_cast<std::size_t>(y)] = 0;
    }
    return out;
}

void build_v(PatchResult& r, const IterationOptions& options) {
    const auto& g = r.z.grid();
    r.negative_mask.assign(g.size(), 0);
    for (NodeIndex x : g.interior_nodes())
        if (r.z[x] < 0.0) r.negative_mask[static_cast<std::size_t>(x)] = 1;
    IterationResult w = solve_inf_harmonic(r.z, r.negative_mask, options);
    r.w = std::move(w.field);
    r.w_report = w.report;
    r.v = r.z;
    for (NodeIndex x : g.interior_nodes())
        if (r.negative_mask[static_cast<std::size_t>(x)]) r.v[x] = r.w[x];
}

double compare_to_dpp(const ScalarField& v, const ScalarField& u_dpp) { return interior_sup_distance(v, u_dpp); }

PatchResult run_patch(const ScalarField& boundary, const PatchOptions& options) {
    const auto& g = boundary.grid();
    IterationResult h = solve_inf_harmonic(boundary, {}, options.harmonic);
    ScalarField lip = pointwise_lip(h.field);
    const double theta = options.theta_tol.value_or(2.0 * g.spacing() * strip_lipschitz(boundary));
    PatchedZ pz = build_patched_z(h.field, lip, theta, options.stencil_radius);

    PatchResult r{h.field, std::move(lip), std::move(pz.v_mask), std::move(pz.labels), pz.n_components, theta, 0.0,
                  std::move(pz.z), {}, boundary, boundary, h.report, {}, std::nullopt};
    const auto in_v = std::count(r.v_mask.begin(), r.v_mask.end(), std::uint8_t{1});
    r.v_fraction = static_cast<double>(in_v) / static_cast<double>(g.interior_nodes().size());
    build_v(r, options.harmonic);
    return r;
}

}  // namespace deadcore
