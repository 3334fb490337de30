#include "deadcore/dpp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

#include <fmt/core.h>

#include "deadcore/errors.hpp"
#include "deadcore/parallel.hpp"

namespace deadcore {
namespace {

struct SweepStats {
    double max_change = 0.0;
    bool non_increasing = true;
};

inline double evaluate_at(const GridDomain& g, std::span<const double> u, NodeIndex x, OperatorKind kind) {
    double sup = -std::numeric_limits<double>::infinity();
    double inf = std::numeric_limits<double>::infinity();
    for (NodeIndex y : g.neighbors(x)) {
        const double v = u[static_cast<std::size_t>(y)];
        sup = v > sup ? v : sup;
        inf = v < inf ? v : inf;
    }
    return operator_value(kind, sup, inf, g.epsilon());
}

SweepStats jacobi_sweep(const GridDomain& g, std::span<const double> in, std::span<double> out,
                        std::span<const NodeIndex> nodes, OperatorKind kind, unsigned workers) {
    SweepStats total;
    std::mutex merge;
    parallel_for(nodes.size(), workers, [&](std::size_t begin, std::size_t end) {
        SweepStats local;
        for (std::size_t k = begin; k < end; ++k) {
            const NodeIndex x = nodes[k];
            const auto i = static_cast<std::size_t>(x);
            const double next = evaluate_at(g, in, x, kind);
            out[i] = next;
            local.max_change = std::max(local.max_change, std::abs(next - in[i]));
            if (next > in[i]) local.non_increasing = false;
        }
        std::lock_guard lock(merge);
        total.max_change = std::max(total.max_change, local.max_change);
        total.non_increasing = total.non_increasing && local.non_increasing;
    });
    return total;
}

SweepStats gauss_seidel_sweep(const GridDomain& g, std::span<double> u, std::span<const NodeIndex> nodes,
                              OperatorKind kind) {
    SweepStats stats;
    for (NodeIndex x : nodes) {
        const auto i = static_cast<std::size_t>(x);
        const double next = evaluate_at(g, u, x, kind);
        stats.max_change = std::max(stats.max_change, std::abs(next - u[i]));
        if (next > u[i]) stats.non_increasing = false;
        u[i] = next;
    }
    return stats;
}

double residual_over(const GridDomain& g, std::span<const double> u, std::span<const NodeIndex> nodes,
                     OperatorKind kind) {
    double r = 0.0;
    for (NodeIndex x : nodes) r = std::max(r, std::abs(evaluate_at(g, u, x, kind) - u[static_cast<std::size_t>(x)]));
    return r;
}

}  // namespace

const char* to_string(OperatorKind kind) noexcept {
    switch (kind) {
        case OperatorKind::pay_or_leave: return "pay_or_leave";
        case OperatorKind::gradient_constraint: return "gradient_constraint";
        case OperatorKind::infinity_harmonic: return "infinity_harmonic";
    }
    return "unknown";
}

ScalarField apply_operator(const ScalarField& field, OperatorKind kind, unsigned workers) {
    ScalarField out = field;
    const auto& g = field.grid();
    jacobi_sweep(g, field.values(), out.values(), g.interior_nodes(), kind, workers);
    return out;
}

double residual(const ScalarField& field, OperatorKind kind) {
    const auto& g = field.grid();
    return residual_over(g, field.values(), g.interior_nodes(), kind);
}

IterationResult iterate_from(ScalarField start, OperatorKind kind, std::span<const std::uint8_t> active,
                             const IterationOptions& options) {
    if (!(options.tol >= 0.0)) throw ConfigError("tol", "tol must be non-negative");
    const auto& g = start.grid();
    std::vector<NodeIndex> nodes;
    if (active.empty()) {
        nodes.assign(g.interior_nodes().begin(), g.interior_nodes().end());
    } else {
        if (active.size() != g.size()) throw ContractError("active mask length differs from node count");
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (!active[i]) continue;
            if (!g.is_interior(static_cast<NodeIndex>(i))) throw ContractError("active mask contains a strip node");
            nodes.push_back(static_cast<NodeIndex>(i));
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    IterationReport report;
    auto finish = [&](ScalarField field) {
        report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return IterationResult{std::move(field), report};
    };
    if (nodes.empty()) {
        report.converged = true;
        return finish(std::move(start));
    }

    if (options.gauss_seidel) {
        for (std::size_t it = 0;; ++it) {
            if (it == options.max_iter) {
                report.iterations = it;
                report.final_residual = residual_over(g, start.values(), nodes, kind);
                report.converged = report.final_residual <= options.tol;
                return finish(std::move(start));
            }
            const SweepStats s = gauss_seidel_sweep(g, start.values(), nodes, kind);
            report.monotone = report.monotone && s.non_increasing;
            if (s.max_change <= options.tol) {
                report.iterations = it + 1;
                report.final_residual = residual_over(g, start.values(), nodes, kind);
                report.converged = report.final_residual <= options.tol;
                if (report.converged) return finish(std::move(start));
            }
        }
    }

    ScalarField next = start;
    ScalarField* cur = &start;
    ScalarField* nxt = &next;
    for (std::size_t it = 0;; ++it) {
        const SweepStats s = jacobi_sweep(g, cur->values(), nxt->values(), nodes, kind, options.workers);
        report.monotone = report.monotone && s.non_increasing;
        if (s.max_change <= options.tol || it == options.max_iter) {
            report.iterations = it;
            report.final_residual = s.max_change;
            report.converged = s.max_change <= options.tol;
            return finish(std::move(*cur));
        }
        std::swap(cur, nxt);
    }
}

IterationResult value_iterate(const ScalarField& boundary, OperatorKind kind, const IterationOptions& options) {
    const auto& g = boundary.grid();
    if (g.strip_nodes().empty()) throw ContractError("grid has no strip nodes");
    double seed = 0.0;
    if (kind == OperatorKind::infinity_harmonic) {
        for (NodeIndex s : g.strip_nodes()) seed += boundary[s];
        seed /= static_cast<double>(g.strip_nodes().size());
    } else {
        seed = strip_max(boundary);
    }
    ScalarField start = boundary;
    for (NodeIndex x : g.interior_nodes()) start[x] = seed;
    return iterate_from(std::move(start), kind, {}, options);
}

ScalarField oscillation(const ScalarField& field) {
    const auto& g = field.grid();
    ScalarField out(field.grid_ptr(), 0.0);
    for (NodeIndex x : g.interior_nodes()) {
        double sup = -std::numeric_limits<double>::infinity();
        double inf = std::numeric_limits<double>::infinity();
        for (NodeIndex y : g.neighbors(x)) {
            sup = std::max(sup, field[y]);
            inf = std::min(inf, field[y]);
        }
        out[x] = sup - inf;
    }
    return out;
}

EpsilonStudy epsilon_study(const ProblemSpec& spec, std::span<const double> epsilons, int steps_per_epsilon,
                           OperatorKind kind, const IterationOptions& options) {
    if (epsilons.empty()) throw ConfigError("epsilons", "epsilon list is empty");
    if (steps_per_epsilon < 1) throw ConfigError("steps_per_epsilon", "steps per epsilon must be >= 1");
    EpsilonStudy study;
    study.epsilons.assign(epsilons.begin(), epsilons.end());
    for (double eps : epsilons) {
        ProblemSpec s = spec;
        s.epsilon = eps;
        s.spacing = eps / steps_per_epsilon;
        const GridPtr grid = build_grid(s);
        study.solutions.push_back(value_iterate(sample_field(grid, s.boundary), kind, options));
    }
    for (std::size_t i = 1; i < epsilons.size(); ++i)
        if (study.solutions[i].field.grid().spacing() > study.solutions[study.coarsest].field.grid().spacing())
            study.coarsest = i;

    const auto& coarse = study.solutions[study.coarsest].field.grid();
    study.common_map.assign(epsilons.size(), {});
    for (NodeIndex c : coarse.interior_nodes()) {
        const Point p = coarse.point(c);
        bool everywhere = true;
        std::vector<NodeIndex> matches;
        for (const auto& sol : study.solutions) {
            const auto m = sol.field.grid().find_point(p);
            if (!m) {
                throw ConfigError("epsilons",
                                  fmt::format("coarse node ({}, {}) is not a node of the lattice with h = {}", p[0], p[1],
                                              sol.field.grid().spacing()));
            }
            if (!sol.field.grid().is_interior(*m)) everywhere = false;
            matches.push_back(*m);
        }
        if (!everywhere) continue;
        study.common_nodes.push_back(c);
        for (std::size_t s = 0; s < matches.size(); ++s) study.common_map[s].push_back(matches[s]);
    }

    const std::size_t n = epsilons.size();
    study.distances.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double d = 0.0;
            for (std::size_t c = 0; c < study.common_nodes.size(); ++c) {
                d = std::max(d, std::abs(study.solutions[a].field[study.common_map[a][c]] -
                                         study.solutions[b].field[study.common_map[b][c]]));
            }
            study.distances[a][b] = study.distances[b][a] = d;
        }
    }
    return study;
}

}  // namespace deadcore
