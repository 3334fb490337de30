// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "deadcore/dpp.hpp"
#include "deadcore/fb_analysis.hpp"
#include "deadcore/game.hpp"
#include "deadcore/oracles.hpp"
#include "deadcore/patch.hpp"
#include "deadcore/plap.hpp"

using namespace deadcore;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ------------------------------------------------------------ problems

ProblemSpec gc_spec(double eps) {
    ProblemSpec s;
    s.dim = 1;
    s.shape = Interval{-1.0, 4.0};
    s.epsilon = eps;
    s.spacing = eps / 4.0;
    s.boundary = AffineDatum{{-0.4, 0.0}, 0.6};
    return s;
}

ProblemSpec dead_core_spec(double h) {
    ProblemSpec s;
    s.dim = 1;
    s.shape = Interval{-2.0, 2.0};
    s.spacing = h;
    s.epsilon = h;
    s.boundary = ConstantDatum{1.0};
    s.lambda0 = ConstantDatum{2.0};
    return s;
}

ProblemSpec square_spec() {
    ProblemSpec s;
    s.dim = 2;
    s.shape = Rectangle{0.0, 1.0, 0.0, 1.0};
    s.spacing = 0.01;
    s.epsilon = 0.05;
    s.boundary = AffineDatum{{0.5, -0.5}, 0.0};
    return s;
}

ProblemSpec disk_spec(double h) {
    ProblemSpec s;
    s.dim = 2;
    s.shape = Ball{{0.0, 0.0}, 2.0};
    s.spacing = h;
    s.epsilon = h;
    s.boundary = RadialDatum{1.0, 0.0};
    return s;
}

ScalarField boundary_of(const ProblemSpec& s) { return sample_field(build_grid(s), s.boundary); }

PatchOptions patch_options(double tol) {
    PatchOptions o;
    o.harmonic.tol = tol;
    return o;
}

// Every DPP solve is kept so criteria 3 and 4 can audit all of them; a deque
// keeps returned references valid.
struct Solved {
    std::string name;
    ScalarField boundary;
    IterationResult result;
};

std::deque<Solved>& dpp_runs() {
    static std::deque<Solved> runs;
    return runs;
}

const IterationResult& solve(const std::string& name, const ProblemSpec& spec, double tol) {
    for (const Solved& s : dpp_runs())
        if (s.name == name) return s.result;
    ScalarField F = boundary_of(spec);
    IterationResult r = value_iterate(F, OperatorKind::pay_or_leave, {.tol = tol});
    dpp_runs().push_back({name, std::move(F), std::move(r)});
    return dpp_runs().back().result;
}

const IterationResult& gc_solution(double eps) { return solve(fmt::format("gc eps={}", eps), gc_spec(eps), 1e-11); }
const IterationResult& dead_core_dpp() { return solve("dead core h=0.01", dead_core_spec(0.01), 1e-12); }
const IterationResult& square_dpp() { return solve("square h=0.01", square_spec(), 1e-10); }

struct EnergyCheck {
    std::string run;
    double minimizer;
    double extension;
};

std::vector<EnergyCheck>& energy_checks() {
    static std::vector<EnergyCheck> checks;
    return checks;
}

void record_energy(const std::string& run, const ProblemSpec& spec, const PlapResult& r, double p) {
    const ScalarField F = boundary_of(spec);
    const ScalarField lambda0 = sample_field(F.grid_ptr(), spec.lambda0);
    energy_checks().push_back({run, energy(r.field, p, lambda0), energy(F, p, lambda0)});
}

// ------------------------------------------------------------ reporting

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    fmt::print("{} criterion {:>2} ({}): {} [{:.1f}s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail, secs);
    std::fflush(stdout);
}

std::string yes(bool b) { return b ? "yes" : "no"; }

// ------------------------------------------------------------ criteria

Outcome c1_dead_core_p2() {
    const double h = 1.0 / 128.0;
    const ProblemSpec spec = dead_core_spec(h);
    PlapOptions o;
    o.p = 2.0;
    const PlapResult r = minimize_jp(spec, o);
    record_energy("p=2 h=1/128", spec, r, 2.0);
    const ScalarField ref = oracles::sample_oracle(oracles::DeadCoreOracle{}, r.field);
    const double err = interior_sup_distance(r.field, ref);
    const double tol = default_tol_pos(r.field);
    double lo = kInf, hi = -kInf;
    for (NodeIndex x : r.field.grid().interior_nodes()) {
        if (r.field[x] > tol) continue;
        lo = std::min(lo, r.field.grid().point(x)[0]);
        hi = std::max(hi, r.field.grid().point(x)[0]);
    }
    const bool core_ok = std::abs(lo + 1.0) <= 2 * h && std::abs(hi - 1.0) <= 2 * h;
    const bool pass = r.report.base.converged && err <= 10 * h * h && core_ok;
    return {pass, fmt::format("sup error {:.3e} (limit {:.3e}), dead core [{:.6f}, {:.6f}] (+-2h = {:.4f}), converged {}", err,
                              10 * h * h, lo, hi, 2 * h, yes(r.report.base.converged))};
}

Outcome c2_gradient_constraint() {
    std::vector<double> errors;
    for (double eps : {0.2, 0.1, 0.05}) {
        const IterationResult& r = gc_solution(eps);
        if (!r.report.converged) return {false, fmt::format("DPP did not converge at eps={}", eps)};
        errors.push_back(interior_sup_distance(r.field, oracles::sample_oracle(oracles::GradientConstraintOracle{}, r.field)));
    }
    const bool decreasing = errors[1] < errors[0] && errors[2] < errors[1];
    return {decreasing && errors[2] <= 0.05,
            fmt::format("sup errors eps=0.2: {:.4f}, 0.1: {:.4f}, 0.05: {:.4f} (limit 0.05), decreasing {}", errors[0],
                        errors[1], errors[2], yes(decreasing))};
}

Outcome c3_structural() {
    std::mt19937_64 rng(2024);
    std::size_t op_violations = 0;
    {
        ProblemSpec s = square_spec();
        s.spacing = 0.1;
        s.epsilon = 0.2;
        const GridPtr g = build_grid(s);
        std::uniform_real_distribution<double> d(-1.0, 1.0), gap(0.0, 0.5);
        for (int trial = 0; trial < 1000; ++trial) {
            ScalarField u(g, 0.0);
            for (std::size_t i = 0; i < u.size(); ++i) u[static_cast<NodeIndex>(i)] = d(rng);
            ScalarField v = u;
            for (std::size_t i = 0; i < v.size(); ++i) v[static_cast<NodeIndex>(i)] += gap(rng);
            for (OperatorKind k : {OperatorKind::pay_or_leave, OperatorKind::gradient_constraint, OperatorKind::infinity_harmonic}) {
                const ScalarField tu = apply_operator(u, k), tv = apply_operator(v, k);
                for (NodeIndex x : g->interior_nodes())
                    if (tu[x] > tv[x]) ++op_violations;
            }
        }
    }

    // Decreasing iterates and data bounds on every problem solved by the gate.
    gc_solution(0.05);
    dead_core_dpp();
    square_dpp();
    std::size_t monotone_failures = 0, bound_violations = 0;
    for (const Solved& s : dpp_runs()) {
        if (!s.result.report.monotone) ++monotone_failures;
        const double lo = std::min(0.0, strip_min(s.boundary)), hi = strip_max(s.boundary);
        for (NodeIndex x : s.result.field.grid().interior_nodes())
            if (s.result.field[x] > hi + 1e-12 || s.result.field[x] < lo - 1e-12) ++bound_violations;
    }

    std::size_t cmp_violations = 0;
    {
        ProblemSpec s = gc_spec(0.2);
        s.spacing = 0.1;
        const GridPtr g = build_grid(s);
        std::uniform_real_distribution<double> d(-1.0, 1.0), gap(0.0, 0.3);
        for (int trial = 0; trial < 100; ++trial) {
            ScalarField f1(g, 0.0), f2(g, 0.0);
            for (NodeIndex y : g->strip_nodes()) {
                f1[y] = d(rng);
                f2[y] = f1[y] + gap(rng);
            }
            const IterationResult u1 = value_iterate(f1, OperatorKind::pay_or_leave, {.tol = 1e-13});
            const IterationResult u2 = value_iterate(f2, OperatorKind::pay_or_leave, {.tol = 1e-13});
            if (!u1.report.monotone || !u2.report.monotone) ++monotone_failures;
            for (NodeIndex x : g->interior_nodes())
                if (u1.field[x] > u2.field[x] + 1e-12) ++cmp_violations;
        }
    }
    const bool pass = op_violations == 0 && monotone_failures == 0 && bound_violations == 0 && cmp_violations == 0;
    return {pass, fmt::format("operator violations {} / 1000 pairs, non-monotone runs {} ({} problems + 200 comparison solves), "
                              "bound violations {}, comparison violations {} / 100 pairs",
                              op_violations, monotone_failures, dpp_runs().size(), bound_violations, cmp_violations)};
}

Outcome c4_oscillation() {
    gc_solution(0.05);
    dead_core_dpp();
    square_dpp();
    bool pass = true;
    std::string detail;
    for (const Solved& s : dpp_runs()) {
        if (!s.result.report.converged) pass = false;
        const ScalarField osc = oscillation(s.result.field);
        double max_a = 0.0;
        for (NodeIndex x : osc.grid().interior_nodes()) max_a = std::max(max_a, osc[x]);
        const double bound = 4.0 * std::max(strip_lipschitz(s.boundary), 1.0) * osc.grid().epsilon();
        if (max_a > bound) pass = false;
        detail += fmt::format("{}{}: {:.4f} <= {:.4f}", detail.empty() ? "" : "; ", s.name, max_a, bound);
    }
    return {pass, detail};
}

Outcome c5_game() {
    const IterationResult& u = gc_solution(0.05);
    GameConfig c;
    c.episodes = 10000;
    c.seed = 20240611;
    c.start_node = *u.field.grid().find_point({2.0, 0.0});
    const ValueEstimate a = estimate_value(c, u.field, true);
    c.workers = 4;
    const ValueEstimate b = estimate_value(c, u.field, true);
    bool identical = a.mean == b.mean && a.stderr_ == b.stderr_ && a.records.size() == b.records.size();
    for (std::size_t i = 0; identical && i < a.records.size(); ++i)
        identical = a.records[i].payoff == b.records[i].payoff && a.records[i].positions == b.records[i].positions;
    const double target = u.field[c.start_node];
    const double tol = 3.0 * a.stderr_ + 2.0 * u.field.grid().epsilon();
    const double gap = std::abs(a.mean - target);
    const bool pass = gap <= tol && identical && a.truncated == 0;
    return {pass, fmt::format("mean {:.5f} +- {:.5f} vs u(2) = {:.5f}, |diff| {:.5f} <= {:.5f}, truncated {}, bit-exact rerun {}",
                              a.mean, a.stderr_, target, gap, tol, a.truncated, yes(identical))};
}

std::optional<PatchResult> square_patch;

Outcome c6_patch() {
    const PatchOptions o = patch_options(1e-11);
    const PatchResult line = run_patch(boundary_of(gc_spec(0.05)), o);
    const double d1 = compare_to_dpp(line.v, gc_solution(0.05).field);
    square_patch = run_patch(boundary_of(square_spec()), patch_options(1e-10));
    const double d2 = compare_to_dpp(square_patch->v, square_dpp().field);
    const bool converged = line.h_report.converged && line.w_report.converged && square_patch->h_report.converged &&
                           square_patch->w_report.converged;
    return {d1 <= 0.05 && d2 <= 0.05 && converged,
            fmt::format("(-1,4): {:.4f} ({} component), unit square slope (0.5,-0.5): {:.4f} ({} component, V fraction {:.3f}); "
                        "limit 0.05",
                        d1, line.n_components, d2, square_patch->n_components, square_patch->v_fraction)};
}

Outcome c7_p_limit() {
    const double h = 1.0 / 128.0;
    const ProblemSpec spec = dead_core_spec(h);
    const ScalarField ref = oracles::sample_oracle(oracles::LimitRadialOracle{}, boundary_of(spec));
    const double ps[] = {4.0, 8.0, 16.0, 32.0};
    const auto rows = p_sweep(spec, ps, ref, PlapOptions{});
    const std::vector<Point> exact{{-1.0, 0.0}, {1.0, 0.0}};
    std::vector<double> sup, haus;
    std::string detail;
    bool ok = true;
    for (const PSweepRow& row : rows) {
        if (!row.result) return {false, fmt::format("p={} failed: {}", row.p, row.error)};
        if (!row.result->report.base.converged) ok = false;
        record_energy(fmt::format("p={} h=1/128", row.p), spec, *row.result, row.p);
        const auto fb = positivity_and_boundary(row.result->field, default_tol_pos(row.result->field)).boundary;
        sup.push_back(row.sup_dist);
        haus.push_back(fb.empty() ? kInf : hausdorff(fb.points(row.result->field.grid()), exact));
        detail += fmt::format("p={}: sup {:.4f} H {:.4f}; ", row.p, sup.back(), haus.back());
    }
    const ScalarField& u32 = rows.back().result->field;
    const double symdiff = null_set_symdiff(u32, ref, default_tol_pos(u32));
    bool strictly = true, non_increasing = true;
    for (std::size_t i = 1; i < sup.size(); ++i) {
        strictly = strictly && sup[i] < sup[i - 1];
        non_increasing = non_increasing && haus[i] <= haus[i - 1];
    }
    const bool pass = ok && strictly && sup.back() <= 0.1 && non_increasing && haus.back() <= 0.05 && symdiff <= 0.1;
    detail += fmt::format("sup strictly decreasing {}, Hausdorff non-increasing {}, null-set symdiff at p=32 {:.4f}, converged {}",
                          yes(strictly), yes(non_increasing), symdiff, yes(ok));
    return {pass, detail};
}

Outcome c8_nondegeneracy() {
    const double h = 0.01;
    const IterationResult& u = dead_core_dpp();
    const double tol = default_tol_pos(u.field);
    const double radii[] = {0.1, 0.2};
    const NondegeneracyReport nd = nondegeneracy_check(u.field, radii, 1.0, tol);
    bool nd_ok = !nd.entries.empty();
    double worst_margin = kInf;
    for (const auto& e : nd.entries) {
        const double need = 1.0 - 4.0 * h / e.radius;
        worst_margin = std::min(worst_margin, e.ratio - need);
        if (e.ratio < need) nd_ok = false;
    }
    const GrowthEnvelope env = growth_envelope(u.field, tol);
    const bool growth_ok = env.c1 >= 0.8 && env.c2 <= 1.2;

    // 2D density: limit profile sampled on the ball lattice, oracle at |x0| = r0.
    const ScalarField disk = oracles::sample_oracle(oracles::LimitRadialOracle{}, boundary_of(disk_spec(h)));
    const double density = density_check(disk, 0.1, default_tol_pos(disk));
    const double oracle = oracles::disk_outside_fraction(0.1, 1.0, 1.0);
    const bool density_ok = density >= 0.4;
    return {nd_ok && growth_ok && density_ok,
            fmt::format("non-degeneracy min ratio {:.4f} over {} balls (worst margin {:.4f} over 1 - 4h/r), growth c1 {:.4f} "
                        "c2 {:.4f}, 2D density {:.4f} (oracle {:.4f}, need >= 0.4)",
                        nd.min_ratio, nd.entries.size(), worst_margin, env.c1, env.c2, density, oracle)};
}

Outcome c9_dijkstra_and_z() {
    ProblemSpec s = square_spec();
    s.spacing = 0.125;
    s.epsilon = 0.125;
    const GridPtr g = build_grid(s);
    const std::size_t n = g->size();
    std::mt19937_64 rng(77);
    std::bernoulli_distribution keep(0.75);
    std::uniform_real_distribution<double> cost(-1.0, 1.0);
    std::size_t compared = 0, mismatches = 0;
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::uint8_t> allowed(n);
        for (auto& a : allowed) a = keep(rng) ? 1 : 0;
        std::vector<std::pair<NodeIndex, double>> sources;
        for (std::size_t i = 0; i < n && sources.size() < 3; ++i)
            if (allowed[i] && keep(rng) && keep(rng)) sources.emplace_back(static_cast<NodeIndex>(i), cost(rng));
        if (sources.empty()) continue;
        const int radius = 1 + trial % 3;
        std::vector<double> d(n * n, kInf);
        for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
        for (const PathEdge& e : path_edges(*g, allowed, radius)) {
            double& slot = d[static_cast<std::size_t>(e.from) * n + static_cast<std::size_t>(e.to)];
            slot = std::min(slot, e.length);
        }
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
        const auto dj = path_distances(*g, allowed, sources, radius);
        for (std::size_t x = 0; x < n; ++x) {
            if (!allowed[x]) continue;
            double fw = kInf;
            for (const auto& [src, c] : sources) fw = std::min(fw, c + d[static_cast<std::size_t>(src) * n + x]);
            if (std::isinf(fw) != std::isinf(dj[x]) || (!std::isinf(fw) && std::abs(fw - dj[x]) > 1e-12)) ++mismatches;
            ++compared;
        }
    }

    // z on the 2D patch problem: worst difference quotient over epsilon-ball pairs inside V.
    if (!square_patch) square_patch = run_patch(boundary_of(square_spec()), patch_options(1e-10));
    const PatchResult& p = *square_patch;
    const GridDomain& pg = p.z.grid();
    double worst = 0.0;
    for (NodeIndex x : pg.interior_nodes()) {
        if (!p.v_mask[static_cast<std::size_t>(x)]) continue;
        for (NodeIndex y : pg.neighbors(x)) {
            if (y == x || !p.v_mask[static_cast<std::size_t>(y)]) continue;
            worst = std::max(worst, std::abs(p.z[x] - p.z[y]) / pg.distance(x, y));
        }
    }
    const double e3 = stencil_metric_error(3);
    const double C = 2.0;
    const double bound = 1.0 + e3 + C * pg.spacing();
    return {mismatches == 0 && compared > 0 && worst <= bound,
            fmt::format("Dijkstra vs Floyd-Warshall: {} mismatches over {} distances; z Lipschitz in V {:.5f} <= 1 + e3 + C h = "
                        "{:.5f} (e3 = {:.5f}, C = {})",
                        mismatches, compared, worst, bound, e3, C)};
}

Outcome c10_energy() {
    std::mt19937_64 rng(31);
    const double ps[] = {2.0, 3.0, 4.5, 8.0};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        ProblemSpec s;
        s.dim = trial % 2 == 0 ? 1 : 2;
        if (s.dim == 1) s.shape = Interval{0.0, 1.0};
        else s.shape = Rectangle{0.0, 0.6, 0.0, 0.5};
        s.spacing = 0.1;
        s.epsilon = 0.1;
        const GridPtr g = build_grid(s);
        const double p = ps[trial % 4];
        const double delta = trial % 3 == 0 ? 1e-1 : 1e-2;
        std::uniform_real_distribution<double> lam(0.5, 3.0), val(-0.3, 0.6);
        const PEnergy J(g, ScalarField(g, lam(rng)));
        std::vector<double> u(g->size()), grad(g->size()), scratch(g->size());
        for (double& x : u) x = val(rng);
        J.smoothed(u, p, delta, grad);
        double gnorm = 0.0, err = 0.0;
        for (NodeIndex x : g->interior_nodes()) {
            const auto i = static_cast<std::size_t>(x);
            const double step = 1e-6 * std::max(1.0, std::abs(u[i]));
            const double keep = u[i];
            u[i] = keep + step;
            const double fp = J.smoothed(u, p, delta, scratch);
            u[i] = keep - step;
            const double fm = J.smoothed(u, p, delta, scratch);
            u[i] = keep;
            gnorm = std::max(gnorm, std::abs(grad[i]));
            err = std::max(err, std::abs((fp - fm) / (2.0 * step) - grad[i]));
        }
        worst = std::max(worst, err / gnorm);
    }
    bool energy_ok = !energy_checks().empty();
    double min_gap = kInf;
    for (const EnergyCheck& e : energy_checks()) {
        min_gap = std::min(min_gap, e.extension - e.minimizer);
        if (e.minimizer > e.extension) energy_ok = false;
    }
    return {worst <= 1e-6 && energy_ok,
            fmt::format("worst relative gradient error {:.2e} over 50 fields (limit 1e-6); J(min) <= J(extension) on {} runs, "
                        "smallest gap {:.4e}",
                        worst, energy_checks().size(), min_gap)};
}

}  // namespace

int main() {
    criterion(1, "p=2 dead core", c1_dead_core_p2);
    criterion(2, "gradient-constraint oracle", c2_gradient_constraint);
    criterion(3, "DPP structure", c3_structural);
    criterion(4, "oscillation bound", c4_oscillation);
    criterion(5, "game value", c5_game);
    criterion(6, "patched function", c6_patch);
    criterion(7, "p to infinity", c7_p_limit);
    criterion(8, "non-degeneracy and growth", c8_nondegeneracy);
    criterion(9, "path metric and z", c9_dijkstra_and_z);
    criterion(10, "energy machinery", c10_energy);
    fmt::print("{} of 10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
