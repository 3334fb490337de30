#include "deadcore/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "deadcore/config.hpp"
#include "deadcore/dpp.hpp"
#include "deadcore/errors.hpp"
#include "deadcore/fb_analysis.hpp"
#include "deadcore/field_io.hpp"
#include "deadcore/game.hpp"
#include "deadcore/oracles.hpp"
#include "deadcore/patch.hpp"
#include "deadcore/plap.hpp"

namespace deadcore {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct Context {
    RunConfig cfg;
    std::string subcommand;
    fs::path out;
    unsigned workers = 1;
    bool timings = false;
    std::ostream* log = nullptr;
    GridPtr grid;
    std::optional<ScalarField> boundary;
    ojson results = ojson::object();
    ojson timing = ojson::object();
    std::vector<std::string> artifacts;
    std::vector<std::string> failures;

    template <typename Fn>
    auto timed(const char* stage, Fn&& fn) {
        const auto t0 = Clock::now();
        auto r = fn();
        if (timings) timing[stage] = std::chrono::duration<double>(Clock::now() - t0).count();
        return r;
    }
};

// Blocks each subcommand reads: the first list must be present, the second
// may be; any other block is rejected.
struct BlockRule {
    std::vector<std::string> required;
    std::vector<std::string> optional;
};

const std::map<std::string, BlockRule>& block_rules() {
    static const std::map<std::string, BlockRule> rules{
        {"solve-dpp", {{"dpp"}, {}}},
        {"solve-plap", {{"plap"}, {}}},
        {"simulate", {{"game"}, {"dpp"}}},
        {"patch", {{"patch"}, {"dpp"}}},
        {"analyze", {{"analyze"}, {"dpp", "plap"}}},
        {"compare", {{"compare"}, {"dpp", "plap", "patch", "game"}}},
        {"sweep-eps", {{"sweep_eps"}, {"dpp"}}},
        {"sweep-p", {{"plap"}, {}}},
    };
    return rules;
}

std::set<std::string> present_blocks(const RunConfig& c) {
    std::set<std::string> s;
    if (c.dpp) s.insert("dpp");
    if (c.plap) s.insert("plap");
    if (c.game) s.insert("game");
    if (c.patch) s.insert("patch");
    if (c.analyze) s.insert("analyze");
    if (c.sweep_eps) s.insert("sweep_eps");
    if (c.compare) s.insert("compare");
    return s;
}

void check_blocks(const std::string& cmd, const RunConfig& c) {
    const BlockRule& rule = block_rules().at(cmd);
    const auto present = present_blocks(c);
    for (const auto& b : rule.required)
        if (!present.count(b)) throw ConfigError(b, fmt::format("'{}' needs a '{}' block", cmd, b));
    for (const auto& b : present) {
        const bool known = std::find(rule.required.begin(), rule.required.end(), b) != rule.required.end() ||
                           std::find(rule.optional.begin(), rule.optional.end(), b) != rule.optional.end();
        if (!known) throw ConfigError(b, fmt::format("'{}' does not use a '{}' block", cmd, b));
    }
}

std::string prefixed_key(const std::string& key) {
    static const std::set<std::string> problem_keys{"dim", "shape", "h", "epsilon", "boundary", "lambda0"};
    return problem_keys.count(key) ? "problem." + key : key;
}

ojson iteration_json(const IterationReport& r, bool timings) {
    ojson j{{"iterations", r.iterations},
            {"final_residual", r.final_residual},
            {"monotone", r.monotone},
            {"converged", r.converged}};
    if (timings) j["wall_time_s"] = r.wall_time_s;
    return j;
}

void write_field(Context& ctx, const std::string& stem, const ScalarField& f) {
    write_csv(ctx.out / (stem + ".csv"), f);
    ctx.artifacts.push_back(stem + ".csv");
    if (f.grid().dim() == 2) {
        write_pgm(ctx.out / (stem + ".pgm"), f);
        ctx.artifacts.push_back(stem + ".pgm");
    }
}

// Text artifacts are built in memory and written once.
void write_text(Context& ctx, const std::string& name, const std::string& body) {
    std::ofstream out(ctx.out / name, std::ios::binary);
    if (!out) throw ConfigError("output_dir", fmt::format("cannot write '{}'", (ctx.out / name).string()));
    out << body;
    ctx.artifacts.push_back(name);
}

std::string csv_opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

ojson json_opt(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

OperatorKind dpp_operator(const Context& ctx) { return ctx.cfg.dpp ? ctx.cfg.dpp->op : OperatorKind::pay_or_leave; }

IterationOptions dpp_iteration(const Context& ctx) {
    IterationOptions it = ctx.cfg.dpp ? ctx.cfg.dpp->iteration : IterationOptions{};
    it.workers = ctx.workers;
    return it;
}

IterationResult solve_dpp(Context& ctx) {
    const OperatorKind op = dpp_operator(ctx);
    IterationResult r = ctx.timed("dpp", [&] { return value_iterate(*ctx.boundary, op, dpp_iteration(ctx)); });
    ojson j{{"operator", to_string(op)}};
    j.update(iteration_json(r.report, ctx.timings));
    ctx.results["dpp"] = j;
    if (!r.report.converged) ctx.failures.push_back(fmt::format("DPP iteration stopped after {} sweeps", r.report.iterations));
    (*ctx.log) << fmt::format("dpp: {} sweeps, residual {:.3e}, monotone {}\n", r.report.iterations,
                              r.report.final_residual, r.report.monotone);
    return r;
}

PlapOptions plap_options(const Context& ctx) {
    PlapOptions o = ctx.cfg.plap ? ctx.cfg.plap->options : PlapOptions{};
    if (!ctx.cfg.plap && ctx.cfg.problem.p) o.p = *ctx.cfg.problem.p;
    o.workers = ctx.workers;
    return o;
}

ojson plap_json(const PlapReport& r, bool timings) {
    ojson j = iteration_json(r.base, timings);
    j["smoothed_gradient"] = r.smoothed_gradient;
    j["subgradient"] = r.subgradient;
    j["polish_sweeps"] = r.polish_sweeps;
    j["energy"] = r.energy;
    j["stages"] = r.stages;
    j["final_smoothing"] = r.final_smoothing;
    return j;
}

PlapResult solve_plap(Context& ctx, const PlapOptions& o) {
    const ScalarField lambda0 = sample_field(ctx.grid, ctx.cfg.problem.lambda0);
    PlapResult r = ctx.timed("plap", [&] { return minimize_jp(*ctx.boundary, lambda0, o); });
    ojson j{{"p", o.p}};
    j.update(plap_json(r.report, ctx.timings));
    j["energy_g_extension"] = energy(*ctx.boundary, o.p, lambda0);
    j["energy_not_above_extension"] = r.report.energy <= energy(*ctx.boundary, o.p, lambda0);
    ctx.results["plap"] = j;
    if (!r.report.base.converged)
        ctx.failures.push_back(fmt::format("p-Laplace minimization stopped with subgradient {:.3e}", r.report.subgradient));
    (*ctx.log) << fmt::format("plap: p = {}, energy {:.10g}, subgradient {:.3e}\n", o.p, r.report.energy,
                              r.report.subgradient);
    return r;
}

ScalarField oracle_field(const Context&, const oracles::OracleSpec& o, const ScalarField& on) {
    return oracles::sample_oracle(o, on);
}

ojson oracle_json(const std::string& name, double err) { return {{"name", name}, {"sup_error", err}}; }

/// Bounding box of the interior nodes with u <= tol.
ojson dead_set_json(const ScalarField& u, double tol) {
    const auto& g = u.grid();
    std::size_t count = 0;
    Point lo{0.0, 0.0}, hi{0.0, 0.0};
    for (NodeIndex x : g.interior_nodes()) {
        if (u[x] > tol) continue;
        const Point p = g.point(x);
        if (count == 0) lo = hi = p;
        for (int k = 0; k < 2; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
        ++count;
    }
    ojson j{{"tol_pos", tol}, {"nodes", count}};
    if (count == 0) {
        j["min"] = nullptr;
        j["max"] = nullptr;
    } else if (g.dim() == 1) {
        j["min"] = ojson::array({lo[0]});
        j["max"] = ojson::array({hi[0]});
    } else {
        j["min"] = ojson::array({lo[0], lo[1]});
        j["max"] = ojson::array({hi[0], hi[1]});
    }
    return j;
}

// ---------------------------------------------------------------- commands

void cmd_solve_dpp(Context& ctx) {
    IterationResult r = solve_dpp(ctx);
    write_field(ctx, "u_eps", r.field);
    const ScalarField osc = oscillation(r.field);
    double max_a = 0.0;
    for (NodeIndex x : ctx.grid->interior_nodes()) max_a = std::max(max_a, osc[x]);
    const double lip = strip_lipschitz(*ctx.boundary);
    const double bound = 4.0 * std::max(lip, 1.0) * ctx.grid->epsilon();
    ctx.results["oscillation"] = {{"max", max_a}, {"bound", bound}, {"strip_lipschitz", lip}, {"within_bound", max_a <= bound}};
    if (ctx.cfg.dpp->oracle) {
        const ScalarField ref = oracle_field(ctx, *ctx.cfg.dpp->oracle, r.field);
        ctx.results["oracle"] = oracle_json(oracles::name(*ctx.cfg.dpp->oracle), interior_sup_distance(r.field, ref));
    }
}

void cmd_solve_plap(Context& ctx) {
    const PlapOptions o = plap_options(ctx);
    PlapResult r = solve_plap(ctx, o);
    write_field(ctx, "u_p", r.field);
    const double tol = ctx.cfg.plap->tol_pos.value_or(default_tol_pos(r.field));
    ctx.results["dead_set"] = dead_set_json(r.field, tol);
    if (ctx.cfg.plap->reference) {
        const ScalarField ref = oracle_field(ctx, *ctx.cfg.plap->reference, r.field);
        ctx.results["oracle"] = oracle_json(oracles::name(*ctx.cfg.plap->reference), interior_sup_distance(r.field, ref));
    }
}

NodeIndex start_node(const Context& ctx, const Point& p) {
    const auto n = ctx.grid->find_point(p);
    if (!n || !ctx.grid->is_interior(*n))
        throw ConfigError("game.start", "'game.start' must be an interior lattice node");
    return *n;
}

/// Plays the configured games against `value`; returns |mean - u(x0)| and its
/// tolerance 3 stderr + 2 eps.
std::pair<double, double> run_games(Context& ctx, const ScalarField& value, bool write_log) {
    const GameBlock& b = *ctx.cfg.game;
    GameConfig gc;
    gc.episodes = b.episodes;
    gc.seed = b.seed;
    gc.max_steps = b.max_steps;
    gc.start_node = start_node(ctx, b.start);
    gc.player_one = b.player_one;
    gc.workers = ctx.workers;
    ValueEstimate est = ctx.timed("game", [&] { return estimate_value(gc, value, true); });
    const MartingaleAudit audit = martingale_audit(est.records, value);
    const double u0 = value[gc.start_node];
    const double gap = std::abs(est.mean - u0);
    const double tol = 3.0 * est.stderr_ + 2.0 * ctx.grid->epsilon();

    ojson audit_j = ojson::array();
    for (const auto& c : audit.classes)
        audit_j.push_back({{"class", c.name}, {"count", c.count}, {"mean", c.mean}, {"stderr", c.stderr_}, {"flagged", c.flagged}});
    ctx.results["game"] = {{"estimate",
                            {{"mean", est.mean}, {"stderr", est.stderr_}, {"episodes", est.episodes}, {"truncated", est.truncated}}},
                           {"start_node", gc.start_node},
                           {"value_at_start", u0},
                           {"discrepancy", gap},
                           {"tolerance", tol},
                           {"within_tolerance", gap <= tol},
                           {"martingale_audit", {{"classes", audit_j}, {"any_flagged", audit.any_flagged}}}};
    if (write_log) {
        const std::size_t n = std::min(b.log_episodes, est.records.size());
        std::ostringstream os;
        for (std::size_t i = 0; i < n; ++i) write_episode_jsonl(os, est.records[i]);
        write_text(ctx, "episodes.jsonl", os.str());
        ctx.results["game"]["logged_episodes"] = n;
    }
    (*ctx.log) << fmt::format("game: mean {:.6f} +- {:.6f} vs u(x0) = {:.6f}\n", est.mean, est.stderr_, u0);
    return {gap, tol};
}

void cmd_simulate(Context& ctx) {
    IterationResult u = solve_dpp(ctx);
    write_field(ctx, "u_eps", u.field);
    run_games(ctx, u.field, true);
}

PatchOptions patch_options(const Context& ctx) {
    PatchOptions o;
    if (ctx.cfg.patch) {
        o.theta_tol = ctx.cfg.patch->theta_tol;
        o.stencil_radius = ctx.cfg.patch->stencil_radius;
    }
    o.harmonic = dpp_iteration(ctx);
    return o;
}

PatchResult run_patch_pipeline(Context& ctx) {
    const PatchOptions o = patch_options(ctx);
    PatchResult r = ctx.timed("patch", [&] { return run_patch(*ctx.boundary, o); });
    ctx.results["patch"] = {{"theta_tol", r.theta_tol},
                            {"stencil_radius", o.stencil_radius},
                            {"stencil_metric_error", ctx.grid->dim() == 2 ? stencil_metric_error(o.stencil_radius) : 0.0},
                            {"v_fraction", r.v_fraction},
                            {"components", r.n_components},
                            {"harmonic", iteration_json(r.h_report, ctx.timings)},
                            {"negative_fill", iteration_json(r.w_report, ctx.timings)}};
    if (!r.h_report.converged) ctx.failures.push_back("midrange solve for h did not converge");
    if (!r.w_report.converged) ctx.failures.push_back("midrange fill of {z < 0} did not converge");
    (*ctx.log) << fmt::format("patch: {} component(s), V fraction {:.3f}\n", r.n_components, r.v_fraction);
    return r;
}

void cmd_patch(Context& ctx) {
    PatchResult r = run_patch_pipeline(ctx);
    IterationResult u = solve_dpp(ctx);
    r.sup_diff_vs_dpp = compare_to_dpp(r.v, u.field);
    ctx.results["patch"]["sup_diff_vs_dpp"] = *r.sup_diff_vs_dpp;
    write_field(ctx, "h", r.h);
    write_field(ctx, "lip", r.lip_field);
    write_field(ctx, "z", r.z);
    write_field(ctx, "w", r.w);
    write_field(ctx, "v", r.v);
    write_field(ctx, "u_eps", u.field);
}

std::string fb_csv(const ScalarField& f, const FreeBoundary& fb) {
    const auto& g = f.grid();
    std::string s = g.dim() == 1 ? "x,positive_side\n" : "x,y,positive_side\n";
    for (std::size_t i = 0; i < fb.nodes.size(); ++i) {
        const Point p = g.point(fb.nodes[i]);
        s += format_real(p[0]);
        if (g.dim() == 2) s += "," + format_real(p[1]);
        s += fmt::format(",{}\n", fb.positive_side[i]);
    }
    return s;
}

void cmd_analyze(Context& ctx) {
    const AnalyzeBlock& a = *ctx.cfg.analyze;
    std::optional<ScalarField> field;
    switch (a.source) {
        case FieldSource::dpp: field = solve_dpp(ctx).field; break;
        case FieldSource::plap: field = solve_plap(ctx, plap_options(ctx)).field; break;
        case FieldSource::oracle: field = oracle_field(ctx, *a.oracle, *ctx.boundary); break;
        case FieldSource::csv: {
            try {
                field = read_csv(*a.field, ctx.grid);
            } catch (const IngestionError& e) {
                throw ConfigError("analyze.field", e.what());
            }
            break;
        }
    }
    write_field(ctx, "field", *field);
    std::optional<ScalarField> ref;
    if (a.reference) ref = oracle_field(ctx, *a.reference, *field);
    AnalysisOptions o;
    o.radii = a.radii;
    o.rho = a.rho;
    o.tol_pos = a.tol_pos;
    o.exponent = a.exponent;
    const AnalysisReport r = ctx.timed("analyze", [&] { return analyze_field(*field, o, ref ? &*ref : nullptr); });
    const double tol = a.tol_pos.value_or(default_tol_pos(*field));
    const Positivity pos = positivity_and_boundary(*field, tol);
    write_text(ctx, "fb.csv", fb_csv(*field, pos.boundary));
    ctx.results["analysis"] = {{"tol_pos", r.tol_pos},
                               {"fb_points", r.fb_points},
                               {"nondegeneracy_min_ratio", r.nondeg_min_ratio},
                               {"density_min", r.density_min},
                               {"porosity_zeta", r.porosity_zeta},
                               {"porosity_degenerate", r.porosity_degenerate},
                               {"lipschitz", r.lipschitz},
                               {"growth_c1", r.growth_c1},
                               {"growth_c2", r.growth_c2},
                               {"hausdorff_to_reference", json_opt(r.hausdorff)}};
    if (ref) ctx.results["analysis"]["sup_error_to_reference"] = interior_sup_distance(*field, *ref);
}

void cmd_compare(Context& ctx) {
    const CompareBlock& c = *ctx.cfg.compare;
    struct Row {
        std::string quantity;
        double value;
        double tolerance;
    };
    std::vector<Row> rows;
    IterationResult u = solve_dpp(ctx);
    write_field(ctx, "u_eps", u.field);
    if (c.oracle) {
        const ScalarField ref = oracle_field(ctx, *c.oracle, u.field);
        write_field(ctx, "oracle", ref);
        rows.push_back({"dpp_vs_oracle", interior_sup_distance(u.field, ref), c.dpp_tol});
        if (ctx.cfg.plap) {
            PlapResult p = solve_plap(ctx, plap_options(ctx));
            write_field(ctx, "u_p", p.field);
            rows.push_back({fmt::format("plap_p{}_vs_oracle", p.report.stages.empty() ? 0.0 : p.report.stages.back()),
                            interior_sup_distance(p.field, ref), c.plap_tol});
        }
    } else if (ctx.cfg.plap) {
        throw ConfigError("compare.oracle", "a 'plap' block in 'compare' needs 'compare.oracle'");
    }
    PatchResult pr = run_patch_pipeline(ctx);
    write_field(ctx, "v", pr.v);
    rows.push_back({"patch_vs_dpp", compare_to_dpp(pr.v, u.field), c.patch_tol});
    if (c.include_game) {
        if (!ctx.cfg.game) throw ConfigError("compare.include_game", "'compare.include_game' needs a 'game' block");
        const auto [gap, tol] = run_games(ctx, u.field, false);
        rows.push_back({"game_vs_dpp", gap, tol});
    } else if (ctx.cfg.game) {
        throw ConfigError("game", "a 'game' block in 'compare' needs 'compare.include_game': true");
    }

    std::string csv = "quantity,value,tolerance,pass\n";
    ojson table = ojson::array();
    for (const Row& r : rows) {
        const bool pass = r.value <= r.tolerance;
        csv += fmt::format("{},{},{},{}\n", r.quantity, format_real(r.value), format_real(r.tolerance), pass ? 1 : 0);
        table.push_back({{"quantity", r.quantity}, {"value", r.value}, {"tolerance", r.tolerance}, {"pass", pass}});
        if (!pass) ctx.failures.push_back(fmt::format("{} = {:.4g} exceeds {:.4g}", r.quantity, r.value, r.tolerance));
        (*ctx.log) << fmt::format("{:<22} {:>12.4e}  tol {:>10.4e}  {}\n", r.quantity, r.value, r.tolerance, pass ? "ok" : "FAIL");
    }
    write_text(ctx, "compare.csv", csv);
    ctx.results["table"] = table;
}

void cmd_sweep_eps(Context& ctx) {
    const SweepEpsBlock& s = *ctx.cfg.sweep_eps;
    const OperatorKind op = dpp_operator(ctx);
    EpsilonStudy st = ctx.timed("sweep_eps", [&] {
        return epsilon_study(ctx.cfg.problem, s.epsilons, s.steps_per_epsilon, op, dpp_iteration(ctx));
    });
    std::size_t finest = 0;
    for (std::size_t i = 1; i < st.epsilons.size(); ++i)
        if (st.epsilons[i] < st.epsilons[finest]) finest = i;

    std::string csv = "epsilon,h,iterations,converged,monotone,oracle_error,dist_to_finest\n";
    ojson rows = ojson::array();
    std::vector<std::pair<double, double>> errors;
    for (std::size_t i = 0; i < st.epsilons.size(); ++i) {
        const IterationResult& r = st.solutions[i];
        std::optional<double> err;
        if (ctx.cfg.dpp && ctx.cfg.dpp->oracle) {
            err = interior_sup_distance(r.field, oracle_field(ctx, *ctx.cfg.dpp->oracle, r.field));
            errors.emplace_back(st.epsilons[i], *err);
        }
        if (!r.report.converged) ctx.failures.push_back(fmt::format("epsilon = {}: iteration did not converge", st.epsilons[i]));
        const double h = r.field.grid().spacing();
        csv += fmt::format("{},{},{},{},{},{},{}\n", format_real(st.epsilons[i]), format_real(h), r.report.iterations,
                           r.report.converged ? 1 : 0, r.report.monotone ? 1 : 0, csv_opt(err),
                           format_real(st.distances[i][finest]));
        rows.push_back({{"epsilon", st.epsilons[i]},
                        {"h", h},
                        {"dpp", iteration_json(r.report, ctx.timings)},
                        {"oracle_error", json_opt(err)},
                        {"dist_to_finest", st.distances[i][finest]}});
        write_field(ctx, fmt::format("u_eps_{}", i), r.field);
    }
    write_text(ctx, "eps_study.csv", csv);
    ctx.results["operator"] = to_string(op);
    ctx.results["rows"] = rows;
    ctx.results["common_nodes"] = st.common_nodes.size();
    if (!errors.empty()) {
        std::sort(errors.begin(), errors.end(), [](auto& l, auto& r) { return l.first > r.first; });
        bool decreasing = true;
        for (std::size_t i = 1; i < errors.size(); ++i) decreasing = decreasing && errors[i].second < errors[i - 1].second;
        ctx.results["oracle_error_decreasing"] = decreasing;
    }
}

void cmd_sweep_p(Context& ctx) {
    const PlapBlock& b = *ctx.cfg.plap;
    if (b.p_list.empty()) throw ConfigError("plap.p_list", "'sweep-p' needs a non-empty 'plap.p_list'");
    if (!b.reference) throw ConfigError("plap.reference", "'sweep-p' needs 'plap.reference'");
    const ScalarField ref = oracle_field(ctx, *b.reference, *ctx.boundary);
    const double tol = b.tol_pos.value_or(default_tol_pos(ref));
    auto rows = ctx.timed("sweep_p", [&] { return p_sweep(ctx.cfg.problem, b.p_list, ref, plap_options(ctx)); });

    std::string csv = "p,sup_dist,lipschitz,hausdorff,null_set_symdiff\n";
    ojson out = ojson::array();
    std::vector<double> dists;
    for (const PSweepRow& r : rows) {
        ojson j{{"p", r.p}};
        if (!r.result) {
            j["error"] = r.error;
            ctx.failures.push_back(fmt::format("p = {}: {}", r.p, r.error));
            csv += fmt::format("{},,,,\n", format_real(r.p));
            out.push_back(j);
            continue;
        }
        ScalarField u(ctx.grid, std::vector<double>(r.result->field.values().begin(), r.result->field.values().end()));
        const double symdiff = null_set_symdiff(u, ref, tol);
        dists.push_back(r.sup_dist);
        csv += fmt::format("{},{},{},{},{}\n", format_real(r.p), format_real(r.sup_dist), format_real(r.lipschitz),
                           csv_opt(r.hausdorff), format_real(symdiff));
        j["sup_dist"] = r.sup_dist;
        j["lipschitz"] = r.lipschitz;
        j["hausdorff"] = json_opt(r.hausdorff);
        j["null_set_symdiff"] = symdiff;
        j["solver"] = plap_json(r.result->report, ctx.timings);
        if (!r.result->report.base.converged)
            ctx.failures.push_back(fmt::format("p = {}: minimization stopped with subgradient {:.3e}", r.p, r.result->report.subgradient));
        out.push_back(j);
        write_field(ctx, fmt::format("u_p_{}", r.p), u);
        (*ctx.log) << fmt::format("p = {:>6}: sup_dist {:.4e}\n", r.p, r.sup_dist);
    }
    write_text(ctx, "sweep_p.csv", csv);
    ctx.results["reference"] = oracles::name(*b.reference);
    ctx.results["rows"] = out;
    bool decreasing = !dists.empty();
    for (std::size_t i = 1; i < dists.size(); ++i) decreasing = decreasing && dists[i] < dists[i - 1];
    ctx.results["sup_dist_strictly_decreasing"] = decreasing;
}

using Command = void (*)(Context&);

const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table{
        {"solve-dpp", cmd_solve_dpp}, {"solve-plap", cmd_solve_plap}, {"simulate", cmd_simulate},
        {"patch", cmd_patch},         {"analyze", cmd_analyze},       {"compare", cmd_compare},
        {"sweep-eps", cmd_sweep_eps}, {"sweep-p", cmd_sweep_p},
    };
    return table;
}

fs::path resolve_output(const RunOptions& o, const RunConfig& c) {
    if (o.out) return *o.out;
    if (const char* env = std::getenv("DEADCORE_OUTPUT_DIR"); env && *env) return fs::path(env);
    if (c.output_dir) return *c.output_dir;
    throw ConfigError("output_dir", "no output directory: pass --out, set DEADCORE_OUTPUT_DIR or give 'output_dir'");
}

void write_report(Context& ctx, const std::string& status, const std::string& error) {
    ojson report;
    report["subcommand"] = ctx.subcommand;
    report["status"] = status;
    if (!error.empty()) report["error"] = error;
    if (!ctx.failures.empty()) report["failures"] = ctx.failures;
    report["config"] = resolved_json(ctx.cfg);
    report["results"] = ctx.results;
    ctx.artifacts.push_back("report.json");
    report["artifacts"] = ctx.artifacts;
    if (ctx.timings) report["timings"] = ctx.timing;
    std::ofstream out(ctx.out / "report.json", std::ios::binary);
    out << report.dump(2) << '\n';
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"solve-dpp", "solve-plap", "simulate", "patch",
                                                "analyze",   "compare",    "sweep-eps", "sweep-p"};
    return names;
}

int run(const std::string& subcommand, const RunOptions& options, std::ostream& log, std::ostream& err) {
    const auto cmd = commands().find(subcommand);
    if (cmd == commands().end()) {
        err << fmt::format("error: unknown subcommand '{}'\n", subcommand);
        return exit_usage;
    }
    Context ctx;
    ctx.subcommand = subcommand;
    ctx.workers = std::max(1u, options.workers);
    ctx.timings = options.timings;
    ctx.log = &log;
    try {
        ctx.cfg = load_config(options.config_path);
        check_blocks(subcommand, ctx.cfg);
        if (options.seed && ctx.cfg.game) ctx.cfg.game->seed = *options.seed;
        ctx.out = resolve_output(options, ctx.cfg);
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        if (ec || !fs::is_directory(ctx.out))
            throw ConfigError("output_dir", fmt::format("cannot create output directory '{}'", ctx.out.string()));
        try {
            ctx.grid = build_grid(ctx.cfg.problem);
            ctx.boundary = sample_field(ctx.grid, ctx.cfg.problem.boundary);
        } catch (const ConfigError& e) {
            throw ConfigError(prefixed_key(e.key()), e.what());
        } catch (const DomainTooSmallError& e) {
            throw ConfigError("problem.shape", e.what());
        } catch (const IngestionError& e) {
            throw ConfigError("problem.boundary", e.what());
        }
    } catch (const ConfigError& e) {
        err << fmt::format("config error [{}]: {}\n", e.key(), e.what());
        return exit_config;
    }

    try {
        cmd->second(ctx);
    } catch (const ConfigError& e) {
        err << fmt::format("config error [{}]: {}\n", prefixed_key(e.key()), e.what());
        return exit_config;
    } catch (const NumericalError& e) {
        write_report(ctx, "numerical_failure", e.what());
        err << fmt::format("numerical failure: {}\n", e.what());
        return exit_numerical;
    } catch (const std::exception& e) {
        write_report(ctx, "internal_error", e.what());
        err << fmt::format("internal error: {}\n", e.what());
        return exit_numerical;
    }
    if (!ctx.failures.empty()) {
        write_report(ctx, "failed", "");
        for (const auto& f : ctx.failures) err << "failure: " << f << '\n';
        return exit_numerical;
    }
    write_report(ctx, "ok", "");
    log << fmt::format("wrote {} artifact(s) to {}\n", ctx.artifacts.size(), ctx.out.string());
    return exit_ok;
}

}  // namespace deadcore
