#include "deadcore/plap.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <fmt/core.h>

#include "deadcore/errors.hpp"
#include "deadcore/fb_analysis.hpp"

namespace deadcore {
namespace {

double power_of_norm(double norm, double exponent) { return norm == 0.0 ? (exponent == 0.0 ? 1.0 : 0.0) : std::pow(norm, exponent); }

void validate(const PlapOptions& o) {
    if (!(o.p >= 2.0)) throw ConfigError("p", fmt::format("p = {} must be >= 2", o.p));
    if (o.p > kMaxExponent) throw ConfigError("p", fmt::format("p = {} exceeds the supported maximum {}", o.p, kMaxExponent));
    if (o.smoothing && !(*o.smoothing >= 0.0)) throw ConfigError("smoothing", "smoothing must be non-negative");
    if (!(o.tol_grad > 0.0)) throw ConfigError("tol_grad", "tol_grad must be positive");
    if (!(o.smoothing_min >= 0.0)) throw ConfigError("smoothing_min", "smoothing_min must be non-negative");
    if (o.max_iter == 0) throw ConfigError("max_iter", "max_iter must be >= 1");
    if (!(o.armijo > 0.0 && o.armijo < 0.5)) throw ConfigError("armijo", "armijo constant must lie in (0, 0.5)");
    if (!(o.backtrack > 0.0 && o.backtrack < 1.0)) throw ConfigError("backtrack", "backtrack factor must lie in (0, 1)");
}

struct SmoothOutcome {
    double scaled_gradient;
    std::size_t iterations;
    bool converged;
};

/// Damped Newton on the interior unknowns of `u` (strip entries stay fixed),
/// with sparse LDLT solves and Armijo backtracking on the smoothed energy.
SmoothOutcome newton(const PEnergy& J, std::vector<double>& u, double p, double delta, double tol,
                     std::size_t max_iter, const PlapOptions& o) {
    const auto& g = J.grid();
    const auto interior = g.interior_nodes();
    const auto n = static_cast<Eigen::Index>(interior.size());
    const double scale = std::pow(g.spacing(), g.dim());
    std::vector<int> unknown(g.size(), -1);
    for (Eigen::Index k = 0; k < n; ++k) unknown[static_cast<std::size_t>(interior[static_cast<std::size_t>(k)])] = static_cast<int>(k);

    std::vector<double> full_grad(u.size()), trial(u);
    Eigen::VectorXd grad(n), grad_new(n), dir(n);
    auto evaluate = [&](const std::vector<double>& field, Eigen::VectorXd& out) {
        const double f = J.smoothed(field, p, delta, full_grad);
        for (Eigen::Index k = 0; k < n; ++k) out[k] = full_grad[static_cast<std::size_t>(interior[static_cast<std::size_t>(k)])];
        return f;
    };

    std::vector<PEnergy::HessianEntry> entries;
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::SparseMatrix<double> H(n, n);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;

    double f = evaluate(u, grad);
    if (!std::isfinite(f)) throw NumericalError("energy is not finite at the starting field; rescale the data");
    SmoothOutcome out{grad.lpNorm<Eigen::Infinity>() / scale, 0, false};
    while (out.iterations < max_iter) {
        if (out.scaled_gradient <= tol) {
            out.converged = true;
            break;
        }
        J.smoothed_hessian(u, p, delta, entries);
        triplets.clear();
        double diag_max = 0.0;
        for (const auto& e : entries) {
            const int r = unknown[static_cast<std::size_t>(e.row)];
            const int c = unknown[static_cast<std::size_t>(e.col)];
            if (r < 0 || c < 0) continue;
            triplets.emplace_back(r, c, e.value);
            if (r == c) diag_max = std::max(diag_max, e.value);
        }
        // Flat regions with p > 2 make the Hessian singular; a relative
        // Levenberg shift keeps the factorization defined.
        const double shift = 1e-12 * diag_max + std::numeric_limits<double>::min();
        for (Eigen::Index k = 0; k < n; ++k) triplets.emplace_back(static_cast<int>(k), static_cast<int>(k), shift);
        H.setFromTriplets(triplets.begin(), triplets.end());
        if (!analyzed) {
            ldlt.analyzePattern(H);
            analyzed = true;
        }
        ldlt.factorize(H);
        bool have_dir = false;
        if (ldlt.info() == Eigen::Success) {
            dir = ldlt.solve(-grad);
            have_dir = ldlt.info() == Eigen::Success && dir.allFinite() && dir.dot(grad) < 0.0;
        }
        if (!have_dir) dir = -grad * (0.1 * g.spacing() / grad.lpNorm<Eigen::Infinity>());
        const double slope = dir.dot(grad);

        double step = 1.0;
        double f_new = f;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (Eigen::Index k = 0; k < n; ++k) {
                const auto i = static_cast<std::size_t>(interior[static_cast<std::size_t>(k)]);
                trial[i] = u[i] + step * dir[k];
            }
            f_new = evaluate(trial, grad_new);
            if (std::isfinite(f_new)) {
                if (f_new <= f + o.armijo * step * slope) {
                    accepted = true;
                    break;
                }
                // Near the optimum energy differences drop below rounding;
                // accept once the value is flat to rounding and the slope along
                // the step has not turned strongly uphill.
                if (f_new <= f + 1e-14 * (std::abs(f) + 1.0) && grad_new.dot(dir) <= (2.0 * o.armijo - 1.0) * slope) {
                    accepted = true;
                    break;
                }
            } else if (std::isnan(f_new) && bt == 59) {
                throw NumericalError("energy evaluated to NaN during the line search");
            }
            step *= o.backtrack;
        }
        if (!accepted) break;  // stalled at rounding level
        u.swap(trial);
        trial = u;
        grad.swap(grad_new);
        f = f_new;
        ++out.iterations;
        out.scaled_gradient = grad.lpNorm<Eigen::Infinity>() / scale;
    }
    return out;
}

}  // namespace

PEnergy::PEnergy(GridPtr grid, ScalarField lambda0) : grid_(std::move(grid)) {
    const auto& g = *grid_;
    if (lambda0.size() != g.size()) throw ContractError("lambda0 field has the wrong length");
    const double h = g.spacing();
    const double vol = std::pow(h, g.dim());
    node_weight_.assign(g.size(), 0.0);
    for (NodeIndex x : g.interior_nodes()) {
        if (!(lambda0[x] > 0.0)) throw ConfigError("lambda0", "lambda0 must be strictly positive on the domain");
        node_weight_[static_cast<std::size_t>(x)] = vol * lambda0[x];
    }

    auto touches_interior = [&](std::initializer_list<NodeIndex> v) {
        return std::any_of(v.begin(), v.end(), [&](NodeIndex k) { return g.is_interior(k); });
    };
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto y = static_cast<NodeIndex>(k);
        const auto q = g.lattice(y);
        if (g.dim() == 1) {
            const auto right = g.find({q[0] + 1, 0});
            if (right && touches_interior({y, *right})) cells_.push_back({{*right, 0}, {y, 0}, 1, h});
            continue;
        }
        const auto e1 = g.find({q[0] + 1, q[1]});
        const auto e2 = g.find({q[0], q[1] + 1});
        if (e1 && e2 && touches_interior({y, *e1, *e2})) cells_.push_back({{*e1, *e2}, {y, y}, 2, 0.5 * h * h});
        const auto w1 = g.find({q[0] - 1, q[1]});
        const auto w2 = g.find({q[0], q[1] - 1});
        if (w1 && w2 && touches_interior({y, *w1, *w2})) cells_.push_back({{y, y}, {*w1, *w2}, 2, 0.5 * h * h});
    }

    std::vector<std::size_t> count(g.size() + 1, 0);
    auto vertices = [](const Cell& c, auto&& fn) {
        NodeIndex seen[4];
        int n = 0;
        for (int j = 0; j < c.legs; ++j) {
            for (NodeIndex v : {c.plus[j], c.minus[j]}) {
                if (std::find(seen, seen + n, v) == seen + n) {
                    seen[n++] = v;
                    fn(v);
                }
            }
        }
    };
    for (const Cell& c : cells_) vertices(c, [&](NodeIndex v) { ++count[static_cast<std::size_t>(v) + 1]; });
    for (std::size_t k = 1; k < count.size(); ++k) count[k] += count[k - 1];
    incident_offsets_ = count;
    incident_.resize(count.back());
    for (std::size_t c = 0; c < cells_.size(); ++c)
        vertices(cells_[c], [&](NodeIndex v) { incident_[count[static_cast<std::size_t>(v)]++] = static_cast<std::uint32_t>(c); });
}

double PEnergy::value(const ScalarField& u, double p) const {
    const double h = grid_->spacing();
    double e = 0.0;
    for (const Cell& c : cells_) {
        double n2 = 0.0;
        for (int j = 0; j < c.legs; ++j) {
            const double d = (u[c.plus[j]] - u[c.minus[j]]) / h;
            n2 += d * d;
        }
        e += c.weight * power_of_norm(std::sqrt(n2), p) / p;
    }
    for (NodeIndex x : grid_->interior_nodes()) e += node_weight_[static_cast<std::size_t>(x)] * std::max(u[x], 0.0);
    if (!std::isfinite(e)) throw NumericalError("energy overflow: |grad u|^p is not representable; rescale the data");
    return e;
}

double PEnergy::smoothed(std::span<const double> u, double p, double delta, std::span<double> grad) const {
    const double h = grid_->spacing();
    std::fill(grad.begin(), grad.end(), 0.0);
    double e = 0.0;
    for (const Cell& c : cells_) {
        double d[2] = {0.0, 0.0};
        double n2 = 0.0;
        for (int j = 0; j < c.legs; ++j) {
            d[j] = (u[static_cast<std::size_t>(c.plus[j])] - u[static_cast<std::size_t>(c.minus[j])]) / h;
            n2 += d[j] * d[j];
        }
        const double norm = std::sqrt(n2);
        e += c.weight * power_of_norm(norm, p) / p;
        const double coef = c.weight * power_of_norm(norm, p - 2.0) / h;
        for (int j = 0; j < c.legs; ++j) {
            grad[static_cast<std::size_t>(c.plus[j])] += coef * d[j];
            grad[static_cast<std::size_t>(c.minus[j])] -= coef * d[j];
        }
    }
    for (NodeIndex x : grid_->interior_nodes()) {
        const auto i = static_cast<std::size_t>(x);
        const double t = u[i];
        const double root = std::sqrt(t * t + delta * delta);
        e += node_weight_[i] * 0.5 * (t + root);
        grad[i] += node_weight_[i] * (root > 0.0 ? 0.5 * (1.0 + t / root) : (t > 0.0 ? 1.0 : 0.5));
    }
    return e;
}

void PEnergy::smoothed_hessian(std::span<const double> u, double p, double delta, std::vector<HessianEntry>& out) const {
    const double h = grid_->spacing();
    out.clear();
    for (const Cell& c : cells_) {
        double d[2] = {0.0, 0.0};
        double n2 = 0.0;
        for (int j = 0; j < c.legs; ++j) {
            d[j] = (u[static_cast<std::size_t>(c.plus[j])] - u[static_cast<std::size_t>(c.minus[j])]) / h;
            n2 += d[j] * d[j];
        }
        const double norm = std::sqrt(n2);
        // M = |g|^{p-2} I + (p-2) |g|^{p-4} g g^T in leg coordinates.
        double M[2][2];
        const double a = power_of_norm(norm, p - 2.0);
        const double b = (norm > 0.0 && p > 2.0) ? (p - 2.0) * std::pow(norm, p - 4.0) : 0.0;
        for (int i = 0; i < c.legs; ++i)
            for (int j = 0; j < c.legs; ++j) M[i][j] = (i == j ? a : 0.0) + b * d[i] * d[j];
        // Leg j depends on plus[j] with +1/h and minus[j] with -1/h.
        for (int i = 0; i < c.legs; ++i) {
            for (int j = 0; j < c.legs; ++j) {
                const double m = c.weight * M[i][j] / (h * h);
                out.push_back({c.plus[i], c.plus[j], m});
                out.push_back({c.plus[i], c.minus[j], -m});
                out.push_back({c.minus[i], c.plus[j], -m});
                out.push_back({c.minus[i], c.minus[j], m});
            }
        }
    }
    for (NodeIndex x : grid_->interior_nodes()) {
        const auto i = static_cast<std::size_t>(x);
        const double t = u[i];
        const double r2 = t * t + delta * delta;
        out.push_back({x, x, r2 > 0.0 ? node_weight_[i] * 0.5 * delta * delta / (r2 * std::sqrt(r2)) : 0.0});
    }
}

PEnergy::Local PEnergy::local_terms(std::span<const double> u, NodeIndex node, double t, double p) const {
    const double h = grid_->spacing();
    const auto k = static_cast<std::size_t>(node);
    Local out{0.0, 0.0};
    auto val = [&](NodeIndex v) { return v == node ? t : u[static_cast<std::size_t>(v)]; };
    for (std::size_t a = incident_offsets_[k]; a < incident_offsets_[k + 1]; ++a) {
        const Cell& c = cells_[incident_[a]];
        double n2 = 0.0, gd = 0.0, dd = 0.0;
        for (int j = 0; j < c.legs; ++j) {
            const double d = (val(c.plus[j]) - val(c.minus[j])) / h;
            const double dpart = ((c.plus[j] == node ? 1.0 : 0.0) - (c.minus[j] == node ? 1.0 : 0.0)) / h;
            n2 += d * d;
            gd += d * dpart;
            dd += dpart * dpart;
        }
        const double norm = std::sqrt(n2);
        out.smooth_slope += c.weight * power_of_norm(norm, p - 2.0) * gd;
        double curv = power_of_norm(norm, p - 2.0) * dd;
        if (norm > 0.0 && p > 2.0) curv += (p - 2.0) * std::pow(norm, p - 4.0) * gd * gd;
        out.curvature += c.weight * curv;
    }
    return out;
}

double PEnergy::subgradient_residual(std::span<const double> u, double p) const {
    const double scale = std::pow(grid_->spacing(), grid_->dim());
    double r = 0.0;
    for (NodeIndex x : grid_->interior_nodes()) {
        const auto i = static_cast<std::size_t>(x);
        const double d0 = local_terms(u, x, u[i], p).smooth_slope;
        const double c = node_weight_[i];
        double ri;
        if (u[i] > 0.0) {
            ri = std::abs(d0 + c);
        } else if (u[i] < 0.0) {
            ri = std::abs(d0);
        } else {
            ri = d0 > 0.0 ? d0 : (d0 + c < 0.0 ? -(d0 + c) : 0.0);
        }
        r = std::max(r, ri / scale);
    }
    return r;
}

double PEnergy::coordinate_sweep(std::span<double> u, double p) const {
    const auto& g = *grid_;
    double change = 0.0;
    for (NodeIndex x : g.interior_nodes()) {
        const auto i = static_cast<std::size_t>(x);
        const double c = node_weight_[i];
        const double d0 = local_terms(u, x, 0.0, p).smooth_slope;
        if (d0 <= 0.0 && d0 + c >= 0.0) {
            change = std::max(change, std::abs(u[i]));
            u[i] = 0.0;
            continue;
        }
        // The 1D objective is convex; bracket its stationary point on the side
        // of 0 indicated by the one-sided slopes, using the extreme values of
        // the incident vertices (beyond them the smooth slope has a fixed sign).
        double lo_nb = std::numeric_limits<double>::infinity();
        double hi_nb = -std::numeric_limits<double>::infinity();
        for (std::size_t a = incident_offsets_[i]; a < incident_offsets_[i + 1]; ++a) {
            const Cell& cell = cells_[incident_[a]];
            for (int j = 0; j < cell.legs; ++j) {
                for (NodeIndex v : {cell.plus[j], cell.minus[j]}) {
                    if (v == x) continue;
                    lo_nb = std::min(lo_nb, u[static_cast<std::size_t>(v)]);
                    hi_nb = std::max(hi_nb, u[static_cast<std::size_t>(v)]);
                }
            }
        }
        const bool positive = d0 + c < 0.0;
        const double shift = positive ? c : 0.0;
        double lo = positive ? 0.0 : lo_nb - g.spacing();
        double hi = positive ? hi_nb + g.spacing() : 0.0;
        double t = std::clamp(u[i], lo, hi);
        if (t == lo || t == hi) t = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
            const Local l = local_terms(u, x, t, p);
            const double f = l.smooth_slope + shift;
            if (f == 0.0) break;
            (f < 0.0 ? lo : hi) = t;
            double next = l.curvature > 0.0 ? t - f / l.curvature : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            const bool done = std::abs(next - t) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
            t = next;
            if (done || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) break;
        }
        change = std::max(change, std::abs(t - u[i]));
        u[i] = t;
    }
    return change;
}

double energy(const ScalarField& u, double p, const ScalarField& lambda0) {
    return PEnergy(u.grid_ptr(), lambda0).value(u, p);
}

double energy(const ScalarField& u, double p, double lambda0) {
    return energy(u, p, ScalarField(u.grid_ptr(), lambda0));
}

PlapResult minimize_jp(const ScalarField& boundary, const ScalarField& lambda0, const PlapOptions& options,
                       const ScalarField* initial) {
    validate(options);
    const auto t0 = std::chrono::steady_clock::now();
    const auto& g = boundary.grid();
    const PEnergy J(boundary.grid_ptr(), lambda0);
    const double delta = options.smoothing.value_or(g.spacing() * g.spacing());

    std::vector<double> u(boundary.values().begin(), boundary.values().end());
    if (initial) {
        if (initial->size() != boundary.size()) throw ContractError("initial field has the wrong length");
        for (NodeIndex x : g.interior_nodes()) u[static_cast<std::size_t>(x)] = (*initial)[x];
    }

    PlapReport report;
    if (options.continuation && !initial) {
        for (double q = 2.0; q < options.p; q *= 2.0) report.stages.push_back(q);
    }
    report.stages.push_back(options.p);

    // Truncating to [min{0, min g}, max g] never raises the exact energy. It
    // removes the sub-zero dip the smoothing leaves in dead cores, which the
    // nearly flat p-energy for large p would otherwise keep.
    const double floor_value = std::min(0.0, strip_min(boundary));
    const double ceiling_value = strip_max(boundary);
    auto truncate = [&] {
        for (NodeIndex x : g.interior_nodes()) {
            auto& v = u[static_cast<std::size_t>(x)];
            v = std::clamp(v, floor_value, ceiling_value);
        }
    };

    SmoothOutcome smooth{};
    for (std::size_t s = 0; s + 1 < report.stages.size(); ++s) {
        smooth = newton(J, u, report.stages[s], delta, options.tol_grad, options.max_iter, options);
        report.base.iterations += smooth.iterations;
        truncate();
    }
    // Shrink the smoothing on the target exponent, warm-starting each stage.
    double width = delta;
    for (;;) {
        smooth = newton(J, u, options.p, width, options.tol_grad, options.max_iter, options);
        truncate();
        report.base.iterations += smooth.iterations;
        report.final_smoothing = width;
        if (width <= options.smoothing_min || width == 0.0) break;
        width = std::max(width * 0.1, options.smoothing_min);
    }
    report.smoothed_gradient = smooth.scaled_gradient;

    report.subgradient = J.subgradient_residual(u, options.p);
    while (report.polish_sweeps < options.polish_sweeps && report.subgradient > options.tol_grad) {
        const double change = J.coordinate_sweep(u, options.p);
        ++report.polish_sweeps;
        report.subgradient = J.subgradient_residual(u, options.p);
        if (change == 0.0) break;
    }

    ScalarField field(boundary.grid_ptr(), std::move(u));
    report.energy = J.value(field, options.p);
    report.base.final_residual = report.subgradient;
    report.base.converged = report.subgradient <= options.tol_grad;
    report.base.monotone = false;
    report.base.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return PlapResult{std::move(field), report};
}

PlapResult minimize_jp(const ProblemSpec& spec, const PlapOptions& options) {
    const GridPtr grid = build_grid(spec);
    return minimize_jp(sample_field(grid, spec.boundary), sample_field(grid, spec.lambda0), options);
}

std::vector<PSweepRow> p_sweep(const ProblemSpec& spec, std::span<const double> p_list, const ScalarField& reference,
                               const PlapOptions& options) {
    const GridPtr grid = build_grid(spec);
    if (reference.size() != grid->size()) throw ContractError("reference field does not match the problem grid");
    const ScalarField boundary = sample_field(grid, spec.boundary);
    const ScalarField lambda0 = sample_field(grid, spec.lambda0);
    const FreeBoundary ref_fb = positivity_and_boundary(reference, default_tol_pos(reference)).boundary;

    std::vector<PSweepRow> rows;
    std::optional<ScalarField> warm;
    for (double p : p_list) {
        PSweepRow row;
        row.p = p;
        try {
            PlapOptions o = options;
            o.p = p;
            PlapResult r = minimize_jp(boundary, lambda0, o, warm ? &*warm : nullptr);
            row.sup_dist = interior_sup_distance(r.field, reference);
            row.lipschitz = lipschitz_seminorm(r.field);
            const FreeBoundary fb = positivity_and_boundary(r.field, default_tol_pos(r.field)).boundary;
            if (!fb.empty() && !ref_fb.empty()) row.hausdorff = hausdorff(fb.points(*grid), ref_fb.points(*grid));
            warm = r.field;
            row.result = std::move(r);
        } catch (const NumericalError& e) {
            row.error = e.what();
        } catch (const ConfigError& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace deadcore
