#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deadcore/dpp.hpp"
#include "deadcore/lattice.hpp"

namespace deadcore {

/// Largest supported exponent; |grad u|^p overflows beyond this for
/// moderately steep data.
inline constexpr double kMaxExponent = 128.0;

struct PlapOptions {
    double p = 2.0;
    /// Initial smoothing width for the positive part; defaults to h^2.
    std::optional<double> smoothing;
    /// The width is divided by 10 per stage down to this value.
    double smoothing_min = 1e-14;
    /// Stopping threshold on max_i |dE/du_i| / h^dim.
    double tol_grad = 1e-9;
    /// Newton steps per stage.
    std::size_t max_iter = 500;
    double armijo = 1e-4;
    double backtrack = 0.5;
    /// Solve p = 2, 4, 8, ... first and warm-start the next stage.
    bool continuation = true;
    /// Unsmoothed coordinate-descent sweeps after the smooth phase.
    std::size_t polish_sweeps = 200;
    unsigned workers = 1;
};

struct PlapReport {
    IterationReport base;
    /// Scaled gradient sup-norm of the smoothed energy at the end of the smooth phase.
    double smoothed_gradient = 0.0;
    /// Scaled min-norm subgradient of the exact energy after the polish.
    double subgradient = 0.0;
    std::size_t polish_sweeps = 0;
    double energy = 0.0;
    /// Exponents of the continuation stages, the target last.
    std::vector<double> stages;
    double final_smoothing = 0.0;
};

struct PlapResult {
    ScalarField field;
    PlapReport report;
};

/// Discrete energy on a grid. Cells are the lattice edges (1D) or the two
/// right triangles of each lattice square (2D) having at least one interior
/// vertex; the cell gradient uses one-sided differences along its legs.
///
///   J(u) = sum_cells |cell|  |grad u|^p / p  +  sum_interior h^dim lambda0 s(u)
///
/// with s(t) = max{t, 0} (exact) or (t + sqrt(t^2 + delta^2)) / 2 (smoothed).
class PEnergy {
public:
    PEnergy(GridPtr grid, ScalarField lambda0);

    const GridDomain& grid() const noexcept { return *grid_; }

    /// Exact energy. Throws NumericalError on overflow.
    double value(const ScalarField& u, double p) const;
    /// Smoothed energy and its gradient with respect to every node value
    /// (strip entries are filled too; callers ignore them).
    double smoothed(std::span<const double> u, double p, double delta, std::span<double> grad) const;

    struct HessianEntry {
        NodeIndex row;
        NodeIndex col;
        double value;
    };
    /// Nonzero entries of the smoothed Hessian, all node pairs (duplicates
    /// are to be summed).
    void smoothed_hessian(std::span<const double> u, double p, double delta, std::vector<HessianEntry>& out) const;

    /// Scaled min-norm subgradient of the exact energy over interior nodes.
    double subgradient_residual(std::span<const double> u, double p) const;
    /// One Gauss-Seidel pass of exact 1D minimizations in node order.
    /// Returns the largest change.
    double coordinate_sweep(std::span<double> u, double p) const;

private:
    struct Cell {
        NodeIndex plus[2];
        NodeIndex minus[2];
        int legs;
        double weight;
    };
    struct Local {
        double smooth_slope;
        double curvature;
    };
    Local local_terms(std::span<const double> u, NodeIndex node, double t, double p) const;

    GridPtr grid_;
    std::vector<double> node_weight_;  // h^dim * lambda0 on interior nodes, 0 on the strip
    std::vector<Cell> cells_;
    std::vector<std::size_t> incident_offsets_;
    std::vector<std::uint32_t> incident_;
};

double energy(const ScalarField& u, double p, const ScalarField& lambda0);
double energy(const ScalarField& u, double p, double lambda0);

/// Minimizes J over fields agreeing with `boundary` on the strip. The start
/// is `initial` if given, else `boundary` itself (its interior values are
/// the datum's extension).
PlapResult minimize_jp(const ScalarField& boundary, const ScalarField& lambda0, const PlapOptions& options,
                       const ScalarField* initial = nullptr);
PlapResult minimize_jp(const ProblemSpec& spec, const PlapOptions& options);

struct PSweepRow {
    double p = 0.0;
    double sup_dist = 0.0;
    double lipschitz = 0.0;
    /// Absent when either free boundary is empty.
    std::optional<double> hausdorff;
    std::optional<PlapResult> result;
    /// Solver failure message; the sweep continues past it.
    std::string error;
};

/// Solves for each p in list order, each warm-started from the last
/// successful solution, and compares against `reference`.
std::vector<PSweepRow> p_sweep(const ProblemSpec& spec, std::span<const double> p_list, const ScalarField& reference,
                               const PlapOptions& options);

}  // namespace deadcore
