#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deadcore/lattice.hpp"

namespace deadcore {

/// Point-cloud free boundary: interior nodes with u > tol_pos that have an
/// axis-adjacent interior node with u <= tol_pos, and vice versa.
struct FreeBoundary {
    std::vector<NodeIndex> nodes;
    /// Flag per entry of `nodes`: 1 on the positive side, 0 on the dead side.
    std::vector<std::uint8_t> positive_side;
    double tol_pos = 0.0;

    bool empty() const noexcept { return nodes.empty(); }
    std::vector<Point> points(const GridDomain& grid) const;
    std::vector<Point> dead_side_points(const GridDomain& grid) const;
};

struct Positivity {
    /// 1 for interior nodes with u > tol_pos.
    std::vector<std::uint8_t> mask;
    FreeBoundary boundary;
};

/// 1e-8 * (max |u| + 1).
double default_tol_pos(const ScalarField& field);

Positivity positivity_and_boundary(const ScalarField& field, double tol_pos);

struct NondegeneracyEntry {
    NodeIndex node;
    double radius;
    double sup;
    double ratio;
};

struct NondegeneracyReport {
    std::vector<NondegeneracyEntry> entries;
    double min_ratio = 0.0;
    std::size_t skipped = 0;
    std::vector<std::string> notes;
};

/// For each free-boundary node x0 and each r: sup over the closed lattice
/// ball B_r(x0) of u, divided by r^exponent. Balls that reach past the
/// domain (r > dist(x0, boundary)) are skipped and noted. An empty free
/// boundary yields an empty report with min_ratio 0.
NondegeneracyReport nondegeneracy_check(const ScalarField& field, std::span<const double> radii, double exponent,
                                        double tol_pos);

/// Minimum over free-boundary nodes of the fraction of nodes in B_rho(x0)
/// with u > tol_pos. Returns 1 for an empty free boundary.
double density_check(const ScalarField& field, double rho, double tol_pos);

struct PorosityReport {
    double zeta = 1.0;
    /// Some sample found no hole wider than one lattice spacing.
    bool degenerate = false;
    std::size_t samples = 0;
};

/// For each free-boundary node x and r, the largest rho such that a ball
/// B_rho(y), y a node in B_r(x), lies in B_r(x) and avoids the free-boundary
/// cloud; zeta = min rho / r. Empty free boundary gives zeta = 1.
PorosityReport porosity_estimate(const ScalarField& field, std::span<const double> radii, double tol_pos);

/// Brute-force Euclidean Hausdorff distance. Throws ContractError when a set
/// is empty.
double hausdorff(std::span<const Point> a, std::span<const Point> b);

struct GrowthEnvelope {
    double c1 = 0.0;
    double c2 = 0.0;
    std::size_t samples = 0;
};

/// Over interior nodes with u > tol_pos: min and max of u(x) / dist(x, D),
/// D the dead-side free-boundary nodes. Throws ContractError when the free
/// boundary is empty.
GrowthEnvelope growth_envelope(const ScalarField& field, double tol_pos);

/// max over interior x and y in the epsilon-ball of x of |u(y) - u(x)| / |y - x|.
double lipschitz_seminorm(const ScalarField& field);

/// Fraction of interior nodes in the symmetric difference of {|a| <= tol}
/// and {|b| <= tol}.
double null_set_symdiff(const ScalarField& a, const ScalarField& b, double tol);

/// Everything above, bundled for reports.
struct AnalysisReport {
    double tol_pos = 0.0;
    std::size_t fb_points = 0;
    double nondeg_min_ratio = 0.0;
    double density_min = 1.0;
    double porosity_zeta = 1.0;
    bool porosity_degenerate = false;
    double lipschitz = 0.0;
    double growth_c1 = 0.0;
    double growth_c2 = 0.0;
    std::optional<double> hausdorff;
};

struct AnalysisOptions {
    std::vector<double> radii;
    double rho = 0.1;
    std::optional<double> tol_pos;
    /// Exponent for the non-degeneracy ratio; 1 for limit solutions.
    double exponent = 1.0;
};

AnalysisReport analyze_field(const ScalarField& field, const AnalysisOptions& options,
                             const ScalarField* reference = nullptr);

}  // namespace deadcore
