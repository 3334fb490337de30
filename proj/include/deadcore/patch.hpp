#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "deadcore/dpp.hpp"
#include "deadcore/lattice.hpp"

namespace deadcore {

/// Fixed point of the midrange operator (S + I)/2. Without a mask every
/// interior node is solved; with a mask only the flagged interior nodes are,
/// and all other nodes keep their values as a frozen boundary ring. The
/// interior values of `boundary` are the starting guess. An empty mask
/// returns `boundary` unchanged.
IterationResult solve_inf_harmonic(const ScalarField& boundary, std::span<const std::uint8_t> mask = {},
                                   const IterationOptions& options = {});

/// L(x) = max over y in the epsilon-ball of x, y != x, of |u(y) - u(x)| / |y - x|
/// on interior nodes; 0 on the strip.
ScalarField pointwise_lip(const ScalarField& field);

/// Primitive lattice steps (a, b), gcd(|a|, |b|) = 1, max(|a|, |b|) <= radius.
/// In 1D only (+-1, 0).
std::vector<LatticePoint> path_stencil(int dim, int radius);

/// Worst relative excess of the stencil path metric over the Euclidean
/// metric: for every integer vector v, |v| <= d(v) <= (1 + e) |v|.
double stencil_metric_error(int radius);

struct PathEdge {
    NodeIndex from;
    NodeIndex to;
    double length;
};

/// Edges of the path graph on the nodes flagged in `allowed`: a stencil step
/// from x to y is an edge when both endpoints are allowed and so are the
/// lattice points bracketing the segment at every intermediate major-axis
/// coordinate. Symmetric by construction.
std::vector<PathEdge> path_edges(const GridDomain& grid, std::span<const std::uint8_t> allowed, int stencil_radius);

/// Multi-source Dijkstra: D(x) = min over sources (s, c) of c + d(x, s), d the
/// shortest-path length in the graph of `path_edges`. Unreachable or
/// disallowed nodes get +infinity.
std::vector<double> path_distances(const GridDomain& grid, std::span<const std::uint8_t> allowed,
                                   std::span<const std::pair<NodeIndex, double>> sources, int stencil_radius);

struct PatchOptions {
    /// V = {L < 1 - theta_tol}; default 2 h Lip(g) with Lip(g) over the strip.
    std::optional<double> theta_tol;
    int stencil_radius = 3;
    IterationOptions harmonic;
};

struct PatchedZ {
    ScalarField z;
    /// 1 on interior nodes of V.
    std::vector<std::uint8_t> v_mask;
    /// Face-connected component label per node, -1 off V.
    std::vector<int> labels;
    int n_components = 0;
    double theta_tol = 0.0;
};

/// z = h off V; on each face-connected component U of V,
/// z(x) = max over y in dU of h(y) - d_U(x, y), dU the nodes outside U that
/// are king-move adjacent to U and d_U the path metric on U and dU.
PatchedZ build_patched_z(const ScalarField& h, const ScalarField& lip_field, double theta_tol, int stencil_radius = 3);

struct PatchResult {
    ScalarField h;
    ScalarField lip_field;
    std::vector<std::uint8_t> v_mask;
    std::vector<int> components;
    int n_components = 0;
    double theta_tol = 0.0;
    double v_fraction = 0.0;
    ScalarField z;
    /// 1 on interior nodes with z < 0.
    std::vector<std::uint8_t> negative_mask;
    /// Midrange fill of {z < 0} with frozen values z elsewhere.
    ScalarField w;
    ScalarField v;
    IterationReport h_report;
    IterationReport w_report;
    std::optional<double> sup_diff_vs_dpp;
};

/// w on {z < 0} with boundary z, then v = z on {z >= 0}, w on {z < 0}.
/// Fills the z-derived members of `result`.
void build_v(PatchResult& result, const IterationOptions& options = {});

/// Sup-norm of v - u over interior nodes.
double compare_to_dpp(const ScalarField& v, const ScalarField& u_dpp);

/// Runs h -> L -> V -> z -> w -> v from the strip values of `boundary`;
/// interior values of `boundary` seed the midrange solve.
PatchResult run_patch(const ScalarField& boundary, const PatchOptions& options = {});

}  // namespace deadcore
