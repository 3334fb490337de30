#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deadcore/lattice.hpp"

namespace deadcore {

/// The three lattice operators T[u](x), with S = sup and I = inf of u over
/// the closed epsilon-ball of x:
///   pay_or_leave:        min{ (S + I)/2, max{0, S - eps} }
///   gradient_constraint: min{ (S + I)/2, S - eps }
///   infinity_harmonic:   (S + I)/2
enum class OperatorKind { pay_or_leave, gradient_constraint, infinity_harmonic };

const char* to_string(OperatorKind kind) noexcept;

inline double operator_value(OperatorKind kind, double sup, double inf, double eps) noexcept {
    const double mid = 0.5 * (sup + inf);
    switch (kind) {
        case OperatorKind::pay_or_leave: {
            const double pay = sup - eps;
            const double leave = pay > 0.0 ? pay : 0.0;
            return mid < leave ? mid : leave;
        }
        case OperatorKind::gradient_constraint: {
            const double pay = sup - eps;
            return mid < pay ? mid : pay;
        }
        case OperatorKind::infinity_harmonic:
            break;
    }
    return mid;
}

struct IterationReport {
    std::size_t iterations = 0;
    /// sup over updated nodes of |T[u] - u| for the returned u.
    double final_residual = 0.0;
    /// u_{n+1} <= u_n held pointwise on every sweep.
    bool monotone = true;
    bool converged = false;
    double wall_time_s = 0.0;
};

struct IterationOptions {
    double tol = 1e-9;
    std::size_t max_iter = 1'000'000;
    /// In-place sweeps in node order instead of simultaneous (Jacobi) sweeps.
    bool gauss_seidel = false;
    unsigned workers = 1;
};

struct IterationResult {
    ScalarField field;
    IterationReport report;
};

/// One Jacobi sweep: every interior value becomes T evaluated on the input
/// field; strip values are copied unchanged.
ScalarField apply_operator(const ScalarField& field, OperatorKind kind, unsigned workers = 1);

/// sup over interior nodes of |T[u](x) - u(x)|.
double residual(const ScalarField& field, OperatorKind kind);

/// Fixed-point iteration from the standard seed. The strip values of
/// `boundary` are the datum; interior values are replaced by the seed:
/// max over the strip for pay_or_leave and gradient_constraint, the strip
/// mean for infinity_harmonic. Returns the last iterate, flagged
/// unconverged if max_iter is reached first.
IterationResult value_iterate(const ScalarField& boundary, OperatorKind kind, const IterationOptions& options = {});

/// Fixed-point iteration from an explicit start. Only nodes with
/// active[i] != 0 are updated (they must be interior); an empty `active`
/// means every interior node.
IterationResult iterate_from(ScalarField start, OperatorKind kind, std::span<const std::uint8_t> active,
                             const IterationOptions& options = {});

/// A(x) = sup - inf of u over the epsilon-ball of each interior node, 0 on
/// the strip.
ScalarField oscillation(const ScalarField& field);

struct EpsilonStudy {
    std::vector<double> epsilons;
    std::vector<IterationResult> solutions;
    /// Index into `epsilons` of the coarsest lattice.
    std::size_t coarsest = 0;
    /// Coarse-lattice interior nodes that are interior on every lattice.
    std::vector<NodeIndex> common_nodes;
    /// common_map[s][c] is the node on solution s matching common_nodes[c].
    std::vector<std::vector<NodeIndex>> common_map;
    /// distances[i][j] = sup over common nodes |u_i - u_j|.
    std::vector<std::vector<double>> distances;
};

/// Solves `spec` once per epsilon with spacing epsilon / steps_per_epsilon
/// and compares the solutions on the common coarse nodes. Throws
/// ConfigError("epsilons") when a coarse node is missing from a finer
/// lattice.
EpsilonStudy epsilon_study(const ProblemSpec& spec, std::span<const double> epsilons, int steps_per_epsilon,
                           OperatorKind kind, const IterationOptions& options = {});

}  // namespace deadcore
