#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace deadcore {

using NodeIndex = std::int32_t;
/// Physical coordinates; the second component is zero in 1D.
using Point = std::array<double, 2>;
/// Integer lattice coordinates, physical point = spacing * lattice.
using LatticePoint = std::array<std::int64_t, 2>;

struct Interval {
    double a;
    double b;
};
struct Rectangle {
    double a1, b1;
    double a2, b2;
};
struct Ball {
    Point center;
    double radius;
};
using Shape = std::variant<Interval, Rectangle, Ball>;

// Boundary / coefficient data. Each kind defines values on the strip and a
// default extension into the interior (used as the "g-extension").
struct ConstantDatum {
    double value;
};
struct AffineDatum {
    std::array<double, 2> slope;
    double offset;
};
/// Constant kappa on the strip of a ball; `interior` fills the inside.
struct RadialDatum {
    double kappa;
    double interior = 0.0;
};
/// 1D only: strip nodes take the value of the nearer endpoint of (a, b);
/// interior nodes get the linear interpolant between the two values.
struct EndpointsDatum {
    double left;
    double right;
};
/// Explicit node -> value table. Must cover every strip node.
struct TableDatum {
    std::vector<std::pair<Point, double>> entries;
    double interior = 0.0;
};
using Datum = std::variant<ConstantDatum, AffineDatum, RadialDatum, EndpointsDatum, TableDatum>;

struct ProblemSpec {
    int dim = 1;
    Shape shape = Interval{0.0, 1.0};
    double spacing = 0.1;
    double epsilon = 0.1;
    Datum boundary = ConstantDatum{0.0};
    Datum lambda0 = ConstantDatum{1.0};
    std::optional<double> p;
};

/// Lattice discretization of a domain plus its outer strip of width epsilon.
///
/// Nodes are the lattice points spacing*Z^dim that are strictly inside the
/// domain (interior) or outside it at distance < epsilon from the boundary
/// (strip). Node indices follow lexicographic order of the coordinates, so
/// two builds from the same parameters agree node for node. Interior nodes
/// carry their closed lattice ball {y : |y - x| <= epsilon}, self included,
/// sorted by index. Immutable once built.
class GridDomain {
public:
    GridDomain(int dim, Shape shape, double spacing, double epsilon);

    int dim() const noexcept { return dim_; }
    const Shape& shape() const noexcept { return shape_; }
    double spacing() const noexcept { return spacing_; }
    double epsilon() const noexcept { return epsilon_; }
    /// epsilon / spacing, an integer >= 1.
    int steps_per_epsilon() const noexcept { return steps_; }

    std::size_t size() const noexcept { return lattice_.size(); }
    const LatticePoint& lattice(NodeIndex i) const { return lattice_[static_cast<std::size_t>(i)]; }
    Point point(NodeIndex i) const;
    bool is_interior(NodeIndex i) const { return interior_flag_[static_cast<std::size_t>(i)] != 0; }
    std::span<const NodeIndex> interior_nodes() const noexcept { return interior_; }
    std::span<const NodeIndex> strip_nodes() const noexcept { return strip_; }

    /// Closed epsilon-ball of an interior node; empty span for strip nodes.
    std::span<const NodeIndex> neighbors(NodeIndex i) const {
        const auto k = static_cast<std::size_t>(i);
        return {neighbors_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
    }

    std::optional<NodeIndex> find(const LatticePoint& q) const;
    /// Nearest lattice point to p, if it is a node and lies within 1e-6 h.
    std::optional<NodeIndex> find_point(const Point& p) const;
    /// Neighbor one lattice step along `axis` in direction `dir` (+1/-1).
    std::optional<NodeIndex> axis_neighbor(NodeIndex i, int axis, int dir) const;

    double distance(NodeIndex i, NodeIndex j) const;
    /// Nodes y with |y - x| <= radius (interior or strip), sorted by index.
    std::vector<NodeIndex> lattice_ball(NodeIndex center, double radius) const;

    bool contains(const Point& p) const;
    /// Unsigned Euclidean distance from p to the boundary of the shape.
    double boundary_distance(const Point& p) const;

    /// Bounding box of the node set in lattice coordinates (inclusive).
    const LatticePoint& lattice_min() const noexcept { return lo_; }
    const LatticePoint& lattice_max() const noexcept { return hi_; }

private:
    int dim_;
    Shape shape_;
    double spacing_;
    double epsilon_;
    int steps_;
    std::vector<LatticePoint> lattice_;
    std::vector<std::uint8_t> interior_flag_;
    std::vector<NodeIndex> interior_;
    std::vector<NodeIndex> strip_;
    std::vector<std::size_t> offsets_;
    std::vector<NodeIndex> neighbors_;
    LatticePoint lo_{};
    LatticePoint hi_{};
    std::vector<NodeIndex> dense_;  // bounding-box lookup, -1 = not a node
};

using GridPtr = std::shared_ptr<const GridDomain>;

/// Validates the problem description and builds the lattice.
/// Throws ConfigError("epsilon") when epsilon is not k*spacing, ConfigError
/// for other bad parameters, DomainTooSmallError for an empty interior.
GridPtr build_grid(const ProblemSpec& spec);

/// Closed epsilon-ball of an interior node. Throws ContractError for strip
/// nodes or out-of-range indices.
std::vector<NodeIndex> ball_neighbors(const GridDomain& grid, NodeIndex node);

/// Real values on every node of a grid.
class ScalarField {
public:
    explicit ScalarField(GridPtr grid, double fill = 0.0);
    /// Throws ContractError on length mismatch, NumericalError on non-finite data.
    ScalarField(GridPtr grid, std::vector<double> values);

    const GridDomain& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](NodeIndex i) const { return values_[static_cast<std::size_t>(i)]; }
    double& operator[](NodeIndex i) { return values_[static_cast<std::size_t>(i)]; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Evaluates a datum at every node (strip values per the datum, interior by
/// its default extension). Throws IngestionError when a table misses a strip
/// node, ConfigError when the datum does not fit the grid's dimension.
ScalarField sample_field(const GridPtr& grid, const Datum& datum);

/// Evaluates an arbitrary function of position at every node.
template <typename Fn>
ScalarField sample_function(const GridPtr& grid, Fn&& fn) {
    std::vector<double> values(grid->size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = fn(grid->point(static_cast<NodeIndex>(i)));
    return ScalarField(grid, std::move(values));
}

/// Lipschitz constant of the strip values, max |F(a) - F(b)| / |a - b| over
/// strip pairs (brute force).
double strip_lipschitz(const ScalarField& field);
double strip_max(const ScalarField& field);
double strip_min(const ScalarField& field);

/// Sup-norm difference over interior nodes of two fields on the same grid.
double interior_sup_distance(const ScalarField& a, const ScalarField& b);

}  // namespace deadcore
