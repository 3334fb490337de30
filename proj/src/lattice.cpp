#include "deadcore/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

#include "deadcore/errors.hpp"

namespace deadcore {
namespace {

// Classification slack, relative to the spacing: lattice coordinates are
// computed as i*h, so points exactly on the boundary may be off by an ulp.
constexpr double kSlack = 1e-9;

// Positive inside the shape, negative outside; |value| is the Euclidean
// distance to the boundary.
double signed_depth(const Shape& shape, int dim, const Point& p) {
    return std::visit(
        [&](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Interval>) {
                return std::min(p[0] - s.a, s.b - p[0]);
            } else if constexpr (std::is_same_v<S, Rectangle>) {
                const double depth = std::min({p[0] - s.a1, s.b1 - p[0], p[1] - s.a2, s.b2 - p[1]});
                if (depth >= 0.0) return depth;
                const double dx = std::max({s.a1 - p[0], 0.0, p[0] - s.b1});
                const double dy = std::max({s.a2 - p[1], 0.0, p[1] - s.b2});
                return -std::hypot(dx, dy);
            } else {
                const double dx = p[0] - s.center[0];
                const double dy = dim == 2 ? p[1] - s.center[1] : 0.0;
                return s.radius - std::hypot(dx, dy);
            }
        },
        shape);
}

void validate_shape(int dim, const Shape& shape) {
    if (dim != 1 && dim != 2) throw ConfigError("dim", fmt::format("dim must be 1 or 2, got {}", dim));
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Interval>) {
                if (dim != 1) throw ConfigError("shape", "interval shape requires dim = 1");
                if (!(s.a < s.b)) throw ConfigError("shape", "interval requires a < b");
            } else if constexpr (std::is_same_v<S, Rectangle>) {
                if (dim != 2) throw ConfigError("shape", "rectangle shape requires dim = 2");
                if (!(s.a1 < s.b1) || !(s.a2 < s.b2)) throw ConfigError("shape", "rectangle requires a < b on both axes");
            } else {
                if (!(s.radius > 0.0)) throw ConfigError("shape", "ball radius must be positive");
            }
        },
        shape);
}

// Bounding box [lo, hi] per axis of the shape.
std::pair<Point, Point> shape_bounds(const Shape& shape, int dim) {
    return std::visit(
        [&](const auto& s) -> std::pair<Point, Point> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Interval>) {
                return {Point{s.a, 0.0}, Point{s.b, 0.0}};
            } else if constexpr (std::is_same_v<S, Rectangle>) {
                return {Point{s.a1, s.a2}, Point{s.b1, s.b2}};
            } else {
                const double cy = dim == 2 ? s.center[1] : 0.0;
                const double ry = dim == 2 ? s.radius : 0.0;
                return {Point{s.center[0] - s.radius, cy - ry}, Point{s.center[0] + s.radius, cy + ry}};
            }
        },
        shape);
}

}  // namespace

GridDomain::GridDomain(int dim, Shape shape, double spacing, double epsilon)
    : dim_(dim), shape_(std::move(shape)), spacing_(spacing), epsilon_(epsilon), steps_(0) {
    validate_shape(dim_, shape_);
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) throw ConfigError("h", "spacing h must be positive and finite");
    if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) throw ConfigError("epsilon", "epsilon must be positive and finite");
    const double ratio = epsilon_ / spacing_;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(k * spacing_ - epsilon_) > kSlack * epsilon_) {
        throw ConfigError("epsilon",
                          fmt::format("epsilon = {} is not a positive integer multiple of h = {}", epsilon_, spacing_));
    }
    steps_ = static_cast<int>(k);

    const double tau = kSlack * spacing_;
    const auto [blo, bhi] = shape_bounds(shape_, dim_);
    LatticePoint scan_lo{}, scan_hi{};
    for (int a = 0; a < dim_; ++a) {
        scan_lo[a] = static_cast<std::int64_t>(std::floor((blo[a] - epsilon_) / spacing_)) - 1;
        scan_hi[a] = static_cast<std::int64_t>(std::ceil((bhi[a] + epsilon_) / spacing_)) + 1;
    }

    const std::int64_t y_lo = dim_ == 2 ? scan_lo[1] : 0;
    const std::int64_t y_hi = dim_ == 2 ? scan_hi[1] : 0;
    for (std::int64_t i = scan_lo[0]; i <= scan_hi[0]; ++i) {
        for (std::int64_t j = y_lo; j <= y_hi; ++j) {
            const Point p{spacing_ * static_cast<double>(i), spacing_ * static_cast<double>(j)};
            const double depth = signed_depth(shape_, dim_, p);
            bool interior = depth > tau;
            bool strip = false;
            if (!interior) {
                strip = std::abs(depth) < epsilon_ - tau;
            }
            if (!interior && !strip) continue;
            const auto idx = static_cast<NodeIndex>(lattice_.size());
            lattice_.push_back({i, j});
            interior_flag_.push_back(interior ? 1 : 0);
            (interior ? interior_ : strip_).push_back(idx);
        }
    }
    if (interior_.empty()) throw DomainTooSmallError("lattice has no interior node; refine h or enlarge the domain");
    if (lattice_.size() > static_cast<std::size_t>(std::numeric_limits<NodeIndex>::max())) {
        throw ConfigError("h", "lattice too large");
    }

    lo_ = lattice_.front();
    hi_ = lattice_.front();
    for (const auto& q : lattice_) {
        for (int a = 0; a < 2; ++a) {
            lo_[a] = std::min(lo_[a], q[a]);
            hi_[a] = std::max(hi_[a], q[a]);
        }
    }
    const auto nx = static_cast<std::size_t>(hi_[0] - lo_[0] + 1);
    const auto ny = static_cast<std::size_t>(hi_[1] - lo_[1] + 1);
    dense_.assign(nx * ny, -1);
    for (std::size_t n = 0; n < lattice_.size(); ++n) {
        const auto& q = lattice_[n];
        dense_[static_cast<std::size_t>(q[0] - lo_[0]) * ny + static_cast<std::size_t>(q[1] - lo_[1])] =
            static_cast<NodeIndex>(n);
    }

    std::vector<LatticePoint> offsets;
    const std::int64_t k2 = static_cast<std::int64_t>(steps_) * steps_;
    const std::int64_t kj = dim_ == 2 ? steps_ : 0;
    for (std::int64_t di = -steps_; di <= steps_; ++di)
        for (std::int64_t dj = -kj; dj <= kj; ++dj)
            if (di * di + dj * dj <= k2) offsets.push_back({di, dj});

    offsets_.assign(lattice_.size() + 1, 0);
    std::vector<NodeIndex> scratch;
    for (std::size_t n = 0; n < lattice_.size(); ++n) {
        offsets_[n] = neighbors_.size();
        if (!interior_flag_[n]) continue;
        scratch.clear();
        for (const auto& d : offsets) {
            const auto found = find({lattice_[n][0] + d[0], lattice_[n][1] + d[1]});
            if (!found) {
                throw std::logic_error("grid construction: epsilon-ball of an interior node left the node set");
            }
            scratch.push_back(*found);
        }
        std::sort(scratch.begin(), scratch.end());
        neighbors_.insert(neighbors_.end(), scratch.begin(), scratch.end());
    }
    offsets_[lattice_.size()] = neighbors_.size();
}

Point GridDomain::point(NodeIndex i) const {
    const auto& q = lattice(i);
    return {spacing_ * static_cast<double>(q[0]), spacing_ * static_cast<double>(q[1])};
}

std::optional<NodeIndex> GridDomain::find(const LatticePoint& q) const {
    if (q[0] < lo_[0] || q[0] > hi_[0] || q[1] < lo_[1] || q[1] > hi_[1]) return std::nullopt;
    const auto ny = static_cast<std::size_t>(hi_[1] - lo_[1] + 1);
    const NodeIndex v = dense_[static_cast<std::size_t>(q[0] - lo_[0]) * ny + static_cast<std::size_t>(q[1] - lo_[1])];
    if (v < 0) return std::nullopt;
    return v;
}

std::optional<NodeIndex> GridDomain::find_point(const Point& p) const {
    LatticePoint q{0, 0};
    for (int a = 0; a < dim_; ++a) {
        const double r = p[a] / spacing_;
        const double rounded = std::round(r);
        if (std::abs(rounded - r) > 1e-6) return std::nullopt;
        q[a] = static_cast<std::int64_t>(rounded);
    }
    if (dim_ == 1 && std::abs(p[1]) > 1e-6 * spacing_) return std::nullopt;
    return find(q);
}

std::optional<NodeIndex> GridDomain::axis_neighbor(NodeIndex i, int axis, int dir) const {
    LatticePoint q = lattice(i);
    q[static_cast<std::size_t>(axis)] += dir;
    return find(q);
}

double GridDomain::distance(NodeIndex i, NodeIndex j) const {
    const auto& a = lattice(i);
    const auto& b = lattice(j);
    return spacing_ * std::hypot(static_cast<double>(a[0] - b[0]), static_cast<double>(a[1] - b[1]));
}

std::vector<NodeIndex> GridDomain::lattice_ball(NodeIndex center, double radius) const {
    std::vector<NodeIndex> out;
    const double r = radius / spacing_;
    const auto reach = static_cast<std::int64_t>(std::floor(r + 1e-9));
    const double r2 = r * r + 1e-9;
    const std::int64_t reach_y = dim_ == 2 ? reach : 0;
    const auto& c = lattice(center);
    for (std::int64_t di = -reach; di <= reach; ++di) {
        for (std::int64_t dj = -reach_y; dj <= reach_y; ++dj) {
            if (static_cast<double>(di * di + dj * dj) > r2) continue;
            if (auto f = find({c[0] + di, c[1] + dj})) out.push_back(*f);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool GridDomain::contains(const Point& p) const { return signed_depth(shape_, dim_, p) > 0.0; }

double GridDomain::boundary_distance(const Point& p) const { return std::abs(signed_depth(shape_, dim_, p)); }

GridPtr build_grid(const ProblemSpec& spec) {
    return std::make_shared<const GridDomain>(spec.dim, spec.shape, spec.spacing, spec.epsilon);
}

std::vector<NodeIndex> ball_neighbors(const GridDomain& grid, NodeIndex node) {
    if (node < 0 || static_cast<std::size_t>(node) >= grid.size()) {
        throw ContractError(fmt::format("node {} out of range", node));
    }
    if (!grid.is_interior(node)) {
        throw ContractError(fmt::format("node {} is a strip node; neighborhoods exist only for interior nodes", node));
    }
    const auto n = grid.neighbors(node);
    return {n.begin(), n.end()};
}

ScalarField::ScalarField(GridPtr grid, double fill) : grid_(std::move(grid)), values_(grid_->size(), fill) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) {
        throw ContractError(fmt::format("field has {} values, grid has {} nodes", values_.size(), grid_->size()));
    }
    for (double v : values_)
        if (!std::isfinite(v)) throw NumericalError("field values must be finite");
}

ScalarField sample_field(const GridPtr& grid, const Datum& datum) {
    std::vector<double> values(grid->size(), 0.0);
    std::visit(
        [&](const auto& d) {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, ConstantDatum>) {
                std::fill(values.begin(), values.end(), d.value);
            } else if constexpr (std::is_same_v<D, AffineDatum>) {
                for (std::size_t i = 0; i < values.size(); ++i) {
                    const Point p = grid->point(static_cast<NodeIndex>(i));
                    values[i] = d.slope[0] * p[0] + (grid->dim() == 2 ? d.slope[1] * p[1] : 0.0) + d.offset;
                }
            } else if constexpr (std::is_same_v<D, RadialDatum>) {
                for (std::size_t i = 0; i < values.size(); ++i)
                    values[i] = grid->is_interior(static_cast<NodeIndex>(i)) ? d.interior : d.kappa;
            } else if constexpr (std::is_same_v<D, EndpointsDatum>) {
                const auto* iv = std::get_if<Interval>(&grid->shape());
                if (iv == nullptr) throw ConfigError("boundary", "endpoints datum requires an interval domain");
                for (std::size_t i = 0; i < values.size(); ++i) {
                    const double x = grid->point(static_cast<NodeIndex>(i))[0];
                    if (grid->is_interior(static_cast<NodeIndex>(i))) {
                        const double t = (x - iv->a) / (iv->b - iv->a);
                        values[i] = (1.0 - t) * d.left + t * d.right;
                    } else {
                        values[i] = std::abs(x - iv->a) < std::abs(x - iv->b) ? d.left : d.right;
                    }
                }
            } else {
                std::vector<std::uint8_t> seen(values.size(), 0);
                for (std::size_t i = 0; i < values.size(); ++i) values[i] = d.interior;
                for (const auto& [p, v] : d.entries) {
                    const auto node = grid->find_point(p);
                    if (!node) throw IngestionError(fmt::format("table entry ({}, {}) is not a lattice node", p[0], p[1]));
                    values[static_cast<std::size_t>(*node)] = v;
                    seen[static_cast<std::size_t>(*node)] = 1;
                }
                for (NodeIndex s : grid->strip_nodes()) {
                    if (!seen[static_cast<std::size_t>(s)]) {
                        const Point p = grid->point(s);
                        throw IngestionError(fmt::format("table datum has no value for strip node ({}, {})", p[0], p[1]));
                    }
                }
            }
        },
        datum);
    return ScalarField(grid, std::move(values));
}

double strip_lipschitz(const ScalarField& field) {
    const auto& g = field.grid();
    const auto strip = g.strip_nodes();
    double lip = 0.0;
    for (std::size_t a = 0; a < strip.size(); ++a)
        for (std::size_t b = a + 1; b < strip.size(); ++b)
            lip = std::max(lip, std::abs(field[strip[a]] - field[strip[b]]) / g.distance(strip[a], strip[b]));
    return lip;
}

double strip_max(const ScalarField& field) {
    double m = -std::numeric_limits<double>::infinity();
    for (NodeIndex s : field.grid().strip_nodes()) m = std::max(m, field[s]);
    return m;
}

double strip_min(const ScalarField& field) {
    double m = std::numeric_limits<double>::infinity();
    for (NodeIndex s : field.grid().strip_nodes()) m = std::min(m, field[s]);
    return m;
}

double interior_sup_distance(const ScalarField& a, const ScalarField& b) {
    if (a.size() != b.size()) throw ContractError("fields live on different grids");
    double d = 0.0;
    for (NodeIndex i : a.grid().interior_nodes()) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace deadcore
