#include "deadcore/config.hpp"

#include <fstream>
#include <set>

#include <fmt/core.h>

#include "deadcore/errors.hpp"

namespace deadcore {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

/// Object accessor that records which keys were read, so leftovers can be
/// reported as unknown.
class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        if (!node_.contains(key)) throw ConfigError(key_path(key), fmt::format("missing required key '{}'", key_path(key)));
        return node_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(key_path(key), fmt::format("'{}' must be a number", key_path(key)));
        return v.get<double>();
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : (used_.insert(key), fallback); }
    std::optional<double> optional_number(const std::string& key) {
        if (!has(key)) {
            used_.insert(key);
            return std::nullopt;
        }
        return number(key);
    }

    std::int64_t integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(key_path(key), fmt::format("'{}' must be an integer", key_path(key)));
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        return has(key) ? integer(key) : (used_.insert(key), fallback);
    }
    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const json& v = raw(key);
        if (!v.is_number_unsigned())
            throw ConfigError(key_path(key), fmt::format("'{}' must be a non-negative integer", key_path(key)));
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) {
            used_.insert(key);
            return fallback;
        }
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(key_path(key), fmt::format("'{}' must be true or false", key_path(key)));
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(key_path(key), fmt::format("'{}' must be a string", key_path(key)));
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(key_path(key), fmt::format("'{}' must be a list of numbers", key_path(key)));
        std::vector<double> out;
        for (const json& e : v) {
            if (!e.is_number()) throw ConfigError(key_path(key), fmt::format("'{}' must be a list of numbers", key_path(key)));
            out.push_back(e.get<double>());
        }
        return out;
    }

    Reader child(const std::string& key) { return Reader(raw(key), key_path(key)); }
    /// Marks an optional key as consumed (it may be absent or null).
    void raw_skip(const std::string& key) { used_.insert(key); }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!used_.count(it.key()))
                throw ConfigError(key_path(it.key()), fmt::format("unknown key '{}'", key_path(it.key())));
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> used_;
};

void require(bool ok, const std::string& key, const std::string& message) {
    if (!ok) throw ConfigError(key, fmt::format("'{}': {}", key, message));
}

Point read_point(Reader& r, const std::string& key, int dim) {
    const auto v = r.numbers(key);
    require(static_cast<int>(v.size()) == dim, r.key_path(key), fmt::format("expected {} coordinate(s)", dim));
    return Point{v[0], dim == 2 ? v[1] : 0.0};
}

Shape read_shape(Reader r, int dim) {
    const std::string type = r.string("type");
    Shape out;
    if (type == "interval") {
        out = Interval{r.number("a"), r.number("b")};
    } else if (type == "rectangle") {
        out = Rectangle{r.number("a1"), r.number("b1"), r.number("a2"), r.number("b2")};
    } else if (type == "ball") {
        out = Ball{read_point(r, "center", dim), r.number("radius")};
    } else {
        throw ConfigError(r.key_path("type"), fmt::format("unknown shape type '{}'", type));
    }
    r.finish();
    return out;
}

Datum read_datum(const json& node, const std::string& path, int dim) {
    if (node.is_number()) return ConstantDatum{node.get<double>()};
    Reader r(node, path);
    const std::string type = r.string("type");
    Datum out;
    if (type == "constant") {
        out = ConstantDatum{r.number("value")};
    } else if (type == "affine") {
        const auto slope = r.numbers("slope");
        require(static_cast<int>(slope.size()) == dim, r.key_path("slope"), fmt::format("expected {} component(s)", dim));
        out = AffineDatum{{slope[0], dim == 2 ? slope[1] : 0.0}, r.number("offset", 0.0)};
    } else if (type == "radial") {
        out = RadialDatum{r.number("kappa"), r.number("interior", 0.0)};
    } else if (type == "endpoints") {
        out = EndpointsDatum{r.number("left"), r.number("right")};
    } else if (type == "table") {
        TableDatum t;
        const json& rows = r.raw("values");
        require(rows.is_array(), r.key_path("values"), "expected a list of rows");
        for (const json& row : rows) {
            require(row.is_array() && static_cast<int>(row.size()) == dim + 1, r.key_path("values"),
                    fmt::format("each row must hold {} numbers", dim + 1));
            for (const json& e : row) require(e.is_number(), r.key_path("values"), "rows must hold numbers");
            t.entries.push_back({Point{row[0].get<double>(), dim == 2 ? row[1].get<double>() : 0.0}, row[static_cast<std::size_t>(dim)].get<double>()});
        }
        t.interior = r.number("interior", 0.0);
        out = std::move(t);
    } else {
        throw ConfigError(r.key_path("type"), fmt::format("unknown datum type '{}'", type));
    }
    r.finish();
    return out;
}

oracles::OracleSpec read_oracle(Reader r, int dim) {
    const std::string type = r.string("type");
    oracles::OracleSpec out;
    if (type == "gradient_constraint_1d") {
        require(dim == 1, r.key_path("type"), "gradient_constraint_1d needs dim = 1");
        out = oracles::GradientConstraintOracle{};
    } else if (type == "dead_core") {
        oracles::RadialSpec s;
        s.dim = dim;
        s.radius = r.number("radius");
        s.kappa = r.number("kappa");
        s.lambda0 = r.number("lambda0");
        s.p = r.number("p");
        if (r.has("center")) s.center = read_point(r, "center", dim);
        else r.raw_skip("center");
        require(s.p >= 2.0, r.key_path("p"), "p must be >= 2");
        require(s.lambda0 > 0.0, r.key_path("lambda0"), "lambda0 must be positive");
        out = oracles::DeadCoreOracle{s};
    } else if (type == "limit_radial") {
        oracles::LimitRadialOracle o;
        o.radius = r.number("radius");
        o.kappa = r.number("kappa");
        if (r.has("center")) o.center = read_point(r, "center", dim);
        else r.raw_skip("center");
        out = o;
    } else {
        throw ConfigError(r.key_path("type"), fmt::format("unknown oracle type '{}'", type));
    }
    r.finish();
    return out;
}

OperatorKind read_operator(const std::string& s, const std::string& key) {
    if (s == "pay_or_leave") return OperatorKind::pay_or_leave;
    if (s == "gradient_constraint") return OperatorKind::gradient_constraint;
    if (s == "infinity_harmonic") return OperatorKind::infinity_harmonic;
    throw ConfigError(key, fmt::format("unknown operator '{}'", s));
}

}  // namespace

RunConfig parse_config(const json& doc) {
    Reader root(doc, "");
    RunConfig cfg;

    {
        Reader p = root.child("problem");
        const auto dim = p.integer("dim");
        require(dim == 1 || dim == 2, "problem.dim", "must be 1 or 2");
        cfg.problem.dim = static_cast<int>(dim);
        cfg.problem.shape = read_shape(p.child("shape"), cfg.problem.dim);
        cfg.problem.spacing = p.number("h");
        cfg.problem.epsilon = p.number("epsilon");
        require(cfg.problem.spacing > 0.0, "problem.h", "must be positive");
        require(cfg.problem.epsilon > 0.0, "problem.epsilon", "must be positive");
        const double k = cfg.problem.epsilon / cfg.problem.spacing;
        require(std::round(k) >= 1.0 && std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, k), "problem.epsilon",
                fmt::format("epsilon = {} is not a positive integer multiple of h = {}", cfg.problem.epsilon, cfg.problem.spacing));
        cfg.problem.boundary = read_datum(p.raw("boundary"), "problem.boundary", cfg.problem.dim);
        if (p.has("lambda0")) cfg.problem.lambda0 = read_datum(p.raw("lambda0"), "problem.lambda0", cfg.problem.dim);
        else p.raw_skip("lambda0");
        cfg.problem.p = p.optional_number("p");
        if (cfg.problem.p) require(*cfg.problem.p >= 2.0 && *cfg.problem.p <= kMaxExponent, "problem.p", "must lie in [2, 128]");
        p.finish();
    }
    const int dim = cfg.problem.dim;

    if (root.has("dpp")) {
        Reader r = root.child("dpp");
        DppBlock b;
        if (r.has("operator")) b.op = read_operator(r.string("operator"), "dpp.operator");
        else r.raw_skip("operator");
        b.iteration.tol = r.number("tol", b.iteration.tol);
        require(b.iteration.tol > 0.0, "dpp.tol", "must be positive");
        const auto mi = r.integer("max_iter", static_cast<std::int64_t>(b.iteration.max_iter));
        require(mi >= 1, "dpp.max_iter", "must be >= 1");
        b.iteration.max_iter = static_cast<std::size_t>(mi);
        b.iteration.gauss_seidel = r.boolean("gauss_seidel", false);
        if (r.has("oracle")) b.oracle = read_oracle(r.child("oracle"), dim);
        else r.raw_skip("oracle");
        r.finish();
        cfg.dpp = b;
    } else {
        root.raw_skip("dpp");
    }

    if (root.has("plap")) {
        Reader r = root.child("plap");
        PlapBlock b;
        auto& o = b.options;
        o.p = r.number("p", cfg.problem.p.value_or(2.0));
        require(o.p >= 2.0 && o.p <= kMaxExponent, "plap.p", "must lie in [2, 128]");
        if (r.has("p_list")) b.p_list = r.numbers("p_list");
        else r.raw_skip("p_list");
        for (double q : b.p_list) require(q >= 2.0 && q <= kMaxExponent, "plap.p_list", "entries must lie in [2, 128]");
        o.smoothing = r.optional_number("smoothing");
        if (o.smoothing) require(*o.smoothing >= 0.0, "plap.smoothing", "must be non-negative");
        o.smoothing_min = r.number("smoothing_min", o.smoothing_min);
        require(o.smoothing_min >= 0.0, "plap.smoothing_min", "must be non-negative");
        o.tol_grad = r.number("tol_grad", o.tol_grad);
        require(o.tol_grad > 0.0, "plap.tol_grad", "must be positive");
        const auto mi = r.integer("max_iter", static_cast<std::int64_t>(o.max_iter));
        require(mi >= 1, "plap.max_iter", "must be >= 1");
        o.max_iter = static_cast<std::size_t>(mi);
        o.continuation = r.boolean("continuation", o.continuation);
        const auto ps = r.integer("polish_sweeps", static_cast<std::int64_t>(o.polish_sweeps));
        require(ps >= 0, "plap.polish_sweeps", "must be >= 0");
        o.polish_sweeps = static_cast<std::size_t>(ps);
        if (r.has("reference")) b.reference = read_oracle(r.child("reference"), dim);
        else r.raw_skip("reference");
        b.tol_pos = r.optional_number("tol_pos");
        if (b.tol_pos) require(*b.tol_pos >= 0.0, "plap.tol_pos", "must be non-negative");
        r.finish();
        cfg.plap = b;
    } else {
        root.raw_skip("plap");
    }

    if (root.has("game")) {
        Reader r = root.child("game");
        GameBlock b;
        b.episodes = r.unsigned_integer("episodes", b.episodes);
        require(b.episodes >= 1, "game.episodes", "must be >= 1");
        b.seed = r.unsigned_integer("seed", 0);
        b.start = read_point(r, "start", dim);
        b.max_steps = r.unsigned_integer("max_steps", b.max_steps);
        require(b.max_steps >= 1, "game.max_steps", "must be >= 1");
        if (r.has("player_one")) {
            const std::string s = r.string("player_one");
            if (s == "greedy") b.player_one = PlayerOneKind::greedy;
            else if (s == "random") b.player_one = PlayerOneKind::random;
            else if (s == "backtracking") b.player_one = PlayerOneKind::backtracking;
            else throw ConfigError("game.player_one", fmt::format("unknown strategy '{}'", s));
        } else {
            r.raw_skip("player_one");
        }
        b.log_episodes = r.unsigned_integer("log_episodes", b.log_episodes);
        r.finish();
        cfg.game = b;
    } else {
        root.raw_skip("game");
    }

    if (root.has("patch")) {
        Reader r = root.child("patch");
        PatchBlock b;
        b.theta_tol = r.optional_number("theta_tol");
        if (b.theta_tol) require(*b.theta_tol >= 0.0, "patch.theta_tol", "must be non-negative");
        const auto sr = r.integer("stencil_radius", b.stencil_radius);
        require(sr >= 1 && sr <= 16, "patch.stencil_radius", "must lie in [1, 16]");
        b.stencil_radius = static_cast<int>(sr);
        r.finish();
        cfg.patch = b;
    } else {
        root.raw_skip("patch");
    }

    if (root.has("analyze")) {
        Reader r = root.child("analyze");
        AnalyzeBlock b;
        const std::string src = r.has("source") ? r.string("source") : (r.raw_skip("source"), std::string("dpp"));
        if (src == "dpp") b.source = FieldSource::dpp;
        else if (src == "plap") b.source = FieldSource::plap;
        else if (src == "oracle") b.source = FieldSource::oracle;
        else if (src == "csv") b.source = FieldSource::csv;
        else throw ConfigError("analyze.source", fmt::format("unknown field source '{}'", src));
        if (r.has("field")) b.field = r.string("field");
        else r.raw_skip("field");
        if (r.has("oracle")) b.oracle = read_oracle(r.child("oracle"), dim);
        else r.raw_skip("oracle");
        if (r.has("reference")) b.reference = read_oracle(r.child("reference"), dim);
        else r.raw_skip("reference");
        if (r.has("radii")) b.radii = r.numbers("radii");
        else {
            r.raw_skip("radii");
            b.radii = {4.0 * cfg.problem.spacing, 8.0 * cfg.problem.spacing};
        }
        for (double rad : b.radii) require(rad > 0.0, "analyze.radii", "radii must be positive");
        b.rho = r.number("rho", b.rho);
        require(b.rho > 0.0, "analyze.rho", "must be positive");
        b.tol_pos = r.optional_number("tol_pos");
        if (b.tol_pos) require(*b.tol_pos >= 0.0, "analyze.tol_pos", "must be non-negative");
        b.exponent = r.number("exponent", b.exponent);
        require(b.exponent > 0.0, "analyze.exponent", "must be positive");
        r.finish();
        if (b.source == FieldSource::csv && !b.field) throw ConfigError("analyze.field", "'analyze.field' is required for source 'csv'");
        if (b.source == FieldSource::oracle && !b.oracle)
            throw ConfigError("analyze.oracle", "'analyze.oracle' is required for source 'oracle'");
        cfg.analyze = b;
    } else {
        root.raw_skip("analyze");
    }

    if (root.has("sweep_eps")) {
        Reader r = root.child("sweep_eps");
        SweepEpsBlock b;
        b.epsilons = r.numbers("epsilons");
        require(!b.epsilons.empty(), "sweep_eps.epsilons", "must not be empty");
        for (double e : b.epsilons) require(e > 0.0, "sweep_eps.epsilons", "entries must be positive");
        const auto k = r.integer("steps_per_epsilon", b.steps_per_epsilon);
        require(k >= 1, "sweep_eps.steps_per_epsilon", "must be >= 1");
        b.steps_per_epsilon = static_cast<int>(k);
        r.finish();
        cfg.sweep_eps = b;
    } else {
        root.raw_skip("sweep_eps");
    }

    if (root.has("compare")) {
        Reader r = root.child("compare");
        CompareBlock b;
        if (r.has("oracle")) b.oracle = read_oracle(r.child("oracle"), dim);
        else r.raw_skip("oracle");
        b.dpp_tol = r.number("dpp_tol", b.dpp_tol);
        b.plap_tol = r.number("plap_tol", b.plap_tol);
        b.patch_tol = r.number("patch_tol", b.patch_tol);
        b.include_game = r.boolean("include_game", b.include_game);
        r.finish();
        cfg.compare = b;
    } else {
        root.raw_skip("compare");
    }

    if (root.has("output_dir")) cfg.output_dir = root.string("output_dir");
    else root.raw_skip("output_dir");
    root.finish();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", fmt::format("cannot open configuration file '{}'", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return parse_config(doc);
}

namespace {

ojson point_json(const Point& p, int dim) {
    ojson a = ojson::array({p[0]});
    if (dim == 2) a.push_back(p[1]);
    return a;
}

ojson shape_json(const Shape& s, int dim) {
    return std::visit(
        [&](const auto& v) -> ojson {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Interval>) return {{"type", "interval"}, {"a", v.a}, {"b", v.b}};
            else if constexpr (std::is_same_v<T, Rectangle>)
                return {{"type", "rectangle"}, {"a1", v.a1}, {"b1", v.b1}, {"a2", v.a2}, {"b2", v.b2}};
            else return {{"type", "ball"}, {"center", point_json(v.center, dim)}, {"radius", v.radius}};
        },
        s);
}

ojson datum_json(const Datum& d, int dim) {
    return std::visit(
        [&](const auto& v) -> ojson {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantDatum>) {
                return {{"type", "constant"}, {"value", v.value}};
            } else if constexpr (std::is_same_v<T, AffineDatum>) {
                ojson slope = ojson::array({v.slope[0]});
                if (dim == 2) slope.push_back(v.slope[1]);
                return {{"type", "affine"}, {"slope", slope}, {"offset", v.offset}};
            } else if constexpr (std::is_same_v<T, RadialDatum>) {
                return {{"type", "radial"}, {"kappa", v.kappa}, {"interior", v.interior}};
            } else if constexpr (std::is_same_v<T, EndpointsDatum>) {
                return {{"type", "endpoints"}, {"left", v.left}, {"right", v.right}};
            } else {
                ojson rows = ojson::array();
                for (const auto& [p, val] : v.entries) {
                    ojson row = point_json(p, dim);
                    row.push_back(val);
                    rows.push_back(row);
                }
                return {{"type", "table"}, {"values", rows}, {"interior", v.interior}};
            }
        },
        d);
}

ojson oracle_json(const oracles::OracleSpec& o, int dim) {
    return std::visit(
        [&](const auto& v) -> ojson {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, oracles::GradientConstraintOracle>) {
                return {{"type", "gradient_constraint_1d"}};
            } else if constexpr (std::is_same_v<T, oracles::DeadCoreOracle>) {
                return {{"type", "dead_core"},         {"radius", v.spec.radius}, {"kappa", v.spec.kappa},
                        {"lambda0", v.spec.lambda0}, {"p", v.spec.p},           {"center", point_json(v.spec.center, dim)}};
            } else {
                return {{"type", "limit_radial"}, {"radius", v.radius}, {"kappa", v.kappa}, {"center", point_json(v.center, dim)}};
            }
        },
        o);
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

ojson resolved_json(const RunConfig& c) {
    const int dim = c.problem.dim;
    ojson j;
    j["problem"] = {{"dim", dim},
                    {"shape", shape_json(c.problem.shape, dim)},
                    {"h", c.problem.spacing},
                    {"epsilon", c.problem.epsilon},
                    {"boundary", datum_json(c.problem.boundary, dim)},
                    {"lambda0", datum_json(c.problem.lambda0, dim)},
                    {"p", optional_json(c.problem.p)}};
    if (c.dpp) {
        j["dpp"] = {{"operator", to_string(c.dpp->op)},
                    {"tol", c.dpp->iteration.tol},
                    {"max_iter", c.dpp->iteration.max_iter},
                    {"gauss_seidel", c.dpp->iteration.gauss_seidel},
                    {"oracle", c.dpp->oracle ? oracle_json(*c.dpp->oracle, dim) : ojson(nullptr)}};
    }
    if (c.plap) {
        const auto& o = c.plap->options;
        j["plap"] = {{"p", o.p},
                     {"p_list", c.plap->p_list},
                     {"smoothing", optional_json(o.smoothing)},
                     {"smoothing_min", o.smoothing_min},
                     {"tol_grad", o.tol_grad},
                     {"max_iter", o.max_iter},
                     {"continuation", o.continuation},
                     {"polish_sweeps", o.polish_sweeps},
                     {"reference", c.plap->reference ? oracle_json(*c.plap->reference, dim) : ojson(nullptr)},
                     {"tol_pos", optional_json(c.plap->tol_pos)}};
    }
    if (c.game) {
        j["game"] = {{"episodes", c.game->episodes},   {"seed", c.game->seed},
                     {"start", point_json(c.game->start, dim)}, {"max_steps", c.game->max_steps},
                     {"player_one", to_string(c.game->player_one)}, {"log_episodes", c.game->log_episodes}};
    }
    if (c.patch) j["patch"] = {{"theta_tol", optional_json(c.patch->theta_tol)}, {"stencil_radius", c.patch->stencil_radius}};
    if (c.analyze) {
        const auto& a = *c.analyze;
        const char* src[] = {"dpp", "plap", "oracle", "csv"};
        j["analyze"] = {{"source", src[static_cast<int>(a.source)]},
                        {"field", a.field ? ojson(a.field->string()) : ojson(nullptr)},
                        {"oracle", a.oracle ? oracle_json(*a.oracle, dim) : ojson(nullptr)},
                        {"reference", a.reference ? oracle_json(*a.reference, dim) : ojson(nullptr)},
                        {"radii", a.radii},
                        {"rho", a.rho},
                        {"tol_pos", optional_json(a.tol_pos)},
                        {"exponent", a.exponent}};
    }
    if (c.sweep_eps) j["sweep_eps"] = {{"epsilons", c.sweep_eps->epsilons}, {"steps_per_epsilon", c.sweep_eps->steps_per_epsilon}};
    if (c.compare) {
        j["compare"] = {{"oracle", c.compare->oracle ? oracle_json(*c.compare->oracle, dim) : ojson(nullptr)},
                        {"dpp_tol", c.compare->dpp_tol},
                        {"plap_tol", c.compare->plap_tol},
                        {"patch_tol", c.compare->patch_tol},
                        {"include_game", c.compare->include_game}};
    }
    j["output_dir"] = c.output_dir ? ojson(c.output_dir->string()) : ojson(nullptr);
    return j;
}

}  // namespace deadcore
