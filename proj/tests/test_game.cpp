#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "deadcore/dpp.hpp"
#include "deadcore/errors.hpp"
#include "deadcore/game.hpp"

using namespace deadcore;

namespace {

ProblemSpec gc_spec() {
    ProblemSpec s;
    s.dim = 1;
    s.shape = Interval{-1.0, 4.0};
    s.epsilon = 0.05;
    s.spacing = 0.0125;
    s.boundary = AffineDatum{{-0.4, 0.0}, 0.6};
    return s;
}

const ScalarField& gc_value() {
    static const ScalarField u = [] {
        const ProblemSpec s = gc_spec();
        const ScalarField F = sample_field(build_grid(s), s.boundary);
        return value_iterate(F, OperatorKind::pay_or_leave, {.tol = 1e-11}).field;
    }();
    return u;
}

GameConfig gc_config(std::size_t episodes, std::uint64_t seed) {
    GameConfig c;
    c.episodes = episodes;
    c.seed = seed;
    c.start_node = *gc_value().grid().find_point({2.0, 0.0});
    return c;
}

}  // namespace

TEST_CASE("SplitMix64 finalizer reproduces the reference stream") {
    // a SplitMix64 generator seeded with s emits mix(s + k * golden).
    CHECK(CounterRng::mix(0) == 0);
    CounterRng zero(0);
    CHECK(zero.next() == 0xE220A8397B1DCDAFULL);
    CounterRng r(1234567);
    CHECK(r.next() == 6457827717110365317ULL);
    CHECK(r.next() == 3203168211198807973ULL);
    CHECK(r.draws() == 2);
}

TEST_CASE("episode streams are deterministic and distinct") {
    CounterRng a = CounterRng::for_episode(9, 3), b = CounterRng::for_episode(9, 3);
    CounterRng c = CounterRng::for_episode(9, 4), d = CounterRng::for_episode(10, 3);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t x = a.next();
        CHECK(x == b.next());
        seen.insert(x);
        seen.insert(c.next());
        seen.insert(d.next());
    }
    CHECK(seen.size() == 300);
    CounterRng e(42);
    std::size_t counts[5] = {};
    for (int i = 0; i < 5000; ++i) ++counts[e.below(5)];
    for (std::size_t k : counts) CHECK(std::abs(static_cast<double>(k) - 1000.0) < 150.0);
    CHECK(e.below(1) == 0);
}

TEST_CASE("results do not depend on the worker count") {
    GameConfig c = gc_config(400, 77);
    const ValueEstimate one = estimate_value(c, gc_value(), true);
    c.workers = 4;
    const ValueEstimate four = estimate_value(c, gc_value(), true);
    CHECK(one.mean == four.mean);
    CHECK(one.stderr_ == four.stderr_);
    for (std::size_t i = 0; i < one.records.size(); ++i) {
        CHECK(one.records[i].positions == four.records[i].positions);
        CHECK(one.records[i].payoff == four.records[i].payoff);
    }
    c.seed = 78;
    CHECK(estimate_value(c, gc_value()).mean != one.mean);
}

TEST_CASE("payoff accounting and decision records are consistent") {
    const GameConfig c = gc_config(300, 5);
    const ValueEstimate est = estimate_value(c, gc_value(), true);
    const double eps = gc_value().grid().epsilon();
    for (const EpisodeRecord& r : est.records) {
        REQUIRE_FALSE(r.truncated);
        CHECK(r.theta1.size() == r.theta2.size());
        const std::size_t passes = std::accumulate(r.theta2.begin(), r.theta2.end(), std::size_t{0});
        CHECK(r.coin_flips.size() == r.theta2.size() - passes);
        const std::size_t quits = std::accumulate(r.theta1.begin(), r.theta1.end(), std::size_t{0});
        CHECK(quits == (r.quit ? 1u : 0u));
        CHECK(r.bought_turns == passes - quits);
        CHECK(r.positions.size() == r.theta2.size() + 1 - quits);
        CHECK(r.reached_strip != r.quit);
        const double terminal = r.quit ? 0.0 : gc_value()[r.positions.back()];
        CHECK(r.payoff == doctest::Approx(terminal - eps * static_cast<double>(r.bought_turns)));
        for (std::size_t k = 0; k + 1 < r.positions.size(); ++k)
            CHECK(gc_value().grid().distance(r.positions[k], r.positions[k + 1]) <= eps * (1 + 1e-12));
    }
}

TEST_CASE("forced coins give every toss to one player") {
    GameConfig c = gc_config(1, 0);
    c.forced_coin = false;
    const EpisodeRecord low = run_episode(c, gc_value(), 0);
    CHECK(low.reached_strip);
    CHECK(low.bought_turns == 0);
    CHECK(gc_value().grid().point(low.positions.back())[0] > 4.0);
    for (auto f : low.coin_flips) CHECK(f == 0);
    c.forced_coin = true;
    const EpisodeRecord high = run_episode(c, gc_value(), 0);
    // Player I pulls left until u falls below eps around the token, then quits.
    CHECK(high.quit);
    CHECK(std::abs(gc_value().grid().point(high.positions.back())[0]) <= 0.05 + 1e-12);
    for (auto f : high.coin_flips) CHECK(f == 1);
}

TEST_CASE("Player I quits when II passes and sup u < eps") {
    ProblemSpec s;
    s.dim = 1;
    s.shape = Interval{0.0, 1.0};
    s.spacing = 0.05;
    s.epsilon = 0.1;
    const ScalarField u(build_grid(s), 0.01);
    GameConfig c;
    c.start_node = *u.grid().find_point({0.5, 0.0});
    const EpisodeRecord r = run_episode(c, u, 0);
    CHECK(r.quit);
    CHECK(r.payoff == 0.0);
    CHECK(r.theta1 == std::vector<std::uint8_t>{1});
    CHECK(r.positions.size() == 1);
}

TEST_CASE("game value matches the DPP solution within 3 stderr + 2 eps") {
    const GameConfig c = gc_config(2000, 20240611);
    const ValueEstimate est = estimate_value(c, gc_value(), true);
    const double u0 = gc_value()[c.start_node];
    CHECK(std::abs(est.mean - u0) <= 3.0 * est.stderr_ + 2.0 * gc_value().grid().epsilon());
    CHECK(est.completed == 2000);
    const MartingaleAudit audit = martingale_audit(est.records, gc_value());
    CHECK_FALSE(audit.any_flagged);
    CHECK(audit.classes.size() == 3);
    CHECK(audit.classes[0].count > 0);
}

TEST_CASE("backtracking player pulls up, then steps back within budget") {
    ProblemSpec s;
    s.dim = 1;
    s.shape = Interval{0.0, 1.0};
    s.spacing = 0.1;
    s.epsilon = 0.1;
    const ScalarField u = sample_function(build_grid(s), [](const Point& p) { return std::min(p[0], 0.5); });
    const auto& g = u.grid();
    auto at = [&](double x) { return *g.find_point({x, 0.0}); };
    BacktrackingPlayer bp;
    CounterRng rng(1);
    std::vector<NodeIndex> hist{at(0.3)};
    CHECK(bp.move(GameView{g, u, hist}, rng) == at(0.4));
    CHECK(bp.delta0() == doctest::Approx(0.05));
    hist.push_back(at(0.4));
    CHECK(bp.move(GameView{g, u, hist}, rng) == at(0.5));
    CHECK(bp.budget() == 2);
    hist.push_back(at(0.5));
    CHECK(bp.move(GameView{g, u, hist}, rng) == at(0.4));
    CHECK(bp.budget() == 1);
    CHECK(bp.stack().size() == 1);

    GameConfig c = gc_config(200, 3);
    c.player_one = PlayerOneKind::backtracking;
    CHECK(estimate_value(c, gc_value()).completed == 200);
}

TEST_CASE("invalid runs raise the documented errors") {
    GameConfig c = gc_config(10, 1);
    c.episodes = 0;
    CHECK_THROWS_AS(estimate_value(c, gc_value()), ConfigError);
    c.episodes = 10;
    c.max_steps = 1;
    CHECK_THROWS_AS(estimate_value(c, gc_value()), NumericalError);
    c.max_steps = 1000;
    c.start_node = gc_value().grid().strip_nodes().front();
    CHECK_THROWS_AS(run_episode(c, gc_value(), 0), ContractError);
}

TEST_CASE("episode JSONL carries every record field") {
    const GameConfig c = gc_config(1, 11);
    const EpisodeRecord r = run_episode(c, gc_value(), 0);
    std::ostringstream os;
    write_episode_jsonl(os, r);
    const std::string line = os.str();
    REQUIRE(line.back() == '\n');
    CHECK(line.find('\n') == line.size() - 1);
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"episode", "positions", "coin_flips", "theta2", "theta1", "bought_turns", "payoff",
                          "reached_strip", "quit", "truncated"})
        CHECK(j.contains(k));
    CHECK(j["positions"].size() == r.positions.size());
    CHECK(j["payoff"].get<double>() == r.payoff);
}
