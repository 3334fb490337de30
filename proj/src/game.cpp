#include "deadcore/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/core.h>
#include <json.hpp>

#include "deadcore/errors.hpp"
#include "deadcore/parallel.hpp"

namespace deadcore {
namespace {

struct BallStats {
    double sup;
    double inf;
    NodeIndex argmax;
    NodeIndex argmin;
};

BallStats ball_stats(const GridDomain& g, const ScalarField& u, NodeIndex x) {
    BallStats b{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), x, x};
    for (NodeIndex y : g.neighbors(x)) {
        if (u[y] > b.sup) {
            b.sup = u[y];
            b.argmax = y;
        }
        if (u[y] < b.inf) {
            b.inf = u[y];
            b.argmin = y;
        }
    }
    return b;
}

class GreedyPlayer : public PlayerOneStrategy {
public:
    bool quit(const GameView& v) override {
        return ball_stats(v.grid, v.value, v.current()).sup - v.grid.epsilon() < 0.0;
    }
    NodeIndex move(const GameView& v, CounterRng&) override { return ball_stats(v.grid, v.value, v.current()).argmax; }
};

class RandomPlayer : public GreedyPlayer {
public:
    NodeIndex move(const GameView& v, CounterRng& rng) override {
        const auto ball = v.grid.neighbors(v.current());
        return ball[static_cast<std::size_t>(rng.below(ball.size()))];
    }
};

std::unique_ptr<PlayerOneStrategy> make_player(PlayerOneKind kind) {
    switch (kind) {
        case PlayerOneKind::greedy: return make_greedy_player();
        case PlayerOneKind::random: return make_random_player();
        case PlayerOneKind::backtracking: return std::make_unique<BacktrackingPlayer>();
    }
    throw ContractError("unknown strategy");
}

}  // namespace

std::uint64_t CounterRng::mix(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

CounterRng CounterRng::for_episode(std::uint64_t seed, std::uint64_t episode) noexcept {
    return CounterRng(mix(seed ^ mix(episode + 0x632BE59BD9B4E019ULL)));
}

std::uint64_t CounterRng::next() noexcept {
    ++counter_;
    return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t r = next();
        if (r < limit) return r % n;
    }
}

const char* to_string(PlayerOneKind kind) noexcept {
    switch (kind) {
        case PlayerOneKind::greedy: return "greedy";
        case PlayerOneKind::random: return "random";
        case PlayerOneKind::backtracking: return "backtracking";
    }
    return "unknown";
}

std::unique_ptr<PlayerOneStrategy> make_greedy_player() { return std::make_unique<GreedyPlayer>(); }
std::unique_ptr<PlayerOneStrategy> make_random_player() { return std::make_unique<RandomPlayer>(); }

bool BacktrackingPlayer::quit(const GameView& v) {
    return ball_stats(v.grid, v.value, v.current()).sup - v.grid.epsilon() < 0.0;
}

NodeIndex BacktrackingPlayer::move(const GameView& v, CounterRng&) {
    const NodeIndex x = v.current();
    const BallStats b = ball_stats(v.grid, v.value, x);
    const double gap = b.sup - v.value[x];
    if (!delta0_) {
        const BallStats first = ball_stats(v.grid, v.value, v.history.front());
        delta0_ = 0.5 * std::min(first.sup - v.value[v.history.front()], v.grid.epsilon());
    }
    if (gap > *delta0_) {
        stack_.push_back(x);
        budget_ = stack_.size();
        return b.argmax;
    }
    while (!stack_.empty() && budget_ > 0) {
        const NodeIndex back = stack_.back();
        stack_.pop_back();
        if (back != x && v.grid.distance(back, x) <= v.grid.epsilon() * (1.0 + 1e-12)) {
            --budget_;
            return back;
        }
    }
    return b.argmax;
}

EpisodeRecord run_episode(const GameConfig& config, const ScalarField& value, std::uint64_t episode) {
    const auto& g = value.grid();
    if (config.start_node < 0 || static_cast<std::size_t>(config.start_node) >= g.size() || !g.is_interior(config.start_node))
        throw ContractError(fmt::format("start node {} is not an interior node", config.start_node));
    const double eps = g.epsilon();
    CounterRng rng = CounterRng::for_episode(config.seed, episode);
    auto player_one = make_player(config.player_one);

    EpisodeRecord rec;
    rec.episode = episode;
    rec.positions.push_back(config.start_node);
    while (true) {
        const NodeIndex x = rec.positions.back();
        if (!g.is_interior(x)) {
            rec.reached_strip = true;
            rec.payoff = value[x] - eps * static_cast<double>(rec.bought_turns);
            break;
        }
        if (rec.theta2.size() == config.max_steps) {
            rec.truncated = true;
            rec.payoff = -eps * static_cast<double>(rec.bought_turns);
            break;
        }
        const GameView view{g, value, rec.positions};
        const BallStats b = ball_stats(g, value, x);
        const double mid = 0.5 * (b.sup + b.inf);
        const bool pass = std::max(0.0, b.sup - eps) <= mid;
        rec.theta2.push_back(pass ? 1 : 0);
        if (!pass) {
            const bool heads = config.forced_coin ? *config.forced_coin : rng.coin();
            rec.coin_flips.push_back(heads ? 1 : 0);
            rec.theta1.push_back(0);
            rec.positions.push_back(heads ? player_one->move(view, rng) : b.argmin);
            continue;
        }
        if (player_one->quit(view)) {
            rec.theta1.push_back(1);
            rec.quit = true;
            rec.payoff = -eps * static_cast<double>(rec.bought_turns);
            break;
        }
        rec.theta1.push_back(0);
        ++rec.bought_turns;
        rec.positions.push_back(player_one->move(view, rng));
    }
    return rec;
}

ValueEstimate estimate_value(const GameConfig& config, const ScalarField& value, bool keep_records) {
    if (config.episodes == 0) throw ConfigError("episodes", "episodes must be >= 1");
    std::vector<EpisodeRecord> records(config.episodes);
    parallel_for(config.episodes, config.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) records[i] = run_episode(config, value, i);
    });

    ValueEstimate est;
    est.episodes = config.episodes;
    double sum = 0.0;
    for (const auto& r : records) {
        if (r.truncated) {
            ++est.truncated;
            continue;
        }
        ++est.completed;
        sum += r.payoff;
    }
    if (est.completed == 0)
        throw NumericalError(fmt::format("all {} episodes hit max_steps = {}; no value estimate", config.episodes, config.max_steps));
    est.mean = sum / static_cast<double>(est.completed);
    if (est.completed > 1) {
        double ss = 0.0;
        for (const auto& r : records)
            if (!r.truncated) ss += (r.payoff - est.mean) * (r.payoff - est.mean);
        est.stderr_ = std::sqrt(ss / static_cast<double>(est.completed - 1) / static_cast<double>(est.completed));
    }
    if (keep_records) est.records = std::move(records);
    return est;
}

MartingaleAudit martingale_audit(std::span<const EpisodeRecord> records, const ScalarField& value, double tolerance) {
    const double eps = value.grid().epsilon();
    struct Acc {
        std::size_t n = 0;
        double sum = 0.0;
        double sumsq = 0.0;
    };
    Acc acc[3];
    for (const auto& r : records) {
        if (r.truncated) continue;
        std::size_t pos = 0;
        for (std::size_t k = 0; k < r.theta2.size(); ++k) {
            const double before = value[r.positions[pos]];
            int cls;
            double inc;
            if (!r.theta2[k]) {
                cls = 0;
                inc = value[r.positions[pos + 1]] - before;
                ++pos;
            } else if (r.theta1[k]) {
                cls = 2;
                inc = 0.0 - before;
            } else {
                cls = 1;
                inc = value[r.positions[pos + 1]] - eps - before;
                ++pos;
            }
            acc[cls].n += 1;
            acc[cls].sum += inc;
            acc[cls].sumsq += inc * inc;
        }
    }
    MartingaleAudit audit;
    const char* names[3] = {"tug", "bought", "quit"};
    for (int c = 0; c < 3; ++c) {
        AuditClass ac;
        ac.name = names[c];
        ac.count = acc[c].n;
        if (ac.count > 0) {
            const double n = static_cast<double>(ac.count);
            ac.mean = acc[c].sum / n;
            if (ac.count > 1) {
                const double var = std::max(0.0, (acc[c].sumsq - n * ac.mean * ac.mean) / (n - 1.0));
                ac.stderr_ = std::sqrt(var / n);
            }
            ac.flagged = ac.mean > 3.0 * ac.stderr_ + tolerance;
        }
        audit.any_flagged = audit.any_flagged || ac.flagged;
        audit.classes.push_back(ac);
    }
    return audit;
}

void write_episode_jsonl(std::ostream& out, const EpisodeRecord& r) {
    nlohmann::ordered_json j;
    j["episode"] = r.episode;
    j["positions"] = r.positions;
    j["coin_flips"] = r.coin_flips;
    j["theta2"] = r.theta2;
    j["theta1"] = r.theta1;
    j["bought_turns"] = r.bought_turns;
    j["payoff"] = r.payoff;
    j["reached_strip"] = r.reached_strip;
    j["quit"] = r.quit;
    j["truncated"] = r.truncated;
    out << j.dump() << '\n';
}

}  // namespace deadcore
