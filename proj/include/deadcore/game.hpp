#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deadcore/lattice.hpp"

namespace deadcore {

/// Counter-based generator built on the SplitMix64 finalizer.
///
///   mix(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
///            z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
///   key(seed, i) = mix(seed ^ mix(i + 0x632BE59BD9B4E019))
///   draw j       = mix(key + (j + 1) * 0x9E3779B97F4A7C15)
///
/// Episode i of a run with seed s uses the stream key(s, i). A coin is the
/// top bit of a draw (1 = Player I wins the toss).
class CounterRng {
public:
    static std::uint64_t mix(std::uint64_t z) noexcept;
    static CounterRng for_episode(std::uint64_t seed, std::uint64_t episode) noexcept;
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t next() noexcept;
    bool coin() noexcept { return (next() >> 63) != 0; }
    /// Uniform integer in [0, n) by rejection; n >= 1.
    std::uint64_t below(std::uint64_t n) noexcept;
    std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Read-only information available to a strategy at the current step: the
/// grid, the value field and the positions visited so far (current last).
struct GameView {
    const GridDomain& grid;
    const ScalarField& value;
    std::span<const NodeIndex> history;

    NodeIndex current() const { return history.back(); }
};

class PlayerOneStrategy {
public:
    virtual ~PlayerOneStrategy() = default;
    /// Called after Player II passes: true to end the game.
    virtual bool quit(const GameView& view) = 0;
    virtual NodeIndex move(const GameView& view, CounterRng& rng) = 0;
};

enum class PlayerOneKind { greedy, random, backtracking };
const char* to_string(PlayerOneKind kind) noexcept;

/// Greedy Player I: quits iff sup u - eps < 0, moves to the argmax of u over
/// the ball (lowest index on ties).
std::unique_ptr<PlayerOneStrategy> make_greedy_player();
/// Quits by the greedy rule; moves to a uniformly random ball node.
std::unique_ptr<PlayerOneStrategy> make_random_player();

/// Backtracking variant. With delta(x) = sup_{N(x)} u - u(x) and
/// delta0 = min{delta(x0), eps} / 2: at x with delta(x) > delta0 (x in X0)
/// Player I pulls to the argmax and pushes x on its stack; otherwise it
/// steps back to the top of the stack when that node is in the ball, which
/// decrements the backtrack budget d_k (initially the stack depth), and
/// falls back to greedy when the budget or the stack is exhausted.
class BacktrackingPlayer : public PlayerOneStrategy {
public:
    bool quit(const GameView& view) override;
    NodeIndex move(const GameView& view, CounterRng& rng) override;

    double delta0() const noexcept { return delta0_.value_or(0.0); }
    std::size_t budget() const noexcept { return budget_; }
    std::span<const NodeIndex> stack() const noexcept { return stack_; }

private:
    std::optional<double> delta0_;
    std::vector<NodeIndex> stack_;
    std::size_t budget_ = 0;
};

struct GameConfig {
    std::size_t episodes = 1000;
    std::uint64_t seed = 0;
    std::size_t max_steps = 1'000'000;
    NodeIndex start_node = 0;
    PlayerOneKind player_one = PlayerOneKind::greedy;
    /// Overrides every coin toss (testing hook).
    std::optional<bool> forced_coin;
    unsigned workers = 1;
};

struct EpisodeRecord {
    std::uint64_t episode = 0;
    std::vector<NodeIndex> positions;
    /// One entry per toss, in order; only Tug-of-War steps toss.
    std::vector<std::uint8_t> coin_flips;
    /// Per step: 1 when Player II passed.
    std::vector<std::uint8_t> theta2;
    /// Per step: 1 when Player I quit (only possible after a pass).
    std::vector<std::uint8_t> theta1;
    std::size_t bought_turns = 0;
    double payoff = 0.0;
    bool reached_strip = false;
    bool quit = false;
    bool truncated = false;
};

/// Plays one game from config.start_node with the episode's substream.
/// Throws ContractError when the start is not interior or the value field
/// lives on another grid.
EpisodeRecord run_episode(const GameConfig& config, const ScalarField& value, std::uint64_t episode);

struct ValueEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t completed = 0;
    std::size_t truncated = 0;
    std::size_t episodes = 0;
    std::vector<EpisodeRecord> records;
};

/// Runs config.episodes games (in parallel when config.workers > 1; results
/// do not depend on the worker count) and averages completed payoffs.
/// Throws NumericalError when every episode is truncated.
ValueEstimate estimate_value(const GameConfig& config, const ScalarField& value, bool keep_records = false);

struct AuditClass {
    std::string name;
    std::size_t count = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    bool flagged = false;
};

struct MartingaleAudit {
    std::vector<AuditClass> classes;
    bool any_flagged = false;
};

/// One-step increments of M_k = u(x_k) - eps * (turns bought before k),
/// with M = 0 after a quit, grouped by decision: "tug" (coin toss, both
/// outcomes pooled), "bought", "quit". A class is flagged when its mean
/// exceeds 3 * stderr + tolerance.
MartingaleAudit martingale_audit(std::span<const EpisodeRecord> records, const ScalarField& value,
                                 double tolerance = 1e-8);

/// One JSON object per line with the EpisodeRecord fields; positions are
/// node indices.
void write_episode_jsonl(std::ostream& out, const EpisodeRecord& record);

}  // namespace deadcore
