#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "deadcore/dpp.hpp"
#include "deadcore/game.hpp"
#include "deadcore/lattice.hpp"
#include "deadcore/oracles.hpp"
#include "deadcore/patch.hpp"
#include "deadcore/plap.hpp"

namespace deadcore {

struct DppBlock {
    OperatorKind op = OperatorKind::pay_or_leave;
    IterationOptions iteration;
    std::optional<oracles::OracleSpec> oracle;
};

struct PlapBlock {
    PlapOptions options;
    std::vector<double> p_list;
    std::optional<oracles::OracleSpec> reference;
    /// Free-boundary threshold used when reporting the dead core.
    std::optional<double> tol_pos;
};

struct GameBlock {
    std::size_t episodes = 1000;
    std::uint64_t seed = 0;
    Point start{0.0, 0.0};
    std::size_t max_steps = 1'000'000;
    PlayerOneKind player_one = PlayerOneKind::greedy;
    /// At most this many EpisodeRecords go to episodes.jsonl.
    std::size_t log_episodes = 1000;
};

struct PatchBlock {
    std::optional<double> theta_tol;
    int stencil_radius = 3;
};

enum class FieldSource { dpp, plap, oracle, csv };

struct AnalyzeBlock {
    FieldSource source = FieldSource::dpp;
    std::optional<std::filesystem::path> field;
    std::optional<oracles::OracleSpec> oracle;
    std::optional<oracles::OracleSpec> reference;
    std::vector<double> radii;
    double rho = 0.1;
    std::optional<double> tol_pos;
    double exponent = 1.0;
};

struct SweepEpsBlock {
    std::vector<double> epsilons;
    int steps_per_epsilon = 4;
};

struct CompareBlock {
    std::optional<oracles::OracleSpec> oracle;
    double dpp_tol = 0.05;
    double plap_tol = 0.1;
    double patch_tol = 0.05;
    bool include_game = false;
};

struct RunConfig {
    ProblemSpec problem;
    std::optional<DppBlock> dpp;
    std::optional<PlapBlock> plap;
    std::optional<GameBlock> game;
    std::optional<PatchBlock> patch;
    std::optional<AnalyzeBlock> analyze;
    std::optional<SweepEpsBlock> sweep_eps;
    std::optional<CompareBlock> compare;
    std::optional<std::filesystem::path> output_dir;
};

/// Parses and validates a configuration document. Unknown keys, wrong types
/// and out-of-range values throw ConfigError naming the dotted key path.
RunConfig parse_config(const nlohmann::json& doc);
/// Reads a JSON file; unreadable or malformed files throw ConfigError.
RunConfig load_config(const std::filesystem::path& path);

/// The configuration with every default filled in.
nlohmann::ordered_json resolved_json(const RunConfig& config);

}  // namespace deadcore
