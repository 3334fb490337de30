#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace deadcore {

/// Process exit statuses of the command-line tool.
enum ExitStatus : int { exit_ok = 0, exit_usage = 1, exit_config = 2, exit_numerical = 3 };

struct RunOptions {
    std::filesystem::path config_path;
    /// Highest-priority output directory; then $DEADCORE_OUTPUT_DIR, then the
    /// config's output_dir.
    std::optional<std::filesystem::path> out;
    /// Replaces game.seed.
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    /// Adds wall-clock seconds to report.json (artifacts stop being reproducible).
    bool timings = false;
};

/// The recognised subcommand names, in help order.
const std::vector<std::string>& subcommands();

/// Runs one subcommand end to end and returns its exit status. Progress goes
/// to `log`; configuration and numerical failures are described on `err`.
int run(const std::string& subcommand, const RunOptions& options, std::ostream& log, std::ostream& err);

}  // namespace deadcore
