#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "deadcore/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"deadcore: lattice solvers for the limiting dead-core free-boundary problem"};
    app.require_subcommand(1);

    deadcore::RunOptions options;
    std::string out;
    std::uint64_t seed = 0;
    std::string chosen;

    const std::map<std::string, std::string> about{
        {"solve-dpp", "value iteration for the lattice DPP"},
        {"solve-plap", "minimize the discrete p-energy"},
        {"simulate", "Monte-Carlo estimate of the game value"},
        {"patch", "build h, z, w and the patched function v"},
        {"analyze", "free-boundary measurements of a field"},
        {"compare", "cross-check solvers against each other and an oracle"},
        {"sweep-eps", "DPP solutions over a list of epsilons"},
        {"sweep-p", "p-energy minimizers over a list of exponents"},
    };
    for (const auto& name : deadcore::subcommands()) {
        const auto it = about.find(name);
        CLI::App* sub = app.add_subcommand(name, it == about.end() ? std::string() : it->second);
        sub->add_option("--config", options.config_path, "JSON configuration file")->required();
        sub->add_option("--out", out, "output directory (overrides DEADCORE_OUTPUT_DIR and output_dir)");
        sub->add_option("--seed", seed, "game seed (overrides game.seed)");
        sub->add_option("--workers", options.workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--timings", options.timings, "record wall-clock times in report.json");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : deadcore::exit_usage;
    }
    for (const auto* sub : app.get_subcommands()) {
        if (sub->count("--out")) options.out = out;
        if (sub->count("--seed")) options.seed = seed;
    }
    return deadcore::run(chosen, options, std::cout, std::cerr);
}
