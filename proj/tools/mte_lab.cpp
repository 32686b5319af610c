#include "mte/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Multinomial marginal treatment effect laboratory"};
    mte::run::RunOptions opts;
    std::string command;
    std::string positional;
    std::uint64_t seed = 0;
    app.add_option("--command", command, "verify | figure1 | identify | thresholds | estimate | all");
    app.add_option("command_name", positional, "command, as an alternative to --command");
    app.add_option("--config", opts.config, "scenario config (JSON)")->required();
    app.add_option("--out", opts.out, "output directory")->required();
    auto* seed_opt = app.add_option("--seed", seed, "root seed overriding the config");
    app.add_option("--threads", opts.threads, "worker threads (default: MTE_THREADS or 1)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : mte::run::kExitError;
    }
    if (!command.empty() && !positional.empty() && command != positional) {
        std::cerr << R"({"error":{"kind":"usage","message":"conflicting commands","command":""}})" << std::endl;
        return mte::run::kExitError;
    }
    opts.command = command.empty() ? positional : command;
    if (*seed_opt)
        opts.seed = seed;
    return mte::run::execute(opts, std::cerr);
}
