#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char **argv)
{
    using pl::cli::diagnostic;
    using pl::cli::json;

    pl::cli::CommandOptions options;
    std::uint64_t seed = 0;
    std::string out_dir = "out";

    CLI::App app{"Cavity-QED toolkit for a single emitter in a fiber micro-cavity", "pl"};
    app.add_option("command", options.command, "Workflow to run")
        ->required()
        ->check(CLI::IsMember(pl::cli::command_names()));
    app.add_option("--config", options.config, "JSON run configuration")->required();
    app.add_option("--fixture", options.fixture, "Load a fixture set (paper)");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    auto *seed_opt = app.add_option("--seed", seed, "Seed for stochastic sweeps (overrides the config)");
    app.add_option("--parallel", options.parallel, "Worker threads for independent evaluations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        std::cerr << diagnostic("error", {{"kind", "validation"}, {"code", "usage"}, {"message", e.what()}, {"exit", 2}})
                  << "\n";
        return 2;
    }
    if (*seed_opt)
        options.seed = seed;
    options.out_dir = out_dir;

    try
    {
        const auto result = pl::cli::run_command(options);
        for (const auto &f : result.files)
            std::cerr << diagnostic("info", {{"command", options.command}, {"event", "wrote"}, {"path", f.string()}})
                      << "\n";
        std::cerr << diagnostic("info", {{"command", options.command}, {"event", "done"}, {"files", result.files.size()}})
                  << "\n";
        return 0;
    }
    catch (const pl::Error &e)
    {
        const int code = pl::cli::exit_code(e);
        const char *kind = code == 2 ? "validation" : code == 3 ? "fit" : "io";
        std::cerr << diagnostic("error", {{"command", options.command},
                                          {"kind", kind},
                                          {"code", e.code()},
                                          {"message", e.what()},
                                          {"exit", code}})
                  << "\n";
        return code;
    }
    catch (const std::exception &e)
    {
        std::cerr << diagnostic("error", {{"command", options.command}, {"kind", "internal"}, {"message", e.what()}, {"exit", 1}})
                  << "\n";
        return 1;
    }
}
