#ifndef PL_CLI_COMMANDS_HPP
#define PL_CLI_COMMANDS_HPP

#include "config.hpp"

#include "pl/error.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pl::cli
{

struct CommandOptions
{
    std::string command;
    std::filesystem::path config;
    std::optional<std::string> fixture; ///< only "paper" is known
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;
    int parallel = 1;
};

struct CommandResult
{
    std::vector<std::filesystem::path> files;
    json report; ///< also written as <command>_report.json
};

const std::vector<std::string> &command_names();

/// Loads the config and runs one workflow. Throws pl::Error subclasses.
CommandResult run_command(const CommandOptions &options);

/// Same, on an already loaded configuration.
CommandResult run_command(const std::string &command, const RunConfig &config,
                          const std::filesystem::path &out_dir, int parallel);

/// Exit status for an error kind: 2 validation, 3 fit, 4 I/O.
int exit_code(const Error &e);

/// Single-line JSON diagnostic.
std::string diagnostic(const std::string &level, const json &fields);

} // namespace pl::cli

#endif
