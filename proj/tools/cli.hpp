#ifndef SUPERRAD_CLI_HPP
#define SUPERRAD_CLI_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace superrad::cli
{
// Exit codes are a stable contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;     // usage or configuration error
inline constexpr int kExitNumerical = 2; // numerical or model error

struct RunManifest
{
    std::string command;
    std::string config_path; // empty when running on defaults
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string output_dir;
    std::uint64_t seed = 0;
    std::string timestamp; // ISO-8601 UTC; SOURCE_DATE_EPOCH pins it

    nlohmann::json to_json() const;
    // '#'-prefixed lines for CSV and plot-script headers.
    std::string comment_block() const;
};

// Every recognized configuration key with its default value.
nlohmann::json default_config();

// Parses a JSON config file; parse errors report line and column.
nlohmann::json load_config_file(const std::filesystem::path &path);

// Merges `user` over the defaults, rejecting unknown keys.
nlohmann::json merge_config(const nlohmann::json &user);

// KEY=VALUE; VALUE is read as JSON when it parses, otherwise as a string.
std::pair<std::string, nlohmann::json> parse_override(const std::string &assignment);

struct Invocation
{
    nlohmann::json config; // effective, defaults applied
    RunManifest manifest;
    std::filesystem::path output_dir;
};

nlohmann::json cmd_params(const Invocation &inv, std::ostream &out);
void cmd_gamma(const Invocation &inv, std::ostream &out);
void cmd_decay(const Invocation &inv, std::ostream &out);
void cmd_partition(const Invocation &inv, std::ostream &out);
void cmd_simulate(const Invocation &inv, std::ostream &out);

// Full command-line entry point; returns the process exit code.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace superrad::cli

#endif // SUPERRAD_CLI_HPP
