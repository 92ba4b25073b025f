#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tf2/chat.hpp"

namespace tf2::cli {

/// Settings shared by every subcommand, read from `--config FILE`:
///
///     seed = 42
///     pricing = pricing.cfg
///     log_level = info
///     output_dir = out
///
///     [endpoint local-vllm]
///     base_url = http://localhost:8000/v1
///     model = tf2-12b
///
/// Relative paths resolve against the config file's directory.
struct GlobalConfig {
    std::map<std::string, EndpointConfig> endpoints;
    std::optional<std::filesystem::path> pricing_path;
    std::optional<std::uint64_t> default_seed;
    std::string log_level = "info";
    std::optional<std::filesystem::path> output_dir;

    static GlobalConfig load(const std::filesystem::path& path);

    /// A profile name from [endpoint NAME], or a path to an endpoint file
    /// whose top-level keys describe one endpoint.
    EndpointConfig resolve_endpoint(const std::string& name_or_path) const;
};

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitTransport = 2,
};

/// Parses argv and runs one subcommand. Normal output goes to `out`;
/// usage, logs and errors to `err`. Never throws.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
             const ClientFactory& factory = {});

} // namespace tf2::cli
