#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cjsr::app {

using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr int kConfigVersion = 1;
inline constexpr const char* kReportSchema = "cjsr-report/1";

/// Bad input: unreadable file, malformed JSON, schema violation, or a
/// constraint that trims to nothing. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    unsigned threads = 1;
    std::optional<std::uint64_t> seed_override;
    /// Disables branch-and-bound pruning.
    bool oracle_mode = false;
};

struct CsvTrace {
    std::string name;
    std::string contents;
};

struct RunResult {
    int exit_code = kExitOk;
    /// Empty on config errors.
    json report;
    std::vector<CsvTrace> traces;
    std::string diagnostic;
    /// File stem for outputs: output.stem, else name, else kind.
    std::string stem;
};

/// Reads and parses a config file. Throws ConfigError.
json load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the compact dump, as 16 hex digits.
std::string config_hash(const json& config);

/// Runs one config. `command` is "jsr", "markov", "rotation" or "ode" and
/// must match the config's kind; an empty command accepts any kind.
/// Never throws: config problems give exit 2, numeric trouble exit 3.
RunResult run_config(const json& config, std::string_view command, const RunOptions& opts);

RunResult run_file(const std::filesystem::path& config_path, std::string_view command, const RunOptions& opts);

/// Names of the bundled configs run by `reproduce`, relative to the config directory.
const std::vector<std::string>& reproduce_set();

/// Runs every bundled config found in `config_dir` and nests their reports.
RunResult run_reproduce(const std::filesystem::path& config_dir, const RunOptions& opts);

/// Compiled-in location of the bundled configs.
std::filesystem::path default_config_dir();

/// Output directory: explicit flag, else $CJSR_OUT_DIR, else none.
std::optional<std::filesystem::path> resolve_out_dir(const std::optional<std::filesystem::path>& flag);

/// Writes <stem>.report.json and <stem>.<trace>.csv into `dir`; returns the paths written.
std::vector<std::filesystem::path> write_outputs(const RunResult& result, const std::filesystem::path& dir,
                                                 std::string_view stem);

/// Pretty dump with a trailing newline.
std::string dump_report(const json& report);

/// Copy of `report` with every "timing" member removed, at any depth.
json strip_timing(json report);

/// Structural check against the report schema; returns the violations.
std::vector<std::string> validate_report(const json& report);

}  // namespace cjsr::app
