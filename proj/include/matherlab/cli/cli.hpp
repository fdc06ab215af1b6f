#pragma once

#include "matherlab/common.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace matherlab::cli {

enum class Scenario { normal_form, alpha_beta, channel, barrier, chain, connect, gronwall };

std::optional<Scenario> parse_scenario(std::string_view name);
const char* to_string(Scenario s);
const std::vector<std::string>& scenario_names();

struct Diagnostic {
    enum class Level { error, warning };
    Level level = Level::error;
    std::string field;  // JSON pointer, "" for the document
    int line = 0;       // 1-based, 0 when unknown
    std::string message;
    std::string format() const;
};

class ConfigError : public Error {
public:
    ConfigError(std::vector<Diagnostic> d);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

// JSON text with line lookup for diagnostics.  A manifest written by a
// previous run is accepted as well: its embedded configuration and seed are
// used.
struct Config {
    nlohmann::json doc;
    std::string text;
    std::optional<unsigned> manifest_seed;

    static Config parse(const std::string& text);
    static Config load(const std::filesystem::path& path);
    int line_of(const std::string& pointer) const;
};

// Schema and invariant checks only.  Every diagnostic carries a field path.
std::vector<Diagnostic> validate(const Config& cfg, Scenario s);

struct RunOptions {
    std::filesystem::path out;
    unsigned seed = 1;
    int threads = 1;
    std::string config_path;
};

struct RunResult {
    std::vector<std::string> files;  // relative to the output directory
    nlohmann::json summary;
    std::vector<std::string> warnings;
};

// Validates, executes and writes all artifacts plus manifest.json.  Throws
// ConfigError before any computation when validation reports an error.
RunResult run(Scenario s, const Config& cfg, const RunOptions& opt);

// Writes to a sibling temporary file and renames it over the target.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

const char* version();

}  // namespace matherlab::cli
