#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twophase/diagnostics.hpp"
#include "twophase/ibvp.hpp"
#include "twophase/model.hpp"
#include "twophase/steady.hpp"

namespace twophase::cli {

/// Effective configuration: every known key with its canonical value text.
/// Keys are `section.key` plus the top-level `seed`. An empty value means
/// "unset" for optional keys.
class ExperimentConfig {
public:
    /// All keys at their defaults.
    ExperimentConfig();

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    /// Assigns a known key; throws ConfigError naming unknown keys or
    /// values of the wrong type.
    void set(const std::string& key, const std::string& value);
    void apply_override(const std::string& assignment);  // "section.key=value"

    bool is_set(const std::string& key) const;
    double real(const std::string& key) const;
    std::optional<double> optional_real(const std::string& key) const;
    long long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    const std::string& text(const std::string& key) const;

    /// FNV-1a (64 bit, hex) of the sorted canonical `key=value` lines.
    std::string hash() const;
    /// `key = value` lines in key order; reparses to the same hash.
    std::string echo() const;

    ModelSpec model_spec() const;
    Grid1D grid() const;
    SteadySolveOptions steady_options() const;
    EvolveOptions evolve_options() const;
    PerturbationSpec perturbation() const;
    std::vector<WeightTag> weights() const;
    std::vector<FormName> forms() const;
    FormContext form_context() const;
    std::uint64_t seed() const;

    /// Builds every typed view once so invariant violations surface at load.
    void validate() const;

private:
    std::map<std::string, std::string> values_;
};

/// Parses `section.key = value` lines; `#` starts a comment.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");
ExperimentConfig parse_config(const std::string& path);

/// Keys the parser accepts, in order.
std::vector<std::string> known_keys();

enum class RunStatus { Completed, Aborted, Truncated };
const char* to_string(RunStatus s);

struct RunRecord {
    std::string subcommand;
    std::string config_hash;
    std::string version;
    std::string start_time;
    std::string end_time;
    RunStatus status = RunStatus::Completed;
    std::string reason;
    int exit_code = 0;
    std::uint64_t seed = 0;
    std::string directory;
    std::vector<std::string> outputs;

    std::string to_json() const;
};

const std::vector<std::string>& subcommands();

std::string version_string();

/// --out wins, then output.directory, then $TWOPHASE_OUT, then "twophase_out".
std::string resolve_output_dir(const std::optional<std::string>& cli_out, const ExperimentConfig& config);

struct RunOptions {
    std::string out_dir;
    int workers = 1;
};

/// Runs one subcommand and writes `<prefix>run.json` into the output
/// directory. Module errors are caught and recorded; the returned record
/// carries the exit code (0, or 2..5).
RunRecord run_subcommand(const std::string& name, const ExperimentConfig& config, const RunOptions& options);

/// Record for a failure before a config was available (e.g. parse errors).
RunRecord record_failure(const std::string& name, const std::string& out_dir, int exit_code,
                         const std::string& reason);

}  // namespace twophase::cli
