#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edge_ops/transition.hpp"

namespace edge {

extern const char* const kVersion;

enum class Command { transition_sweep, spectrum, oracle_compare, diagnostics };
enum class OutputFormat { csv, json };

struct SpectrumRequest {
    std::string op = "airy";  // airy | bessel | scaled
    std::string method = "bisection";  // bisection | kernel
    double a = 0.0;
    int k = 3;
    double tol = 1e-6;
};

struct OracleRequest {
    std::string edge = "hard";  // hard | soft
    int samples = 500;
    int n = 200;
    double laguerre_a = 0.0;  // hard edge
    double a_n = 200.0;       // soft edge
};

struct RunManifest {
    Command command = Command::transition_sweep;
    ExperimentConfig config;
    SpectrumRequest spectrum;
    OracleRequest oracle;
    std::string output_dir = "edge_ops_out";
    OutputFormat format = OutputFormat::csv;
    bool dump_trajectories = false;
    bool dump_kernels = false;
    bool save_paths = false;
};

const char* to_string(Command c);
const std::vector<std::string>& config_keys();

/// Applies "key = value" lines onto m; '#' starts a comment. Unknown keys are rejected with the key list.
void apply_config_text(RunManifest& m, const std::string& text, const std::string& origin = "config");
void apply_setting(RunManifest& m, const std::string& key, const std::string& value);

/// Throws invalid-argument naming the violated constraint.
void validate(const RunManifest& m);

/// Command line (without argv[0]) over the config file over defaults; env_seed replaces the file seed but
/// not an explicit --seed. Returns nullopt when help was printed to `out`.
std::optional<RunManifest> parse_and_validate(const std::vector<std::string>& args, const char* env_seed,
                                              std::ostream& out);

/// Config text that reproduces m, with the seeds and version as trailing lines.
std::string replay_text(const RunManifest& m);

/// Runs the manifest, writing every artifact under m.output_dir. Returns 0, 2 when every record is flagged,
/// and throws on hard errors.
int execute(const RunManifest& m, std::ostream& log);

/// Full front end: parse, execute, map errors to exit status 1.
int run_cli(const std::vector<std::string>& args, const char* env_seed, std::ostream& out, std::ostream& err);

}  // namespace edge
