#pragma once

#include "peakon/config.hpp"
#include "peakon/dynamics.hpp"
#include "peakon/series.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace peakon {

/// One pass/fail criterion: value compared against a threshold.
struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation;  ///< "<=", ">=", "<", ">" or "=="
    bool pass = false;
};

Check check_le(std::string name, double value, double threshold);
Check check_ge(std::string name, double value, double threshold);
Check check_lt(std::string name, double value, double threshold);
Check check_gt(std::string name, double value, double threshold);

/// A constant whose stated value disagrees with what the oracle measures.
struct Comparison {
    std::string name;
    double stated = 0.0;
    double oracle = 0.0;
    std::string adopted;
};

/// Everything a command produces. series land in series/<key>.csv, states in states/<key>.csv.
struct RunResult {
    std::string command;
    std::string name;
    RunConfig config;
    std::vector<Check> checks;
    std::vector<Comparison> comparisons;
    std::map<std::string, double> summary;
    std::map<std::string, TimeSeries> series;
    std::map<std::string, TimeSeries> states;
    std::vector<std::string> notes;
    SolverStats stats;

    bool passed() const;
    /// 3 on solver abort, 1 on a failed check, 0 otherwise.
    int exit_code() const;
};

const std::vector<std::string>& verify_suites();
const std::vector<std::string>& experiment_names();

/// Built-in defaults for a command ("simulate", "verify", "experiment", "analyze") and name.
/// Throws ConfigError for an unknown suite or experiment.
RunConfig default_config(const std::string& command, const std::string& name);

/// Defaults for (command, name), then the config file (if any), then "section.key=value"
/// overrides, then the seed. For verify and experiment an empty name falls back to
/// scenario.name from the config. The result is validated.
RunConfig resolve_config(const std::string& command, const std::string& name, const std::string& config_file,
                         const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed);

// Initial data.
PeakonState initial_particles(const RunConfig& cfg);
GridFn initial_grid(const RunConfig& cfg);

// Verify suites. Each appends its checks to `out`.
void verify_operators(const RunConfig& cfg, RunResult& out);
void verify_inequalities(const RunConfig& cfg, RunResult& out);
void verify_norms(const RunConfig& cfg, RunResult& out);
void verify_psi(const RunConfig& cfg, RunResult& out);
void verify_conservation(const RunConfig& cfg, RunResult& out);
void verify_exactness(const RunConfig& cfg, RunResult& out);
void verify_constants(const RunConfig& cfg, RunResult& out);
/// Jump law, flux, transport and antipeakon checks on their experiment defaults, then the constants.
void verify_identities(const RunConfig& cfg, RunResult& out);

// Experiments.
void experiment_stability(const RunConfig& cfg, RunResult& out);
void experiment_train(const RunConfig& cfg, RunResult& out);
void experiment_rigidity_decay(const RunConfig& cfg, RunResult& out);
void experiment_monotonicity(const RunConfig& cfg, RunResult& out);
void experiment_jump_law(const RunConfig& cfg, RunResult& out);
void experiment_flux_identity(const RunConfig& cfg, RunResult& out);
void experiment_transport_identity(const RunConfig& cfg, RunResult& out);
void experiment_antipeakon_symmetry(const RunConfig& cfg, RunResult& out);
void experiment_w11_contraction(const RunConfig& cfg, RunResult& out);

/// Dispatch on cfg.name. Unknown names throw ConfigError. A SolverAbort is caught and
/// recorded in the result.
RunResult run_verify(const RunConfig& cfg);
RunResult run_experiment(const RunConfig& cfg);
RunResult run_simulate(const RunConfig& cfg);

/// Stored trajectory of a previous run: states/trajectory.csv with columns t, q, p
/// (particles) or t, x, u (grid), plus the config echoed in manifest.json.
struct StoredRun {
    RunConfig config;
    SolverKind solver = SolverKind::particle;
    ParticleTrajectory particles;
    GridTrajectory grid;
};

TimeSeries trajectory_table(const ParticleTrajectory& traj);
TimeSeries trajectory_table(const GridTrajectory& traj);
/// Throws ConfigError when the directory, manifest or trajectory is missing or corrupt.
StoredRun load_run(const std::filesystem::path& dir);

/// Runs the diagnostics in cfg.diagnostics.list on a stored run. An empty list is a no-op.
RunResult run_analyze(const StoredRun& run, const RunConfig& cfg);

/// Writes series/, states/ and manifest.json (through a temporary file and a rename).
void write_run(const std::filesystem::path& dir, const RunResult& result, double wall_seconds);

}  // namespace peakon
