#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace peakon {

/// Malformed config text, unknown keys, or out-of-range values. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// section -> key -> raw value, in the order the text defines them.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

/// Parses "[section]" headers and "key = value" lines. '#' and ';' start comments.
/// Keys outside a section, duplicate keys and lines without '=' are errors.
RawConfig parse_config_text(const std::string& text);
RawConfig parse_config_file(const std::filesystem::path& path);

/// Applies "section.key=value" on top of `raw`.
void apply_override(RawConfig& raw, const std::string& assignment);

enum class SolverKind { particle, grid };

/// Shapes of initial data understood by the runner.
///   peakon     single peakon c at x0
///   perturbed  peakon plus a truncated Gaussian momentum bump of mass epsilon * 2c centred
///              at x0 + bump_offset with width bump_width, discretized with `spacing`
///   train      peakons speeds[j] at x0 + (j - n + 1) * gap, each perturbed as above
///   cloud      perturbed peakon plus a seeded random Y+ cloud of mass epsilon * 2c
///   measure    measure JSON from measure_file
///   smooth     u = (1 - d^2)^{-1} y, y = amplitude (e^{-(x+3)^2/8} + e^{-(x-4)^2/4} / 2)
///   mollified  grid sample of the peakon c at x0 convolved with the mollifier of index n
struct InitialSpec {
    std::string kind = "peakon";
    double c = 1.0;
    double x0 = 0.0;
    std::vector<double> speeds{1.0, 2.0, 3.0};
    double gap = 30.0;
    double epsilon = 0.01;
    double bump_offset = 5.0;
    double bump_width = 1.0;
    double spacing = 0.05;
    double amplitude = 0.2;
    int mollifier = 4;
    std::string measure_file;
};

struct DiagnosticSpec {
    std::vector<double> R_list{5.0, 10.0, 15.0, 20.0};
    double gamma = 0.0;
    double alpha = 1.0 / 3.0;
    double theta = 0.5;
    double window_A = 10.0;
    double z = -20.0;
    double t0 = -1.0;  ///< negative: the middle of the run
    std::vector<std::string> list;  ///< diagnostics for `analyze`
};

struct RunConfig {
    std::string name;  ///< experiment or verify suite; empty for simulate
    double b = 3.0;
    SolverKind solver = SolverKind::particle;
    double filter = 0.0;
    double cfl = 0.5;
    std::size_t samples = 1000;  ///< random trials in the verify suites

    double L = 200.0;
    std::size_t N = 2048;

    double T = 10.0;
    double dt = 0.01;
    double output_every = 1.0;

    InitialSpec initial;
    DiagnosticSpec diagnostics;

    std::uint64_t seed = 1;

    /// Throws ConfigError when a physical parameter is out of range or N is not a power of two.
    void validate() const;
};

/// Writes every entry of `raw` into `cfg`. Unknown sections or keys are errors.
void apply_raw(RunConfig& cfg, const RawConfig& raw);

/// The config as sectioned key=value text, readable by parse_config_text.
std::string to_config_text(const RunConfig& cfg);

}  // namespace peakon
