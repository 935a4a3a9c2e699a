#include "peakon/config.hpp"

#include "peakon/series.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace peakon {

namespace {

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_real(const std::string& key, const std::string& text)
{
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
        throw ConfigError("'" + key + "' expects a finite number, got '" + text + "'");
    return v;
}

std::uint64_t to_count(const std::string& key, const std::string& text)
{
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + text + "'");
    errno = 0;
    const auto v = std::strtoull(text.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ConfigError("'" + key + "' is out of range");
    return v;
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> to_reals(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(to_real(key, item));
    return out;
}

std::string join_reals(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_real(v[i]);
    return out;
}

std::string join(const std::vector<std::string>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters()
{
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"scenario",
         {
             {"name", [](RunConfig& c, const std::string&, const std::string& v) { c.name = v; }},
             {"b", [](RunConfig& c, const std::string& k, const std::string& v) { c.b = to_real(k, v); }},
             {"solver",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  if (v == "particle")
                      c.solver = SolverKind::particle;
                  else if (v == "grid")
                      c.solver = SolverKind::grid;
                  else
                      throw ConfigError("solver must be 'particle' or 'grid', got '" + v + "'");
              }},
             {"filter", [](RunConfig& c, const std::string& k, const std::string& v) { c.filter = to_real(k, v); }},
             {"cfl", [](RunConfig& c, const std::string& k, const std::string& v) { c.cfl = to_real(k, v); }},
             {"samples", [](RunConfig& c, const std::string& k, const std::string& v) { c.samples = to_count(k, v); }},
             {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_count(k, v); }},
         }},
        {"grid",
         {
             {"L", [](RunConfig& c, const std::string& k, const std::string& v) { c.L = to_real(k, v); }},
             {"N", [](RunConfig& c, const std::string& k, const std::string& v) { c.N = to_count(k, v); }},
         }},
        {"time",
         {
             {"T", [](RunConfig& c, const std::string& k, const std::string& v) { c.T = to_real(k, v); }},
             {"dt", [](RunConfig& c, const std::string& k, const std::string& v) { c.dt = to_real(k, v); }},
             {"output_every",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.output_every = to_real(k, v); }},
         }},
        {"initial",
         {
             {"kind", [](RunConfig& c, const std::string&, const std::string& v) { c.initial.kind = v; }},
             {"c", [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.c = to_real(k, v); }},
             {"x0", [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.x0 = to_real(k, v); }},
             {"speeds",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.speeds = to_reals(k, v); }},
             {"gap", [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.gap = to_real(k, v); }},
             {"epsilon",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.epsilon = to_real(k, v); }},
             {"bump_offset",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.bump_offset = to_real(k, v); }},
             {"bump_width",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.bump_width = to_real(k, v); }},
             {"spacing",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.spacing = to_real(k, v); }},
             {"amplitude",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.initial.amplitude = to_real(k, v); }},
             {"mollifier",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.initial.mollifier = static_cast<int>(to_count(k, v));
              }},
             {"measure_file",
              [](RunConfig& c, const std::string&, const std::string& v) { c.initial.measure_file = v; }},
         }},
        {"diagnostics",
         {
             {"R_list",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.diagnostics.R_list = to_reals(k, v); }},
             {"gamma",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.diagnostics.gamma = to_real(k, v); }},
             {"alpha",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.diagnostics.alpha = to_real(k, v); }},
             {"theta",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.diagnostics.theta = to_real(k, v); }},
             {"window_A",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.diagnostics.window_A = to_real(k, v); }},
             {"z", [](RunConfig& c, const std::string& k, const std::string& v) { c.diagnostics.z = to_real(k, v); }},
             {"t0", [](RunConfig& c, const std::string& k, const std::string& v) { c.diagnostics.t0 = to_real(k, v); }},
             {"list",
              [](RunConfig& c, const std::string&, const std::string& v) { c.diagnostics.list = split_list(v); }},
         }},
    };
    return table;
}

}  // namespace

RawConfig parse_config_text(const std::string& text)
{
    RawConfig raw;
    std::stringstream in(text);
    std::string line, section;
    for (int number = 1; std::getline(in, line); ++number) {
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line.erase(cut);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(number) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + "empty section name");
            raw[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside a section");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + "empty key");
        if (raw[section].count(key)) throw ConfigError(where + "duplicate key '" + section + "." + key + "'");
        raw[section][key] = trim(line.substr(eq + 1));
    }
    return raw;
}

RawConfig parse_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(RawConfig& raw, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    const std::string lhs = trim(assignment.substr(0, eq));
    const auto dot = lhs.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot == 0 || dot + 1 == lhs.size())
        throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
    raw[lhs.substr(0, dot)][lhs.substr(dot + 1)] = trim(assignment.substr(eq + 1));
}

void apply_raw(RunConfig& cfg, const RawConfig& raw)
{
    const auto& table = setters();
    for (const auto& [section, entries] : raw) {
        const auto s = table.find(section);
        if (s == table.end()) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, value] : entries) {
            const auto k = s->second.find(key);
            if (k == s->second.end()) throw ConfigError("unknown key '" + section + "." + key + "'");
            k->second(cfg, section + "." + key, value);
        }
    }
}

void RunConfig::validate() const
{
    const auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    need(b > 0.0, "scenario.b must be positive");
    need(cfl > 0.0 && cfl <= 1.0, "scenario.cfl must lie in (0, 1]");
    need(filter >= 0.0, "scenario.filter must be nonnegative");
    need(samples > 0, "scenario.samples must be positive");
    need(L > 0.0, "grid.L must be positive");
    need(N >= 16 && (N & (N - 1)) == 0, "grid.N must be a power of two, at least 16");
    need(T > 0.0 && dt > 0.0 && output_every > 0.0, "time.T, time.dt and time.output_every must be positive");
    need(dt <= output_every, "time.dt must not exceed time.output_every");
    need(initial.c > 0.0, "initial.c must be positive");
    need(initial.epsilon >= 0.0, "initial.epsilon must be nonnegative");
    need(initial.bump_width > 0.0 && initial.spacing > 0.0, "initial.bump_width and initial.spacing must be positive");
    need(initial.gap > 0.0, "initial.gap must be positive");
    need(initial.amplitude > 0.0, "initial.amplitude must be positive");
    need(initial.mollifier >= 1, "initial.mollifier must be at least 1");
    need(!initial.speeds.empty(), "initial.speeds must not be empty");
    for (double c : initial.speeds) need(c > 0.0, "initial.speeds must be positive");
    const std::vector<std::string> kinds{"peakon", "perturbed", "train", "cloud", "measure", "smooth", "mollified"};
    need(std::find(kinds.begin(), kinds.end(), initial.kind) != kinds.end(), "unknown initial.kind '" + initial.kind + "'");
    need(initial.kind != "measure" || !initial.measure_file.empty(), "initial.kind = measure needs initial.measure_file");
    need(diagnostics.gamma >= 0.0, "diagnostics.gamma must be nonnegative");
    need(diagnostics.alpha > 0.0 && diagnostics.alpha < 1.0, "diagnostics.alpha must lie in (0, 1)");
    need(diagnostics.theta > 0.0, "diagnostics.theta must be positive");
    need(diagnostics.window_A > 0.0, "diagnostics.window_A must be positive");
    for (double R : diagnostics.R_list) need(R > 0.0, "diagnostics.R_list entries must be positive");
}

std::string to_config_text(const RunConfig& cfg)
{
    std::ostringstream out;
    out << "[scenario]\n"
        << "name = " << cfg.name << "\n"
        << "b = " << format_real(cfg.b) << "\n"
        << "solver = " << (cfg.solver == SolverKind::grid ? "grid" : "particle") << "\n"
        << "filter = " << format_real(cfg.filter) << "\n"
        << "cfl = " << format_real(cfg.cfl) << "\n"
        << "samples = " << cfg.samples << "\n"
        << "seed = " << cfg.seed << "\n\n"
        << "[grid]\n"
        << "L = " << format_real(cfg.L) << "\n"
        << "N = " << cfg.N << "\n\n"
        << "[time]\n"
        << "T = " << format_real(cfg.T) << "\n"
        << "dt = " << format_real(cfg.dt) << "\n"
        << "output_every = " << format_real(cfg.output_every) << "\n\n"
        << "[initial]\n"
        << "kind = " << cfg.initial.kind << "\n"
        << "c = " << format_real(cfg.initial.c) << "\n"
        << "x0 = " << format_real(cfg.initial.x0) << "\n"
        << "speeds = " << join_reals(cfg.initial.speeds) << "\n"
        << "gap = " << format_real(cfg.initial.gap) << "\n"
        << "epsilon = " << format_real(cfg.initial.epsilon) << "\n"
        << "bump_offset = " << format_real(cfg.initial.bump_offset) << "\n"
        << "bump_width = " << format_real(cfg.initial.bump_width) << "\n"
        << "spacing = " << format_real(cfg.initial.spacing) << "\n"
        << "amplitude = " << format_real(cfg.initial.amplitude) << "\n"
        << "mollifier = " << cfg.initial.mollifier << "\n";
    if (!cfg.initial.measure_file.empty()) out << "measure_file = " << cfg.initial.measure_file << "\n";
    out << "\n[diagnostics]\n"
        << "R_list = " << join_reals(cfg.diagnostics.R_list) << "\n"
        << "gamma = " << format_real(cfg.diagnostics.gamma) << "\n"
        << "alpha = " << format_real(cfg.diagnostics.alpha) << "\n"
        << "theta = " << format_real(cfg.diagnostics.theta) << "\n"
        << "window_A = " << format_real(cfg.diagnostics.window_A) << "\n"
        << "z = " << format_real(cfg.diagnostics.z) << "\n"
        << "t0 = " << format_real(cfg.diagnostics.t0) << "\n";
    if (!cfg.diagnostics.list.empty()) out << "list = " << join(cfg.diagnostics.list) << "\n";
    return out.str();
}

}  // namespace peakon
