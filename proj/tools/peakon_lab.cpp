// peakon-lab: run simulations, verification suites and named experiments.
#include "peakon/config.hpp"
#include "peakon/experiments.hpp"
#include "peakon/grid.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>

namespace {

using namespace peakon;

struct Options {
    std::string command;
    std::string target;  // suite, experiment name, or run directory for analyze
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;
};

std::string default_out(const Options& o, const RunConfig& cfg)
{
    return "runs/" + o.command + (cfg.name.empty() ? "" : "-" + cfg.name);
}

void print_summary(const RunResult& r)
{
    for (const auto& c : r.checks)
        std::cout << (c.pass ? "pass " : "FAIL ") << c.name << ": " << format_real(c.value) << ' ' << c.relation << ' '
                  << format_real(c.threshold) << '\n';
    for (const auto& c : r.comparisons)
        std::cout << "compare " << c.name << ": stated " << format_real(c.stated) << ", oracle " << format_real(c.oracle)
                  << ", adopted " << c.adopted << '\n';
    if (r.stats.aborted) std::cout << "solver abort: " << r.stats.abort_reason << '\n';
}

int run(const Options& o)
{
    RunConfig cfg;
    std::optional<StoredRun> stored;
    try {
        cfg = resolve_config(o.command, o.command == "analyze" ? std::string() : o.target, o.config_file, o.overrides, o.seed);
        if (o.command == "analyze") {
            if (o.target.empty()) throw ConfigError("analyze needs a run directory");
            stored = load_run(o.target);
        }
    } catch (const std::exception& e) {
        std::cerr << "peakon-lab: " << e.what() << '\n';
        return 2;
    }

    const std::string out = o.out.empty() ? default_out(o, cfg) : o.out;
    const auto start = std::chrono::steady_clock::now();
    RunResult result;
    result.command = o.command;
    result.name = cfg.name;
    result.config = cfg;
    int code = 0;
    try {
        if (o.command == "simulate")
            result = run_simulate(cfg);
        else if (o.command == "verify")
            result = run_verify(cfg);
        else if (o.command == "experiment")
            result = run_experiment(cfg);
        else
            result = run_analyze(*stored, cfg);
        code = result.exit_code();
    } catch (const SolverAbort& e) {
        result.stats.aborted = true;
        result.stats.abort_reason = e.what();
        code = 3;
    } catch (const ConfigError& e) {
        std::cerr << "peakon-lab: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "peakon-lab: " << e.what() << '\n';
        return 2;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    try {
        write_run(out, result, wall);
    } catch (const std::exception& e) {
        std::cerr << "peakon-lab: cannot write output: " << e.what() << '\n';
        return 2;
    }
    print_summary(result);
    std::cout << "wrote " << out << "/manifest.json\n";
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Peakon dynamics laboratory"};
    app.require_subcommand(1);
    Options o;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_file, "sectioned key=value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--override", o.overrides, "section.key=value, repeatable")->allow_extra_args(false);
    };
    auto* simulate = app.add_subcommand("simulate", "evolve the configured initial data");
    auto* verify = app.add_subcommand("verify", "run a property suite");
    auto* experiment = app.add_subcommand("experiment", "run a named experiment");
    auto* analyze = app.add_subcommand("analyze", "re-run diagnostics on a stored run");
    verify->add_option("suite", o.target, "inequalities, psi, operators, conservation, identities or all");
    experiment->add_option("name", o.target, "experiment name");
    analyze->add_option("run", o.target, "directory of a previous run");
    for (auto* sub : {simulate, verify, experiment, analyze}) common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    for (auto* sub : {simulate, verify, experiment, analyze})
        if (sub->parsed()) o.command = sub->get_name();
    return run(o);
}
