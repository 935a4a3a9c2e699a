#include <doctest.h>

#include "peakon/config.hpp"
#include "peakon/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

using namespace peakon;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("peakon_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config text parsing")
{
    const auto raw = parse_config_text("# comment\n[scenario]\nb = 2 ; trailing\n\n[grid]\nL=50\n  N = 256  \n");
    CHECK(raw.at("scenario").at("b") == "2");
    CHECK(raw.at("grid").at("L") == "50");
    CHECK(raw.at("grid").at("N") == "256");

    CHECK_THROWS_AS(parse_config_text("b = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[grid]\nN = 1\nN = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[grid]\nN\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[grid\nN = 2\n"), ConfigError);
}

TEST_CASE("overrides and validation")
{
    RawConfig raw = parse_config_text("[time]\nT = 4\n");
    apply_override(raw, "time.T=8");
    apply_override(raw, "initial.speeds=1,2.5");
    CHECK_THROWS_AS(apply_override(raw, "T=8"), ConfigError);
    CHECK_THROWS_AS(apply_override(raw, "time.T"), ConfigError);

    RunConfig cfg;
    apply_raw(cfg, raw);
    CHECK(cfg.T == 8.0);
    CHECK(cfg.initial.speeds == std::vector<double>{1.0, 2.5});
    CHECK_NOTHROW(cfg.validate());

    SUBCASE("unknown key") { CHECK_THROWS_AS(apply_raw(cfg, parse_config_text("[grid]\nM = 3\n")), ConfigError); }
    SUBCASE("unknown section") { CHECK_THROWS_AS(apply_raw(cfg, parse_config_text("[mesh]\nN = 3\n")), ConfigError); }
    SUBCASE("not a number") { CHECK_THROWS_AS(apply_raw(cfg, parse_config_text("[grid]\nL = wide\n")), ConfigError); }
    SUBCASE("N not a power of two")
    {
        cfg.N = 1000;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("negative step")
    {
        cfg.dt = -0.1;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("measure without file")
    {
        cfg.initial.kind = "measure";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("config text round trip")
{
    RunConfig a = default_config("experiment", "train");
    a.seed = 42;
    a.diagnostics.list = {"modulation", "stability"};
    RunConfig b;
    apply_raw(b, parse_config_text(to_config_text(a)));
    CHECK(to_config_text(b) == to_config_text(a));
    CHECK(b.initial.speeds == a.initial.speeds);
    CHECK(b.seed == 42);
    CHECK(b.diagnostics.list == a.diagnostics.list);
}

TEST_CASE("registries")
{
    for (const auto& name : experiment_names()) CHECK_NOTHROW(default_config("experiment", name).validate());
    for (const auto& name : verify_suites()) CHECK_NOTHROW(default_config("verify", name));
    CHECK_THROWS_AS(default_config("experiment", "nope"), ConfigError);
    CHECK_THROWS_AS(default_config("verify", "unknown-suite"), ConfigError);
    CHECK_THROWS_AS(default_config("plot", ""), ConfigError);
}

TEST_CASE("initial data")
{
    RunConfig cfg;
    cfg.initial.kind = "perturbed";
    const auto s = initial_particles(cfg);
    double mass = 0.0, bump = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        mass += 2.0 * s.p[i];
        if (s.q[i] != cfg.initial.x0) bump += 2.0 * s.p[i];
    }
    CHECK(mass == doctest::Approx(2.0 * (1.0 + cfg.initial.epsilon)).epsilon(1e-12));
    CHECK(bump == doctest::Approx(2.0 * cfg.initial.epsilon).epsilon(1e-12));

    cfg.initial.kind = "train";
    cfg.initial.epsilon = 0.0;
    const auto t = initial_particles(cfg);
    CHECK(t.q == std::vector<double>{-60.0, -30.0, 0.0});
    CHECK(t.p == std::vector<double>{1.0, 2.0, 3.0});

    cfg.initial.kind = "measure";
    cfg.initial.measure_file = "/nonexistent/measure.json";
    CHECK_THROWS_AS(initial_particles(cfg), ConfigError);
}

TEST_CASE("measure file initial data")
{
    const auto dir = scratch("measure");
    std::filesystem::create_directories(dir);
    const auto file = dir / "y.json";
    std::ofstream(file) << R"({"atoms": [[-1.0, 0.5], [2.0, 1.5]]})";
    RunConfig cfg;
    cfg.initial.kind = "measure";
    cfg.initial.measure_file = file.string();
    const auto s = initial_particles(cfg);
    CHECK(s.q == std::vector<double>{-1.0, 2.0});
    CHECK(s.p == std::vector<double>{0.25, 0.75});
    std::filesystem::remove_all(dir);
}

TEST_CASE("simulate, write and reload a run")
{
    RunConfig cfg = default_config("simulate", "");
    cfg.initial.kind = "train";
    cfg.initial.speeds = {1.0, 2.0};
    cfg.initial.epsilon = 0.0;
    cfg.T = 3.0;
    cfg.output_every = 0.5;
    const RunResult r = run_simulate(cfg);
    CHECK(r.exit_code() == 0);
    REQUIRE(r.states.count("trajectory") == 1);

    const auto dir = scratch("run");
    write_run(dir, r, 0.0);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK_FALSE(std::filesystem::exists(dir / "manifest.json.tmp"));
    CHECK(std::filesystem::exists(dir / "series" / "functionals.csv"));
    CHECK(std::filesystem::exists(dir / "report.csv"));

    const StoredRun stored = load_run(dir);
    CHECK(stored.solver == SolverKind::particle);
    REQUIRE(stored.particles.size() == 7);
    CHECK(stored.particles.times.back() == 3.0);
    CHECK(to_config_text(stored.config) == to_config_text(cfg));

    SUBCASE("empty diagnostics list is a no-op")
    {
        const RunResult a = run_analyze(stored, cfg);
        CHECK(a.checks.empty());
        CHECK(a.series.empty());
        CHECK(a.exit_code() == 0);
    }
    SUBCASE("analyze reproduces the drift checks")
    {
        RunConfig acfg = cfg;
        acfg.diagnostics.list = {"conservation", "modulation"};
        const RunResult a = run_analyze(stored, acfg);
        CHECK(a.exit_code() == 0);
        CHECK(a.series.count("modulation") == 1);
        acfg.diagnostics.list = {"flux-identity"};
        CHECK_THROWS_AS(run_analyze(stored, acfg), ConfigError);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("reloaded trajectories are bit-identical")
{
    RunConfig cfg = default_config("simulate", "");
    cfg.initial.kind = "perturbed";
    cfg.T = 2.0;
    const RunResult r = run_simulate(cfg);
    const auto dir = scratch("bits");
    write_run(dir, r, 0.0);
    const StoredRun stored = load_run(dir);
    const auto& table = r.states.at("trajectory");
    std::size_t row = 0;
    for (const auto& s : stored.particles.states)
        for (std::size_t i = 0; i < s.size(); ++i, ++row) {
            CHECK(s.q[i] == table.rows[row][1]);
            CHECK(s.p[i] == table.rows[row][2]);
        }
    CHECK(row == table.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest is written for an aborted run")
{
    RunResult r;
    r.command = "simulate";
    r.stats.aborted = true;
    r.stats.abort_reason = "blow-up guard";
    r.checks.push_back(check_le("x", 0.0, 1.0));
    CHECK(r.exit_code() == 3);
    const auto dir = scratch("abort");
    write_run(dir, r, 1.5);
    std::ifstream in(dir / "manifest.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("status") == "abort");
    CHECK(j.at("exit_code") == 3);
    CHECK(j.at("solver").at("abort_reason") == "blow-up guard");
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_run rejects missing or corrupt runs")
{
    CHECK_THROWS_AS(load_run("/nonexistent/run"), ConfigError);
    const auto dir = scratch("corrupt");
    std::filesystem::create_directories(dir / "states");
    std::ofstream(dir / "manifest.json") << "{ not json";
    std::ofstream(dir / "states" / "trajectory.csv") << "t,q,p\n0,0,1\n";
    CHECK_THROWS_AS(load_run(dir), ConfigError);
    std::ofstream(dir / "manifest.json") << R"({"config_text": "[grid]\nN = 64\n"})";
    std::ofstream(dir / "states" / "trajectory.csv") << "t,a,b\n0,0,1\n";
    CHECK_THROWS_AS(load_run(dir), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("check helpers")
{
    CHECK(check_le("a", 1.0, 1.0).pass);
    CHECK_FALSE(check_lt("a", 1.0, 1.0).pass);
    CHECK(check_ge("a", 2.0, 1.0).pass);
    CHECK_FALSE(check_gt("a", 1.0, 2.0).pass);
    CHECK_FALSE(check_le("a", std::nan(""), 1.0).pass);
    RunResult r;
    r.checks.push_back(check_le("a", 2.0, 1.0));
    CHECK(r.exit_code() == 1);
}
