#include "peakon/experiments.hpp"

#include "peakon/diagnostics.hpp"
#include "peakon/functionals.hpp"
#include "peakon/states.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#ifndef PEAKON_VERSION
#define PEAKON_VERSION "0.0.0"
#endif

namespace peakon {

namespace {

constexpr double kDecaySlope = -1.0 / 6.0 + 0.05;

Check make_check(std::string name, double value, double threshold, std::string rel)
{
    bool pass = false;
    if (rel == "<=") pass = value <= threshold;
    if (rel == ">=") pass = value >= threshold;
    if (rel == "<") pass = value < threshold;
    if (rel == ">") pass = value > threshold;
    if (rel == "==") pass = value == threshold;
    return {std::move(name), value, threshold, std::move(rel), pass};
}

// Records an aborted run. Returns true when the caller should stop.
bool aborted(const SolverStats& stats, RunResult& out)
{
    out.stats.steps += stats.steps;
    out.stats.rejected += stats.rejected;
    if (!stats.aborted) return false;
    out.stats.aborted = true;
    out.stats.abort_reason = stats.abort_reason;
    return true;
}

BFamilyParams params_of(const RunConfig& cfg, double b) { return {b, cfg.filter, cfg.cfl}; }

double rel_drift(const std::vector<double>& q)
{
    double worst = 0.0;
    for (double v : q) worst = std::max(worst, std::abs(v - q.front()));
    return q.front() != 0.0 ? worst / std::abs(q.front()) : worst;
}

double mid_time(const RunConfig& cfg) { return cfg.diagnostics.t0 >= 0.0 ? cfg.diagnostics.t0 : 0.5 * cfg.T; }

// Least-squares slope of y against t.
double slope(const std::vector<double>& t, const std::vector<double>& y)
{
    const double n = static_cast<double>(t.size());
    double mt = 0.0, my = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i] / n;
        my += y[i] / n;
    }
    double sty = 0.0, stt = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sty += (t[i] - mt) * (y[i] - my);
        stt += (t[i] - mt) * (t[i] - mt);
    }
    return stt > 0.0 ? sty / stt : 0.0;
}

MomentumMeasure bump_measure(const UniformGrid& g, double centre, double width, double mass)
{
    MomentumMeasure y;
    if (mass <= 0.0) return y;
    GridFn d = GridFn::sample(g, [&](double x) {
        const double s = (x - centre) / width;
        return std::abs(s) < 6.0 ? std::exp(-0.5 * s * s) : 0.0;
    });
    const double total = integrate(d);
    if (!(total > 0.0)) throw ConfigError("perturbation bump does not fit on the grid");
    d *= mass / total;
    y.density = d;
    return y;
}

void add_density(MomentumMeasure& y, const GridFn& d)
{
    if (y.density)
        *y.density += d;
    else
        y.density = d;
}

MomentumMeasure initial_measure(const RunConfig& cfg)
{
    const InitialSpec& in = cfg.initial;
    const UniformGrid g = make_grid(cfg.L, cfg.N);
    MomentumMeasure y;
    if (in.kind == "peakon") {
        y.atoms = {{in.x0, 2.0 * in.c}};
    } else if (in.kind == "perturbed" || in.kind == "cloud") {
        y = bump_measure(g, in.x0 + in.bump_offset, in.bump_width, in.epsilon * 2.0 * in.c);
        y.atoms = {{in.x0, 2.0 * in.c}};
        if (in.kind == "cloud" && in.epsilon > 0.0) {
            YplusSampleSpec spec;
            spec.seed = cfg.seed;
            spec.grid_length = cfg.L;
            spec.grid_count = cfg.N;
            spec.min_atoms = 0;
            spec.max_atoms = 3;
            spec.min_bumps = 1;
            spec.max_bumps = 3;
            MomentumMeasure cloud = sample_Yplus(spec);
            const double scale = in.epsilon * 2.0 * in.c / cloud.total_mass();
            for (auto& [x, m] : cloud.atoms) y.atoms.emplace_back(x + in.x0, m * scale);
            if (cloud.density) {
                // Shift the density by whole cells so it stays a cell-average field.
                const auto shift = static_cast<long long>(std::llround(in.x0 / g.spacing));
                GridFn d(g);
                const auto n = static_cast<long long>(g.count);
                for (long long j = 0; j < n; ++j) d[static_cast<std::size_t>(((j + shift) % n + n) % n)] = (*cloud.density)[static_cast<std::size_t>(j)] * scale;
                add_density(y, d);
            }
            std::sort(y.atoms.begin(), y.atoms.end());
        }
    } else if (in.kind == "train") {
        const std::size_t n = in.speeds.size();
        for (std::size_t j = 0; j < n; ++j) {
            const double x = in.x0 + (static_cast<double>(j) - static_cast<double>(n - 1)) * in.gap;
            y.atoms.emplace_back(x, 2.0 * in.speeds[j]);
            const auto b = bump_measure(g, x + in.bump_offset, in.bump_width, in.epsilon * 2.0 * in.speeds[j]);
            if (b.density) add_density(y, *b.density);
        }
    } else if (in.kind == "measure") {
        std::ifstream file(in.measure_file);
        if (!file) throw ConfigError("cannot read measure file " + in.measure_file);
        std::stringstream buf;
        buf << file.rdbuf();
        try {
            y = measure_from_json(buf.str());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("bad measure file: ") + e.what());
        }
    } else if (in.kind == "smooth") {
        const double a = in.amplitude;
        y.density = GridFn::sample(g, [a](double x) {
            return a * (std::exp(-(x + 3.0) * (x + 3.0) / 8.0) + 0.5 * std::exp(-(x - 4.0) * (x - 4.0) / 4.0));
        });
    } else {
        throw ConfigError("initial.kind '" + in.kind + "' has no momentum measure");
    }
    return y;
}

// Atoms where u has a local maximum (u_x changes sign across the atom), the n highest, ordered by position.
std::vector<std::size_t> top_crests(const PeakonState& s, std::size_t n)
{
    const auto f = evaluate_exact(s, s.q);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (f[i].ux_left > 0.0 && f[i].ux_right <= 0.0) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a].u > f[b].u; });
    if (idx.size() > n) idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

TimeSeries functionals_series(const ParticleTrajectory& traj)
{
    TimeSeries s({"t", "M", "E_CH", "F_CH", "H_DP", "F_DP"});
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& st = traj.states[k];
        s.append({traj.times[k], mass_M(st), energy_CH(st), cubic_CH(st), energy_DP(st), cubic_DP(st)});
    }
    return s;
}

TimeSeries functionals_series(const GridTrajectory& traj)
{
    TimeSeries s({"t", "M", "E_CH", "F_CH", "H_DP", "F_DP"});
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& u = traj.states[k];
        s.append({traj.times[k], mass_M(u), energy_CH(u), cubic_CH(u), energy_DP(u), cubic_DP(u)});
    }
    return s;
}

// Drift checks for the invariants of the run's b.
void conservation_checks(const std::string& prefix, const TimeSeries& f, double b, bool grid, RunResult& out)
{
    const auto drift = [&](const char* col) { return rel_drift(f.column(col)); };
    for (const char* col : {"M", "E_CH", "F_CH", "H_DP", "F_DP"}) out.summary[prefix + "drift_" + col] = drift(col);
    out.checks.push_back(check_le(prefix + "M_drift", drift("M"), grid ? 1e-8 : 1e-10));
    if (b == 3.0) {
        out.checks.push_back(check_le(prefix + "H_DP_drift", drift("H_DP"), grid ? 1e-6 : 1e-8));
        if (!grid) out.checks.push_back(check_le(prefix + "F_DP_drift", drift("F_DP"), 1e-7));
    }
    if (b == 2.0) {
        out.checks.push_back(check_le(prefix + "E_CH_drift", drift("E_CH"), grid ? 1e-6 : 1e-8));
        if (!grid) out.checks.push_back(check_le(prefix + "F_CH_drift", drift("F_CH"), 1e-8));
    }
}

GridFn mollified_peakon(const UniformGrid& g, double c, double x0, int n)
{
    GridFn u(g);
    u.values = peakon_field(single_peakon(c, x0), g.nodes());
    return mollify(u, n);
}

GridFn smooth_field(const UniformGrid& g, double amp)
{
    const GridFn y = GridFn::sample(g, [amp](double x) {
        return amp * (std::exp(-(x + 3.0) * (x + 3.0) / 8.0) + 0.5 * std::exp(-(x - 4.0) * (x - 4.0) / 4.0));
    });
    return helmholtz_inv(y, 1.0);
}

double observed_order(double coarse, double fine) { return std::log2(coarse / fine); }

// Midpoint rule on [-60, 60] with h = 5e-5.
double rho_prime_norm2()
{
    const int n = 2400000;
    const double a = -60.0, h = 120.0 / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = rho_prime(a + (i + 0.5) * h);
        acc += r * r;
    }
    return acc * h;
}

struct FluxLevel {
    double res4 = 0.0, res5 = 0.0, flat = 0.0;
};

// Flux residuals on one trajectory for g = Psi(. - z), z in {-2, 0, 3}, and for g = 1.
FluxLevel flux_level(const GridTrajectory& traj)
{
    FluxLevel lv;
    for (double z : {-2.0, 0.0, 3.0}) {
        for (const auto& r : flux_identity_residual(traj, z, 4.0).rows) lv.res4 = std::max(lv.res4, std::abs(r[6]));
        for (const auto& r : flux_identity_residual(traj, z, 5.0).rows) lv.res5 = std::max(lv.res5, std::abs(r[6]));
    }
    const UniformGrid& g = traj.states.front().grid;
    const GridFn one = GridFn::sample(g, [](double) { return 1.0; });
    for (const auto& r : flux_identity_residual(traj, one, GridFn(g), 5.0).rows) lv.flat = std::max(lv.flat, std::abs(r[6]));
    return lv;
}

double fitted_kappa(const PeakonState& s0, double b, const RunConfig& cfg, RunResult& out, TimeSeries* series)
{
    const auto traj = evolve_particles(s0, params_of(cfg, b), cfg.T, cfg.dt, cfg.output_every);
    if (aborted(traj.stats, out)) throw SolverAbort(traj.stats.abort_reason);
    const auto fit = jump_law_residual(traj);
    if (series) *series = fit.series;
    return fit.kappa;
}

std::string b_label(double b)
{
    std::ostringstream os;
    os << b;
    return os.str();
}

}  // namespace

Check check_le(std::string name, double value, double threshold) { return make_check(std::move(name), value, threshold, "<="); }
Check check_ge(std::string name, double value, double threshold) { return make_check(std::move(name), value, threshold, ">="); }
Check check_lt(std::string name, double value, double threshold) { return make_check(std::move(name), value, threshold, "<"); }
Check check_gt(std::string name, double value, double threshold) { return make_check(std::move(name), value, threshold, ">"); }

bool RunResult::passed() const
{
    return !stats.aborted && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

int RunResult::exit_code() const
{
    if (stats.aborted) return 3;
    return passed() ? 0 : 1;
}

const std::vector<std::string>& verify_suites()
{
    static const std::vector<std::string> names{"inequalities", "psi", "operators", "conservation", "identities", "all"};
    return names;
}

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{"stability",          "train",
                                                "rigidity-decay",     "monotonicity",
                                                "jump-law",           "flux-identity",
                                                "transport-identity", "antipeakon-symmetry",
                                                "w11-contraction"};
    return names;
}

RunConfig default_config(const std::string& command, const std::string& name)
{
    RunConfig c;
    c.name = name;
    if (command == "simulate" || command == "analyze") return c;
    if (command == "verify") {
        const auto& s = verify_suites();
        if (std::find(s.begin(), s.end(), name) == s.end()) throw ConfigError("unknown verify suite '" + name + "'");
        return c;
    }
    if (command != "experiment") throw ConfigError("unknown command '" + command + "'");
    if (name == "stability") {
        c.initial.kind = "perturbed";
        c.T = 200.0;
        c.dt = 0.01;
        c.output_every = 1.0;
    } else if (name == "train") {
        c.initial.kind = "train";
        c.initial.epsilon = 1e-3;
        c.initial.bump_offset = -15.0;
        c.T = 100.0;
        c.dt = 0.01;
        c.output_every = 1.0;
    } else if (name == "rigidity-decay") {
        c.initial.kind = "cloud";
        c.T = 100.0;
        c.dt = 0.01;
        c.output_every = 1.0;
        c.diagnostics.R_list = {5.0, 10.0, 15.0, 20.0, 25.0};
    } else if (name == "monotonicity") {
        c.initial.kind = "perturbed";
        c.T = 40.0;
        c.dt = 0.01;
        c.output_every = 0.25;
    } else if (name == "jump-law") {
        c.initial.kind = "train";
        c.initial.speeds = {1.5, 0.6};
        c.initial.gap = 3.0;
        c.initial.epsilon = 0.0;
        c.T = 6.0;
        c.dt = 0.005;
        c.output_every = 0.05;
    } else if (name == "flux-identity") {
        c.solver = SolverKind::grid;
        c.initial.kind = "smooth";
        c.L = 50.0;
        c.N = 512;
        c.T = 8.0;
        c.dt = 0.05;
        c.output_every = 0.8;
    } else if (name == "transport-identity") {
        c.solver = SolverKind::grid;
        c.initial.kind = "smooth";
        c.initial.mollifier = 2;
        c.initial.x0 = -5.0;
        c.L = 50.0;
        c.N = 512;
        c.T = 4.0;
        c.dt = 0.2;
        c.output_every = 1.0;
    } else if (name == "antipeakon-symmetry" || name == "w11-contraction") {
        c.solver = SolverKind::grid;
        c.initial.kind = "mollified";
        c.L = 50.0;
        c.N = 2048;
        c.T = name == "w11-contraction" ? 5.0 : 2.0;
        c.dt = 0.005;
        c.output_every = 0.5;
    } else {
        throw ConfigError("unknown experiment '" + name + "'");
    }
    return c;
}

RunConfig resolve_config(const std::string& command, const std::string& name, const std::string& config_file,
                         const std::vector<std::string>& overrides, std::optional<std::uint64_t> seed)
{
    RawConfig raw;
    if (!config_file.empty()) raw = parse_config_file(config_file);
    for (const auto& a : overrides) apply_override(raw, a);

    std::string resolved = name;
    if (resolved.empty() && raw.count("scenario") && raw.at("scenario").count("name")) resolved = raw.at("scenario").at("name");
    if ((command == "verify" || command == "experiment") && resolved.empty()) throw ConfigError(command + " needs a name");

    RunConfig cfg = default_config(command, resolved);
    apply_raw(cfg, raw);
    cfg.name = resolved;
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
}

PeakonState initial_particles(const RunConfig& cfg)
{
    if (cfg.initial.kind == "mollified") throw ConfigError("initial.kind = mollified needs the grid solver");
    const MomentumMeasure y = initial_measure(cfg);
    if (y.density) return discretize_measure(y, cfg.initial.spacing);
    PeakonState s;
    for (const auto& [x, m] : y.atoms) {
        s.q.push_back(x);
        s.p.push_back(0.5 * m);
    }
    return make_state(s.q, s.p);
}

GridFn initial_grid(const RunConfig& cfg)
{
    const UniformGrid g = make_grid(cfg.L, cfg.N);
    if (cfg.initial.kind == "mollified") return mollified_peakon(g, cfg.initial.c, cfg.initial.x0, cfg.initial.mollifier);
    MomentumMeasure y = initial_measure(cfg);
    if (y.density && !(y.density->grid == g)) throw ConfigError("the measure's density grid differs from [grid]");
    return measure_to_field(y, g);
}

// ---------------------------------------------------------------- verify suites

void verify_operators(const RunConfig& cfg, RunResult& out)
{
    const UniformGrid g = make_grid(cfg.L, cfg.N);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    double resolvent = 0.0, round_trip = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        Spectrum spec(g.count / 2 + 1);
        for (std::size_t m = 1; m < 41 && m < spec.size(); ++m) spec[m] = {normal(rng), normal(rng)};
        const GridFn f = inverse_fft(g, spec);
        resolvent = std::max(resolvent, resolvent_identity_residual(f));
        for (double a : {1.0, 2.0})
            round_trip = std::max(round_trip, (helmholtz_apply(helmholtz_inv(f, a), a) - f).max_abs() / f.max_abs());
    }
    double rho_res = 0.0;
    for (double x = -30.0; x <= 30.0; x += 0.01)
        if (x != 0.0) rho_res = std::max(rho_res, std::abs(4.0 * rho(x) - rho_second(x) - std::exp(-std::abs(x))));
    out.checks.push_back(check_le("operators.resolvent_identity", resolvent, 1e-10));
    out.checks.push_back(check_le("operators.rho_equation", rho_res, 1e-8));
    out.checks.push_back(check_le("operators.helmholtz_round_trip", round_trip, 1e-10));
}

void verify_inequalities(const RunConfig& cfg, RunResult& out)
{
    const UniformGrid g = make_grid(cfg.L, cfg.N);
    const auto nodes = g.nodes();
    YplusSampleSpec spec;
    spec.grid_length = cfg.L;
    spec.grid_count = cfg.N;
    TimeSeries table({"seed", "max_violation"});
    double worst = 0.0;
    for (std::size_t k = 0; k < cfg.samples; ++k) {
        spec.seed = cfg.seed + k;
        const auto s = discretize_measure(sample_Yplus(spec), g.spacing);
        const double v = check_Yplus_inequalities(s, nodes).value;
        table.append({static_cast<double>(spec.seed), v});
        worst = std::max(worst, v);
    }
    out.series["inequalities"] = table;
    out.checks.push_back(check_le("inequalities.max_violation", worst, 1e-8));

    const auto s = single_peakon(1.0);
    const double zero = 0.0;
    const auto f = evaluate_exact(s, std::span<const double>(&zero, 1));
    out.checks.push_back(check_le("inequalities.peakon_u_eq_6v", std::abs(f[0].u - 6.0 * f[0].v), 1e-10));
    out.checks.push_back(check_le("inequalities.peakon_h_eq_u2_over_3", std::abs(f[0].h - f[0].u * f[0].u / 3.0), 1e-10));
}

void verify_norms(const RunConfig& cfg, RunResult& out)
{
    const UniformGrid g = make_grid(cfg.L, cfg.N);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    double lo = INFINITY, hi = 0.0, dual = 0.0;
    for (std::size_t k = 0; k < cfg.samples; ++k) {
        GridFn w(g);
        for (int j = 0; j < 4; ++j) {
            const double a = normal(rng), x0 = 0.1 * cfg.L * normal(rng), width = 0.2 + std::abs(normal(rng));
            w += GridFn::sample(g, [&](double x) { return a * std::exp(-(x - x0) * (x - x0) / (2.0 * width * width)); });
        }
        const auto routes = energy_DP_routes(w);
        const double ratio = routes.integral / integrate(w * w);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        dual = std::max(dual, std::abs(routes.integral - routes.pairing) / std::abs(routes.pairing));
    }
    // ||c e^{-|x|}||^2 = c^2.
    const double c = 1.3;
    const double peakon_ratio = energy_DP(single_peakon(c)) / (c * c);
    out.summary["norms.min_ratio"] = lo;
    out.summary["norms.max_ratio"] = hi;
    out.checks.push_back(check_ge("norms.min_ratio", lo, 0.25));
    out.checks.push_back(check_le("norms.max_ratio", hi, 1.0));
    out.checks.push_back(check_le("norms.peakon_ratio_minus_third", std::abs(peakon_ratio - 1.0 / 3.0), 1e-8));
    out.checks.push_back(check_le("norms.dual_pairing", dual, 1e-8));
}

void verify_psi(const RunConfig&, RunResult& out)
{
    double sym = 0.0, third = 0.0, floor_gap = INFINITY, fitted = 0.0;
    const int n = 100000;
    for (int i = 0; i <= n; ++i) {
        const double x = -60.0 + 120.0 * i / n;
        sym = std::max(sym, std::abs(psi(x) + psi(-x) - 1.0));
        third = std::max(third, std::abs(psi_ppp(x)) / psi_prime(x));
        if (x <= 0.0) fitted = std::max(fitted, (psi(x) + psi_prime(x)) * std::exp(-x / 6.0));
    }
    for (int i = 0; i <= 2000; ++i) floor_gap = std::min(floor_gap, psi_prime(2.0 * i / 2000.0) - psi_prime(2.0));
    out.checks.push_back(check_le("psi.symmetry", sym, 1e-14));
    out.checks.push_back(check_le("psi.third_derivative_ratio", third, 0.5));
    out.checks.push_back(check_ge("psi.derivative_floor_on_0_2", floor_gap, 0.0));
    out.checks.push_back(check_le("psi.fitted_C", fitted, 2.0));
}

void verify_conservation(const RunConfig& cfg, RunResult& out)
{
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> pos(-8.0, 8.0), amp(0.2, 2.0);
    std::vector<double> q(5), p(5);
    for (int i = 0; i < 5; ++i) {
        q[i] = pos(rng);
        p[i] = amp(rng);
    }
    const auto s0 = make_state(q, p);
    for (double b : {3.0, 2.0}) {
        const auto traj = evolve_particles(s0, params_of(cfg, b), 50.0, 0.01, 1.0);
        if (aborted(traj.stats, out)) return;
        const auto f = functionals_series(traj);
        out.series["conservation_particles_b" + b_label(b)] = f;
        conservation_checks("conservation.particles_b" + b_label(b) + ".", f, b, false, out);
    }
    const UniformGrid g = make_grid(200.0, 2048);
    const auto traj = evolve_grid(smooth_field(g, 0.2), params_of(cfg, 3.0), 20.0, 0.02, 2.0);
    if (aborted(traj.stats, out)) return;
    const auto f = functionals_series(traj);
    out.series["conservation_grid_b3"] = f;
    conservation_checks("conservation.grid_b3.", f, 3.0, true, out);
}

void verify_exactness(const RunConfig& cfg, RunResult& out)
{
    const double c = 1.0, q0 = -3.0;
    const auto traj = evolve_particles(single_peakon(c, q0), params_of(cfg, 3.0), 100.0, 0.01, 1.0);
    if (aborted(traj.stats, out)) return;
    double dq = 0.0, dp = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        dq = std::max(dq, std::abs(traj.states[k].q[0] - (q0 + c * traj.times[k])));
        dp = std::max(dp, std::abs(traj.states[k].p[0] - c));
    }
    out.checks.push_back(check_le("exactness.particle_position", dq, 1e-10));
    out.checks.push_back(check_le("exactness.particle_amplitude", dp, 1e-10));

    // Grid: a mollified peakon stays within the mollifier width of the travelling peakon.
    const UniformGrid g = make_grid(40.0, 4096);
    const double T = 5.0, x0 = -5.0;
    TimeSeries table({"n", "width", "sup_error"});
    double previous = INFINITY;
    bool decreasing = true;
    for (int n : {4, 8, 16}) {
        const auto run = evolve_grid(mollified_peakon(g, c, x0, n), params_of(cfg, 3.0), T, 0.005, T);
        if (aborted(run.stats, out)) return;
        GridFn exact(g);
        exact.values = peakon_field(single_peakon(c, x0 + c * T), g.nodes());
        const double err = (run.states.back() - exact).max_abs();
        table.append({static_cast<double>(n), 1.0 / n, err});
        out.checks.push_back(check_le("exactness.grid_shape_n" + std::to_string(n), err, 1.0 / n));
        decreasing = decreasing && err < previous;
        previous = err;
    }
    out.series["grid_peakon_shape"] = table;
    out.checks.push_back(check_ge("exactness.grid_shape_decreasing", decreasing ? 1.0 : 0.0, 1.0));
}

void verify_constants(const RunConfig& cfg, RunResult& out)
{
    const double norm2 = rho_prime_norm2();
    out.comparisons.push_back({"int_rho_prime_squared", 7.0 / 54.0, norm2, "1/54"});
    out.checks.push_back(check_le("constants.rho_prime_norm_matches_1_over_54", std::abs(norm2 - 1.0 / 54.0), 1e-9));

    RunConfig fc = default_config("experiment", "flux-identity");
    fc.seed = cfg.seed;
    const auto traj = evolve_grid(initial_grid(fc), params_of(fc, 3.0), fc.T, fc.dt, 0.2);
    if (aborted(traj.stats, out)) return;
    const FluxLevel lv = flux_level(traj);
    const double winner = lv.res4 < lv.res5 ? 4.0 : 5.0;
    out.comparisons.push_back({"flux_vh_coefficient", 5.0, winner, "4"});
    out.checks.push_back(check_le("constants.flux_vh_coefficient_is_4", std::abs(winner - 4.0), 0.0));

    RunConfig jc = default_config("experiment", "jump-law");
    const auto s0 = initial_particles(jc);
    for (double b : {1.0, 2.0, 3.0}) {
        const double kappa = fitted_kappa(s0, b, jc, out, nullptr);
        out.comparisons.push_back({"jump_law_kappa_b" + b_label(b), 0.5, kappa, "(b-1)/2"});
        out.checks.push_back(check_le("constants.kappa_b" + b_label(b), std::abs(kappa - (b - 1.0) / 2.0), 1e-5));
    }
}

// ---------------------------------------------------------------- experiments

void experiment_stability(const RunConfig& cfg, RunResult& out)
{
    const auto traj = evolve_particles(initial_particles(cfg), params_of(cfg, cfg.b), cfg.T, cfg.dt, cfg.output_every);
    out.states["trajectory"] = trajectory_table(traj);
    if (aborted(traj.stats, out)) return;
    out.series["functionals"] = functionals_series(traj);
    const auto path = track_modulation(traj);
    StabilityOptions opt;
    opt.window_A = cfg.diagnostics.window_A;
    opt.theta = cfg.diagnostics.theta;
    opt.z = cfg.diagnostics.z;
    const TimeSeries table = stability_metrics(traj, path, opt);
    out.series["stability"] = table;

    const std::size_t n = table.size();
    const std::size_t quarter = (3 * n) / 4;
    const auto lam = table.column("lambda"), xdot = table.column("xdot"), er = table.column("e_right");
    const auto xg = table.column("x_gamma"), xgd = table.column("x_gamma_dot"), bound = table.column("td6_bound");
    const double cstar = lam.back();
    double lam_spread = 0.0, xdot_gap = 0.0;
    for (std::size_t k = quarter; k < n; ++k) {
        lam_spread = std::max(lam_spread, std::abs(lam[k] - cstar));
        xdot_gap = std::max(xdot_gap, std::abs(xdot[k] - cstar));
    }
    double rise = 0.0, min_step = INFINITY, td6 = INFINITY;
    for (std::size_t k = n / 4 + 1; k < n; ++k) rise = std::max(rise, er[k] - er[k - 1]);
    for (std::size_t k = 1; k < n; ++k) min_step = std::min(min_step, xg[k] - xg[k - 1]);
    for (std::size_t k = 0; k < n; ++k) td6 = std::min(td6, xgd[k] - bound[k]);

    out.summary["c_star"] = cstar;
    out.summary["e_right_initial"] = er.front();
    out.summary["e_right_final"] = er.back();
    const double eps = cfg.initial.epsilon;
    out.checks.push_back(check_le("stability.c_star_minus_c", std::abs(cstar - cfg.initial.c), 5.0 * eps));
    out.checks.push_back(check_le("stability.lambda_plateau", lam_spread, 1e-3));
    out.checks.push_back(check_le("stability.xdot_minus_c_star", xdot_gap, 1e-3));
    out.checks.push_back(check_le("stability.e_right_final_over_initial", er.back() / er.front(), 0.1));
    out.checks.push_back(check_le("stability.e_right_rise_after_transient", rise, 1e-12));
    out.checks.push_back(check_gt("stability.x_gamma_min_increment", min_step, 0.0));
    out.checks.push_back(check_ge("stability.x_gamma_dot_minus_td6_bound", td6, -1e-3));
}

void experiment_train(const RunConfig& cfg, RunResult& out)
{
    const std::size_t m = cfg.initial.speeds.size();
    const auto traj = evolve_particles(initial_particles(cfg), params_of(cfg, cfg.b), cfg.T, cfg.dt, cfg.output_every);
    out.states["trajectory"] = trajectory_table(traj);
    if (aborted(traj.stats, out)) return;
    out.series["functionals"] = functionals_series(traj);

    std::vector<std::string> cols{"t"};
    for (std::size_t j = 1; j <= m; ++j) cols.push_back("x" + std::to_string(j));
    for (std::size_t j = 1; j <= m; ++j) cols.push_back("lambda" + std::to_string(j));
    for (std::size_t j = 1; j < m; ++j) cols.push_back("gap" + std::to_string(j) + std::to_string(j + 1));
    TimeSeries table(cols);
    double min_gap = INFINITY;
    bool complete = true;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& s = traj.states[k];
        const auto crest = top_crests(s, m);
        if (crest.size() < m) {
            complete = false;
            break;
        }
        const auto u = multipeakon_rhs(s, 1.0).dq;
        std::vector<double> row{traj.times[k]};
        for (auto i : crest) row.push_back(s.q[i]);
        for (auto i : crest) row.push_back(u[i]);
        for (std::size_t j = 0; j + 1 < m; ++j) {
            const double gap = s.q[crest[j + 1]] - s.q[crest[j]];
            min_gap = std::min(min_gap, gap);
            row.push_back(gap);
        }
        table.append(row);
    }
    out.series["train"] = table;
    out.checks.push_back(check_ge("train.all_crests_tracked", complete ? 1.0 : 0.0, 1.0));
    if (!complete) return;
    out.checks.push_back(check_gt("train.ordering_min_gap", min_gap, 0.0));

    const std::size_t n = table.size();
    const auto t = table.column("t");
    for (std::size_t j = 1; j <= m; ++j) {
        const auto lam = table.column("lambda" + std::to_string(j));
        double spread = 0.0;
        for (std::size_t k = (3 * n) / 4; k < n; ++k) spread = std::max(spread, std::abs(lam[k] - lam.back()));
        out.summary["c_star_" + std::to_string(j)] = lam.back();
        out.checks.push_back(check_le("train.lambda" + std::to_string(j) + "_plateau", spread, 1e-3));
    }
    for (std::size_t j = 1; j < m; ++j) {
        const std::string name = "gap" + std::to_string(j) + std::to_string(j + 1);
        const auto gap = table.column(name);
        const std::vector<double> tl(t.begin() + static_cast<long>(n / 2), t.end());
        const std::vector<double> gl(gap.begin() + static_cast<long>(n / 2), gap.end());
        const double expected = table.column("lambda" + std::to_string(j + 1)).back() - table.column("lambda" + std::to_string(j)).back();
        double shrink = 0.0;
        for (std::size_t k = 1; k < n; ++k) shrink = std::max(shrink, gap[k - 1] - gap[k]);
        out.summary[name + "_slope"] = slope(tl, gl);
        out.checks.push_back(check_le("train." + name + "_slope_minus_speed_difference", std::abs(slope(tl, gl) - expected), 1e-3));
        out.checks.push_back(check_le("train." + name + "_never_shrinks", shrink, 0.0));
    }
}

void experiment_rigidity_decay(const RunConfig& cfg, RunResult& out)
{
    const auto traj = evolve_particles(initial_particles(cfg), params_of(cfg, cfg.b), cfg.T, cfg.dt, cfg.output_every);
    out.states["trajectory"] = trajectory_table(traj);
    if (aborted(traj.stats, out)) return;
    out.series["functionals"] = functionals_series(traj);
    const auto path = track_modulation(traj);
    const auto& R = cfg.diagnostics.R_list;

    std::vector<std::string> cols{"t"};
    for (double r : R) cols.push_back("tail_R" + b_label(r));
    TimeSeries history(cols);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row{traj.times[k]};
        for (double r : R) row.push_back(right_tail(traj.states[k], path.x[k], r, cfg.diagnostics.gamma));
        history.append(row);
    }
    out.series["tail_history"] = history;
    TimeSeries fin({"R", "tail"});
    std::vector<double> D;
    for (std::size_t i = 0; i < R.size(); ++i) {
        D.push_back(history.rows.back()[i + 1]);
        fin.append({R[i], D.back()});
    }
    out.series["tail_final"] = fin;
    const auto fit = fit_exponential(R, D);
    out.summary["K0"] = fit.K0;
    out.summary["slope"] = fit.slope;
    out.checks.push_back(check_le("rigidity_decay.slope", fit.slope, kDecaySlope));
    out.checks.push_back(check_gt("rigidity_decay.K0", fit.K0, 0.0));
}

void experiment_monotonicity(const RunConfig& cfg, RunResult& out)
{
    const auto traj = evolve_particles(initial_particles(cfg), params_of(cfg, cfg.b), cfg.T, cfg.dt, cfg.output_every);
    out.states["trajectory"] = trajectory_table(traj);
    if (aborted(traj.stats, out)) return;
    const double t0 = mid_time(cfg), gamma = cfg.diagnostics.gamma, alpha = cfg.diagnostics.alpha;
    const auto& R = cfg.diagnostics.R_list;
    const auto rep = monotonicity_audit(traj, track_modulation(traj), t0, R, gamma, alpha);
    out.series["monotonicity"] = rep.table;
    const auto minus = fit_exponential(R, rep.table.column("D_minus"));
    out.summary["K0_plus"] = rep.fit.K0;
    out.summary["slope_plus"] = rep.fit.slope;
    out.summary["K0_minus"] = minus.K0;
    out.summary["slope_minus"] = minus.slope;
    out.checks.push_back(check_le("monotonicity.slope_plus", rep.fit.slope, kDecaySlope));
    out.checks.push_back(check_le("monotonicity.slope_minus", minus.slope, kDecaySlope));
    out.checks.push_back(check_gt("monotonicity.K0_plus", rep.fit.K0, 0.0));

    // The unperturbed peakon, against the translation prediction D = G(R) - G(R + alpha c t0).
    const double c = cfg.initial.c;
    const auto exact = evolve_particles(single_peakon(c, cfg.initial.x0), params_of(cfg, cfg.b), cfg.T, cfg.dt, cfg.output_every);
    if (aborted(exact.stats, out)) return;
    const auto erep = monotonicity_audit(exact, track_modulation(exact), t0, R, gamma, alpha);
    const auto G = [&](double d) { return localized_energy(single_peakon(c), d, gamma); };
    const double tk0 = exact.times[static_cast<std::size_t>(std::lround(t0 / cfg.output_every))];
    TimeSeries table({"R", "D_plus", "D_minus", "D_plus_predicted", "D_minus_predicted"});
    double worst = 0.0, mismatch = 0.0;
    for (std::size_t i = 0; i < R.size(); ++i) {
        const double dp = erep.table.rows[i][1], dm = erep.table.rows[i][2];
        const double pp = G(R[i]) - G(R[i] + alpha * c * tk0);
        const double pm = G(-R[i] - alpha * c * (exact.times.back() - tk0)) - G(-R[i]);
        table.append({R[i], dp, dm, pp, pm});
        worst = std::max({worst, dp, dm});
        mismatch = std::max({mismatch, std::abs(dp - pp), std::abs(dm - pm)});
    }
    out.series["monotonicity_exact_peakon"] = table;
    out.checks.push_back(check_le("monotonicity.exact_peakon_D", worst, 1e-9));
    out.checks.push_back(check_le("monotonicity.exact_peakon_translation_prediction", mismatch, 1e-10));
}

void experiment_jump_law(const RunConfig& cfg, RunResult& out)
{
    const auto s0 = initial_particles(cfg);
    for (double b : {1.0, 1.5, 2.0, 3.0, 4.0}) {
        TimeSeries series;
        const double kappa = fitted_kappa(s0, b, cfg, out, &series);
        out.series["jump_b" + b_label(b)] = series;
        out.summary["kappa_b" + b_label(b)] = kappa;
        out.comparisons.push_back({"jump_law_kappa_b" + b_label(b), 0.5, kappa, "(b-1)/2"});
        out.checks.push_back(check_le("jump_law.kappa_b" + b_label(b) + "_minus_(b-1)/2", std::abs(kappa - (b - 1.0) / 2.0), 1e-5));
    }
}

void experiment_flux_identity(const RunConfig& cfg, RunResult& out)
{
    const GridFn u0 = initial_grid(cfg);
    TimeSeries table({"output_every", "residual_coeff4", "residual_coeff5", "residual_flat"});
    std::vector<FluxLevel> levels;
    for (int k = 0; k < 3; ++k) {
        const double oe = cfg.output_every / std::pow(2.0, k);
        const auto traj = evolve_grid(u0, params_of(cfg, 3.0), cfg.T, std::min(cfg.dt, oe), oe);
        if (k == 0) out.states["trajectory"] = trajectory_table(traj);
        if (aborted(traj.stats, out)) return;
        if (k == 2) out.series["flux_z0_coeff4"] = flux_identity_residual(traj, 0.0, 4.0);
        levels.push_back(flux_level(traj));
        table.append({oe, levels.back().res4, levels.back().res5, levels.back().flat});
    }
    out.series["flux_refinement"] = table;
    const bool four = levels.back().res4 < levels.back().res5;
    const auto win = [&](const FluxLevel& l) { return four ? l.res4 : l.res5; };
    const auto lose = [&](const FluxLevel& l) { return four ? l.res5 : l.res4; };
    out.comparisons.push_back({"flux_vh_coefficient", 5.0, four ? 4.0 : 5.0, "4"});
    out.summary["winning_coefficient"] = four ? 4.0 : 5.0;
    out.checks.push_back(check_le("flux_identity.winner_is_4", four ? 0.0 : 1.0, 0.0));
    out.checks.push_back(check_lt("flux_identity.winner_refinement_1", win(levels[1]), win(levels[0])));
    out.checks.push_back(check_lt("flux_identity.winner_refinement_2", win(levels[2]), win(levels[1])));
    out.checks.push_back(check_ge("flux_identity.loser_over_winner", lose(levels[2]) / win(levels[2]), 10.0));
    out.checks.push_back(check_ge("flux_identity.loser_does_not_vanish", lose(levels[2]) / lose(levels[0]), 0.5));
    out.checks.push_back(check_le("flux_identity.flat_weight", levels[0].flat, 1e-6));
}

void experiment_transport_identity(const RunConfig& cfg, RunResult& out)
{
    const std::vector<double> xs{-8.0, -6.0, -5.5, -5.0, -4.5, -4.0, -2.0, 0.0, 3.0, 6.0};
    const BFamilyParams prm = params_of(cfg, cfg.b);

    TimeSeries smooth({"dt", "output_every", "residual"});
    const GridFn u0 = smooth_field(make_grid(cfg.L, cfg.N), cfg.initial.amplitude);
    std::vector<double> res;
    for (int k = 0; k < 3; ++k) {
        const double f = std::pow(2.0, -k);
        const auto traj = evolve_grid(u0, prm, cfg.T, cfg.dt * f, cfg.output_every * f);
        if (k == 0) out.states["trajectory"] = trajectory_table(traj);
        if (aborted(traj.stats, out)) return;
        res.push_back(transport_identity_residual(traj, cfg.b, xs, 1));
        smooth.append({cfg.dt * f, cfg.output_every * f, res.back()});
    }
    out.series["transport_smooth"] = smooth;
    out.checks.push_back(check_le("transport_identity.smooth_base", res[0], 1e-3));
    out.checks.push_back(check_ge("transport_identity.smooth_order_1", observed_order(res[0], res[1]), 1.0));
    out.checks.push_back(check_ge("transport_identity.smooth_order_2", observed_order(res[1], res[2]), 1.0));

    // Mollified peakon: grid, step and output spacing refined together.
    TimeSeries moll({"N", "dt", "output_every", "residual"});
    std::vector<double> mres;
    for (int k = 0; k < 3; ++k) {
        const std::size_t N = 2 * cfg.N << k;
        const double f = std::pow(2.0, -k);
        const UniformGrid g = make_grid(cfg.L, N);
        const auto traj = evolve_grid(mollified_peakon(g, cfg.initial.c, cfg.initial.x0, cfg.initial.mollifier), prm,
                                      1.0, 0.02 * f, 0.1 * f);
        if (aborted(traj.stats, out)) return;
        mres.push_back(transport_identity_residual(traj, cfg.b, xs, 2));
        moll.append({static_cast<double>(N), 0.02 * f, 0.1 * f, mres.back()});
    }
    out.series["transport_mollified"] = moll;
    out.checks.push_back(check_ge("transport_identity.mollified_order_1", observed_order(mres[0], mres[1]), 1.0));
    out.checks.push_back(check_ge("transport_identity.mollified_order_2", observed_order(mres[1], mres[2]), 1.0));
}

void experiment_antipeakon_symmetry(const RunConfig& cfg, RunResult& out)
{
    const GridFn u0 = initial_grid(cfg);
    const BFamilyParams prm = params_of(cfg, cfg.b);
    const auto a = evolve_grid(u0, prm, cfg.T, cfg.dt, cfg.output_every);
    const auto b = evolve_grid(reflect_negate(u0), prm, cfg.T, cfg.dt, cfg.output_every);
    out.states["trajectory"] = trajectory_table(a);
    if (aborted(a.stats, out) || aborted(b.stats, out)) return;
    TimeSeries table({"t", "l2_defect"});
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = l2_norm(b.states[k] - reflect_negate(a.states[k]));
        worst = std::max(worst, d);
        table.append({a.times[k], d});
    }
    out.series["antipeakon_symmetry"] = table;
    out.checks.push_back(check_le("antipeakon_symmetry.l2_defect", worst, 1e-8));
}

void experiment_w11_contraction(const RunConfig& cfg, RunResult& out)
{
    const GridFn ua = initial_grid(cfg);
    RunConfig other = cfg;
    other.initial.c = 1.01 * cfg.initial.c;
    const GridFn ub = initial_grid(other);
    const BFamilyParams prm = params_of(cfg, cfg.b);
    const auto a = evolve_grid(ua, prm, cfg.T, cfg.dt, cfg.output_every);
    const auto b = evolve_grid(ub, prm, cfg.T, cfg.dt, cfg.output_every);
    out.states["trajectory"] = trajectory_table(a);
    if (aborted(a.stats, out) || aborted(b.stats, out)) return;
    TimeSeries table({"t", "w11", "log_ratio_over_t"});
    const double w0 = w11_norm(ua - ub);
    double fitted = -INFINITY;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double w = w11_norm(a.states[k] - b.states[k]);
        const double rate = k == 0 ? 0.0 : std::log(w / w0) / a.times[k];
        if (k > 0) fitted = std::max(fitted, rate);
        table.append({a.times[k], w, rate});
    }
    out.series["w11"] = table;
    out.summary["fitted_c"] = fitted;
    // The library routine evolves both inputs itself; swapping them must not change the fit.
    const double ab = w11_contraction(ua, ub, prm, cfg.T, cfg.dt, cfg.output_every);
    const double ba = w11_contraction(ub, ua, prm, cfg.T, cfg.dt, cfg.output_every);
    out.checks.push_back(check_le("w11_contraction.fitted_c_finite", std::isfinite(fitted) ? 0.0 : 1.0, 0.0));
    out.checks.push_back(check_le("w11_contraction.matches_library", std::abs(ab - fitted), 1e-12));
    out.checks.push_back(check_le("w11_contraction.swap_symmetry", std::abs(ab - ba), 1e-12));
    out.checks.push_back(check_le("w11_contraction.identical_data", std::abs(w11_contraction(ua, ua, prm, cfg.T, cfg.dt, cfg.output_every)), 0.0));
}

// ---------------------------------------------------------------- dispatch

namespace {

using Part = void (*)(const RunConfig&, RunResult&);

RunResult run_parts(const std::string& command, const RunConfig& cfg, const std::vector<Part>& parts)
{
    RunResult out;
    out.command = command;
    out.name = cfg.name;
    out.config = cfg;
    for (Part part : parts) {
        try {
            part(cfg, out);
        } catch (const SolverAbort& e) {
            out.stats.aborted = true;
            out.stats.abort_reason = e.what();
        }
        if (out.stats.aborted) break;
    }
    return out;
}

}  // namespace

// The identity checks run on their own experiment defaults.
void verify_identities(const RunConfig& cfg, RunResult& out)
{
    const std::vector<std::pair<const char*, Part>> items{{"jump-law", experiment_jump_law},
                                                          {"flux-identity", experiment_flux_identity},
                                                          {"transport-identity", experiment_transport_identity},
                                                          {"antipeakon-symmetry", experiment_antipeakon_symmetry}};
    for (const auto& [name, part] : items) {
        RunConfig c = default_config("experiment", name);
        c.seed = cfg.seed;
        part(c, out);
        if (out.stats.aborted) return;
    }
    verify_constants(cfg, out);
    out.states.clear();
}

RunResult run_verify(const RunConfig& cfg)
{
    const std::map<std::string, std::vector<Part>> suites{
        {"operators", {verify_operators}},
        {"inequalities", {verify_inequalities, verify_norms}},
        {"psi", {verify_psi}},
        {"conservation", {verify_conservation, verify_exactness}},
        {"identities", {verify_identities}},
    };
    std::vector<Part> parts;
    if (cfg.name == "all") {
        for (const auto* name : {"operators", "inequalities", "psi", "conservation", "identities"})
            for (Part p : suites.at(name)) parts.push_back(p);
    } else {
        const auto it = suites.find(cfg.name);
        if (it == suites.end()) throw ConfigError("unknown verify suite '" + cfg.name + "'");
        parts = it->second;
    }
    RunResult out = run_parts("verify", cfg, parts);
    std::vector<Comparison> unique;
    for (const auto& c : out.comparisons)
        if (std::none_of(unique.begin(), unique.end(), [&](const Comparison& u) { return u.name == c.name; })) unique.push_back(c);
    out.comparisons = unique;
    return out;
}

RunResult run_experiment(const RunConfig& cfg)
{
    const std::map<std::string, Part> table{
        {"stability", experiment_stability},
        {"train", experiment_train},
        {"rigidity-decay", experiment_rigidity_decay},
        {"monotonicity", experiment_monotonicity},
        {"jump-law", experiment_jump_law},
        {"flux-identity", experiment_flux_identity},
        {"transport-identity", experiment_transport_identity},
        {"antipeakon-symmetry", experiment_antipeakon_symmetry},
        {"w11-contraction", experiment_w11_contraction},
    };
    const auto it = table.find(cfg.name);
    if (it == table.end()) throw ConfigError("unknown experiment '" + cfg.name + "'");
    return run_parts("experiment", cfg, {it->second});
}

RunResult run_simulate(const RunConfig& cfg)
{
    RunResult out;
    out.command = "simulate";
    out.name = cfg.name;
    out.config = cfg;
    const BFamilyParams prm = params_of(cfg, cfg.b);
    if (cfg.solver == SolverKind::particle) {
        const auto traj = evolve_particles(initial_particles(cfg), prm, cfg.T, cfg.dt, cfg.output_every);
        out.states["trajectory"] = trajectory_table(traj);
        const auto f = functionals_series(traj);
        out.series["functionals"] = f;
        if (aborted(traj.stats, out)) return out;
        conservation_checks("simulate.", f, cfg.b, false, out);
    } else {
        const auto traj = evolve_grid(initial_grid(cfg), prm, cfg.T, cfg.dt, cfg.output_every);
        out.states["trajectory"] = trajectory_table(traj);
        const auto f = functionals_series(traj);
        out.series["functionals"] = f;
        if (aborted(traj.stats, out)) return out;
        conservation_checks("simulate.", f, cfg.b, true, out);
    }
    return out;
}

// ---------------------------------------------------------------- stored runs

TimeSeries trajectory_table(const ParticleTrajectory& traj)
{
    TimeSeries t({"t", "q", "p"});
    for (std::size_t k = 0; k < traj.size(); ++k)
        for (std::size_t i = 0; i < traj.states[k].size(); ++i) t.append({traj.times[k], traj.states[k].q[i], traj.states[k].p[i]});
    return t;
}

TimeSeries trajectory_table(const GridTrajectory& traj)
{
    TimeSeries t({"t", "x", "u"});
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& u = traj.states[k];
        for (std::size_t j = 0; j < u.size(); ++j) t.append({traj.times[k], u.grid.node(j), u[j]});
    }
    return t;
}

StoredRun load_run(const std::filesystem::path& dir)
{
    StoredRun run;
    const auto manifest_path = dir / "manifest.json";
    const auto traj_path = dir / "states" / "trajectory.csv";
    if (!std::filesystem::is_regular_file(manifest_path)) throw ConfigError("no manifest.json in " + dir.string());
    if (!std::filesystem::is_regular_file(traj_path)) throw ConfigError("no states/trajectory.csv in " + dir.string());
    try {
        std::ifstream in(manifest_path);
        const auto j = nlohmann::json::parse(in);
        RunConfig cfg = default_config("simulate", "");
        apply_raw(cfg, parse_config_text(j.at("config_text").get<std::string>()));
        run.config = cfg;
        run.solver = cfg.solver;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("corrupt manifest: " + std::string(e.what()));
    }
    TimeSeries table;
    try {
        table = read_csv(traj_path);
    } catch (const std::exception& e) {
        throw ConfigError("corrupt trajectory: " + std::string(e.what()));
    }
    const bool particles = table.columns == std::vector<std::string>{"t", "q", "p"};
    const bool grid = table.columns == std::vector<std::string>{"t", "x", "u"};
    if (!particles && !grid) throw ConfigError("trajectory columns must be t,q,p or t,x,u");
    run.solver = particles ? SolverKind::particle : SolverKind::grid;
    const BFamilyParams prm{run.config.b, run.config.filter, run.config.cfl};
    run.particles.params = prm;
    run.grid.params = prm;
    std::size_t k = 0;
    while (k < table.size()) {
        const double t = table.rows[k][0];
        std::vector<double> a, b;
        for (; k < table.size() && table.rows[k][0] == t; ++k) {
            a.push_back(table.rows[k][1]);
            b.push_back(table.rows[k][2]);
        }
        try {
            if (particles) {
                run.particles.times.push_back(t);
                run.particles.states.push_back(make_state(a, b));
            } else {
                const UniformGrid g = make_grid(run.config.L, b.size());
                if (b.size() != run.config.N) throw ConfigError("grid state size differs from grid.N");
                run.grid.times.push_back(t);
                run.grid.states.emplace_back(g, b);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("corrupt trajectory: " + std::string(e.what()));
        }
    }
    if (run.particles.size() == 0 && run.grid.size() == 0) throw ConfigError("empty trajectory");
    return run;
}

RunResult run_analyze(const StoredRun& run, const RunConfig& cfg)
{
    RunResult out;
    out.command = "analyze";
    out.name = cfg.name;
    out.config = cfg;
    const bool particles = run.solver == SolverKind::particle;
    for (const auto& d : cfg.diagnostics.list) {
        if (d == "conservation") {
            const auto f = particles ? functionals_series(run.particles) : functionals_series(run.grid);
            out.series["functionals"] = f;
            conservation_checks("analyze.", f, run.config.b, !particles, out);
        } else if (d == "modulation") {
            const auto path = particles ? track_modulation(run.particles) : track_modulation(run.grid);
            TimeSeries s({"t", "x", "lambda", "xdot"});
            for (std::size_t k = 0; k < path.times.size(); ++k) s.append({path.times[k], path.x[k], path.lambda[k], path.xdot[k]});
            out.series["modulation"] = s;
        } else if (d == "monotonicity" || d == "stability" || d == "jump-law") {
            if (!particles) throw ConfigError("diagnostic '" + d + "' needs a particle trajectory");
            const auto path = track_modulation(run.particles);
            if (d == "monotonicity") {
                const double t0 = cfg.diagnostics.t0 >= 0.0 ? cfg.diagnostics.t0 : 0.5 * run.particles.times.back();
                const auto rep = monotonicity_audit(run.particles, path, t0, cfg.diagnostics.R_list, cfg.diagnostics.gamma,
                                                    cfg.diagnostics.alpha);
                out.series["monotonicity"] = rep.table;
                out.summary["K0_plus"] = rep.fit.K0;
                out.summary["slope_plus"] = rep.fit.slope;
            } else if (d == "stability") {
                StabilityOptions opt;
                opt.window_A = cfg.diagnostics.window_A;
                opt.theta = cfg.diagnostics.theta;
                opt.z = cfg.diagnostics.z;
                out.series["stability"] = stability_metrics(run.particles, path, opt);
            } else {
                const auto fit = jump_law_residual(run.particles);
                out.series["jump_law"] = fit.series;
                out.summary["kappa"] = fit.kappa;
            }
        } else if (d == "flux-identity" || d == "transport-identity") {
            if (particles) throw ConfigError("diagnostic '" + d + "' needs a grid trajectory");
            if (d == "flux-identity") {
                out.series["flux_z0_coeff4"] = flux_identity_residual(run.grid, 0.0, 4.0);
                out.series["flux_z0_coeff5"] = flux_identity_residual(run.grid, 0.0, 5.0);
            } else {
                const std::vector<double> xs{-8.0, -4.0, 0.0, 4.0, 8.0};
                out.summary["transport_residual"] = transport_identity_residual(run.grid, run.config.b, xs, 4);
            }
        } else {
            throw ConfigError("unknown diagnostic '" + d + "'");
        }
    }
    return out;
}

void write_run(const std::filesystem::path& dir, const RunResult& result, double wall_seconds)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> files;
    const auto dump = [&](const char* sub, const std::map<std::string, TimeSeries>& m) {
        if (m.empty()) return;
        fs::create_directories(dir / sub);
        for (const auto& [name, s] : m) {
            const fs::path rel = fs::path(sub) / (name + ".csv");
            write_csv(dir / rel, s);
            files.push_back(rel.generic_string());
        }
    };
    dump("series", result.series);
    dump("states", result.states);
    {
        std::ofstream report(dir / "report.csv");
        report << "check,value,relation,threshold,pass\n";
        for (const auto& c : result.checks)
            report << c.name << ',' << format_real(c.value) << ',' << c.relation << ',' << format_real(c.threshold) << ','
                   << (c.pass ? 1 : 0) << '\n';
        files.push_back("report.csv");
    }

    nlohmann::json j;
    j["command"] = result.command;
    j["name"] = result.name;
    j["version"] = PEAKON_VERSION;
    j["seed"] = result.config.seed;
    j["wall_seconds"] = wall_seconds;
    j["config_text"] = to_config_text(result.config);
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [section, entries] : parse_config_text(to_config_text(result.config)))
        for (const auto& [key, value] : entries) cfg[section][key] = value;
    j["config"] = cfg;
    j["status"] = result.stats.aborted ? "abort" : (result.passed() ? "pass" : "fail");
    j["exit_code"] = result.exit_code();
    j["solver"] = {{"steps", result.stats.steps},
                   {"rejected", result.stats.rejected},
                   {"aborted", result.stats.aborted},
                   {"abort_reason", result.stats.abort_reason}};
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : result.checks)
        checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"threshold", c.threshold}, {"pass", c.pass}});
    j["checks"] = checks;
    nlohmann::json comparisons = nlohmann::json::array();
    for (const auto& c : result.comparisons)
        comparisons.push_back({{"name", c.name}, {"stated", c.stated}, {"oracle", c.oracle}, {"adopted", c.adopted}});
    j["comparisons"] = comparisons;
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [k, v] : result.summary) summary[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    j["summary"] = summary;
    j["notes"] = result.notes;
    j["outputs"] = files;

    const fs::path tmp = dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp);
        out << j.dump(2) << "\n";
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, dir / "manifest.json");
}

}  // namespace peakon
