#include "peakon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace peakon {

namespace {

constexpr double min_gap = 1e-10;
constexpr double min_step = 1e-14;

bool well_ordered(const PeakonState& s)
{
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s.q[i]) || !std::isfinite(s.p[i])) return false;
        if (i > 0 && !(s.q[i] - s.q[i - 1] >= min_gap)) return false;
    }
    return true;
}

bool all_positive(const PeakonState& s)
{
    return std::all_of(s.p.begin(), s.p.end(), [](double p) { return p > 0.0; });
}

PeakonState axpy(const PeakonState& s, double h, const ParticleRates& k)
{
    PeakonState out = s;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.q[i] += h * k.dq[i];
        out.p[i] += h * k.dp[i];
    }
    return out;
}

// One RK4 step; false when a stage or the result is inadmissible.
bool rk4(const PeakonState& s, double b, double dt, bool keep_positive, PeakonState& out)
{
    const ParticleRates k1 = multipeakon_rhs(s, b);
    const PeakonState s2 = axpy(s, 0.5 * dt, k1);
    if (!well_ordered(s2)) return false;
    const ParticleRates k2 = multipeakon_rhs(s2, b);
    const PeakonState s3 = axpy(s, 0.5 * dt, k2);
    if (!well_ordered(s3)) return false;
    const ParticleRates k3 = multipeakon_rhs(s3, b);
    const PeakonState s4 = axpy(s, dt, k3);
    if (!well_ordered(s4)) return false;
    const ParticleRates k4 = multipeakon_rhs(s4, b);
    out = s;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.q[i] += dt / 6.0 * (k1.dq[i] + 2.0 * k2.dq[i] + 2.0 * k3.dq[i] + k4.dq[i]);
        out.p[i] += dt / 6.0 * (k1.dp[i] + 2.0 * k2.dp[i] + 2.0 * k3.dp[i] + k4.dp[i]);
    }
    if (!well_ordered(out)) return false;
    return !keep_positive || all_positive(out);
}

PeakonState advance(const PeakonState& s, double b, double dt, bool keep_positive, SolverStats& stats)
{
    PeakonState out;
    if (rk4(s, b, dt, keep_positive, out)) {
        ++stats.steps;
        return out;
    }
    if (std::abs(dt) * 0.5 < min_step) throw SolverAbort("multipeakon step size underflow (dt < 1e-14)");
    ++stats.rejected;
    return advance(advance(s, b, 0.5 * dt, keep_positive, stats), b, 0.5 * dt, keep_positive, stats);
}

// Uniform substeps of at most dt that land exactly on the end of an interval of length h.
std::pair<std::size_t, double> subdivide(double h, double dt)
{
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(h / dt - 1e-9)));
    return {n, h / static_cast<double>(n)};
}

std::vector<double> output_times(double T, double output_every)
{
    std::vector<double> t{0.0};
    for (std::size_t k = 1;; ++k) {
        const double tk = static_cast<double>(k) * output_every;
        if (tk >= T * (1.0 - 1e-12)) break;
        t.push_back(tk);
    }
    t.push_back(T);
    return t;
}

void check_run_args(double T, double dt, double output_every)
{
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("evolve: T must be positive");
    if (!(dt > 0.0)) throw DomainError("evolve: dt must be positive");
    if (!(output_every > 0.0)) throw DomainError("evolve: output interval must be positive");
}

GridFn axpy(const GridFn& u, double h, const GridFn& k)
{
    GridFn out = u;
    for (std::size_t j = 0; j < u.size(); ++j) out[j] += h * k[j];
    return out;
}

GridFn grid_rk4(const GridFn& u, double b, double dt)
{
    const GridFn k1 = grid_rhs(u, b);
    const GridFn k2 = grid_rhs(axpy(u, 0.5 * dt, k1), b);
    const GridFn k3 = grid_rhs(axpy(u, 0.5 * dt, k2), b);
    const GridFn k4 = grid_rhs(axpy(u, dt, k3), b);
    GridFn out = u;
    for (std::size_t j = 0; j < u.size(); ++j) out[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    return out;
}

}  // namespace

void BFamilyParams::validate() const
{
    if (!std::isfinite(b)) throw DomainError("b must be finite");
    if (!(filter_strength >= 0.0)) throw DomainError("filter_strength must be >= 0");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw DomainError("cfl must lie in (0, 1]");
}

ParticleRates multipeakon_rhs(const PeakonState& s, double b)
{
    const std::size_t n = s.size();
    ParticleRates r{std::vector<double>(n), std::vector<double>(n)};
    if (n == 0) return r;
    // left[i] = sum_{j<i} p_j e^{-(q_i - q_j)}, right[i] = sum_{j>i} p_j e^{-(q_j - q_i)}
    std::vector<double> left(n, 0.0), right(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) left[i] = std::exp(-(s.q[i] - s.q[i - 1])) * (left[i - 1] + s.p[i - 1]);
    for (std::size_t i = n - 1; i-- > 0;) right[i] = std::exp(-(s.q[i + 1] - s.q[i])) * (right[i + 1] + s.p[i + 1]);
    for (std::size_t i = 0; i < n; ++i) {
        r.dq[i] = left[i] + s.p[i] + right[i];
        r.dp[i] = (b - 1.0) * s.p[i] * (left[i] - right[i]);
    }
    return r;
}

ParticleRates multipeakon_rhs_direct(const PeakonState& s, double b)
{
    const std::size_t n = s.size();
    ParticleRates r{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = s.q[i] - s.q[j];
            const double e = s.p[j] * std::exp(-std::abs(d));
            r.dq[i] += e;
            sum += (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * e;
        }
        r.dp[i] = (b - 1.0) * s.p[i] * sum;
    }
    return r;
}

PeakonState step_multipeakon(const PeakonState& s, const BFamilyParams& params, double dt, SolverStats* stats)
{
    s.validate();
    if (!(dt != 0.0) || !std::isfinite(dt)) throw DomainError("step_multipeakon: dt must be finite and nonzero");
    SolverStats local;
    SolverStats& st = stats ? *stats : local;
    const bool keep_positive = params.b >= 1.0 && all_positive(s);
    return advance(s, params.b, dt, keep_positive, st);
}

ParticleTrajectory evolve_particles(const PeakonState& s0, const BFamilyParams& params, double T, double dt,
                                    double output_every)
{
    params.validate();
    s0.validate();
    check_run_args(T, dt, output_every);
    ParticleTrajectory traj;
    traj.params = params;
    const auto times = output_times(T, output_every);
    traj.times.push_back(0.0);
    traj.states.push_back(s0);
    const bool keep_positive = params.b >= 1.0 && all_positive(s0);
    PeakonState s = s0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const auto [n, h] = subdivide(times[k] - times[k - 1], dt);
        try {
            for (std::size_t i = 0; i < n; ++i) s = advance(s, params.b, h, keep_positive, traj.stats);
        } catch (const SolverAbort& e) {
            traj.stats.aborted = true;
            traj.stats.abort_reason = e.what();
            return traj;
        }
        traj.times.push_back(times[k]);
        traj.states.push_back(s);
    }
    return traj;
}

GridFn grid_rhs(const GridFn& u, double b)
{
    const UniformGrid& g = u.grid;
    const std::size_t nyq = g.count / 2;
    Spectrum su = forward_fft(u);
    for (std::size_t m = 0; m < su.size(); ++m) su[m] *= std::complex<double>(0.0, m == nyq ? 0.0 : g.wavenumber(m));
    const GridFn ux = inverse_fft(g, su);
    GridFn flux(g);
    for (std::size_t j = 0; j < u.size(); ++j) flux[j] = 0.5 * b * u[j] * u[j] + 0.5 * (3.0 - b) * ux[j] * ux[j];
    Spectrum sf = forward_fft(flux);
    for (std::size_t m = 0; m < sf.size(); ++m) {
        const double k = g.wavenumber(m);
        sf[m] *= std::complex<double>(0.0, m == nyq ? 0.0 : k / (1.0 + k * k));
    }
    GridFn out = inverse_fft(g, sf);
    for (std::size_t j = 0; j < u.size(); ++j) out[j] = -u[j] * ux[j] - out[j];
    return out;
}

GridFn spectral_filter(const GridFn& u, double strength)
{
    if (strength < 0.0) throw DomainError("spectral_filter: strength must be >= 0");
    if (strength == 0.0) return u;
    const UniformGrid& g = u.grid;
    Spectrum s = forward_fft(u);
    const double kmax = g.wavenumber(g.count / 2);
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= std::exp(-36.0 * strength * std::pow(g.wavenumber(m) / kmax, 36));
    return inverse_fft(g, s);
}

GridTrajectory evolve_grid(const GridFn& u0, const BFamilyParams& params, double T, double dt, double output_every)
{
    params.validate();
    check_run_args(T, dt, output_every);
    if (!u0.all_finite()) throw DomainError("evolve_grid: initial data must be finite");
    GridTrajectory traj;
    traj.params = params;
    traj.times.push_back(0.0);
    traj.states.push_back(u0);
    const double ceiling = 10.0 * u0.max_abs();
    const auto times = output_times(T, output_every);
    GridFn u = u0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double amp = u.max_abs();
        const double step = amp > 0.0 ? std::min(dt, params.cfl * u.grid.spacing / amp) : dt;
        const auto [n, h] = subdivide(times[k] - times[k - 1], step);
        for (std::size_t i = 0; i < n; ++i) {
            GridFn next = spectral_filter(grid_rk4(u, params.b, h), params.filter_strength);
            ++traj.stats.steps;
            const bool finite = next.all_finite();
            if (!finite || next.max_abs() > ceiling) {
                traj.stats.aborted = true;
                traj.stats.abort_reason = finite ? "blow-up guard: max|u| exceeded 10x its initial value"
                                                 : "non-finite values in the grid solution";
                const double t_good = times[k - 1] + static_cast<double>(i) * h;
                if (t_good > traj.times.back()) {
                    traj.times.push_back(t_good);
                    traj.states.push_back(u);
                }
                return traj;
            }
            u = std::move(next);
        }
        traj.times.push_back(times[k]);
        traj.states.push_back(u);
    }
    return traj;
}

TimeSeries flow_map(const GridTrajectory& traj, double x0, int substeps)
{
    if (traj.size() == 0) throw DomainError("flow_map: empty trajectory");
    if (substeps < 1) throw DomainError("flow_map: substeps must be >= 1");
    const UniformGrid& g = traj.states.front().grid;
    const double lo = -0.5 * g.length, hi = 0.5 * g.length;
    const std::size_t n = traj.size();

    std::vector<std::unique_ptr<SpectralInterpolant>> cache(n);
    auto interp = [&](std::size_t k) -> const SpectralInterpolant& {
        if (!cache[k]) cache[k] = std::make_unique<SpectralInterpolant>(traj.states[k]);
        return *cache[k];
    };
    // (u, u_x) at (t, x): cubic Lagrange in time through up to four neighbouring outputs.
    auto field = [&](double t, double x) {
        const auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
        std::size_t i = it == traj.times.begin() ? 0 : static_cast<std::size_t>(it - traj.times.begin()) - 1;
        i = std::min(i, n - 1);
        const std::size_t width = std::min<std::size_t>(4, n);
        std::size_t first = i >= 1 ? i - 1 : 0;
        first = std::min(first, n - width);
        double u = 0.0, ux = 0.0;
        for (std::size_t a = first; a < first + width; ++a) {
            double w = 1.0;
            for (std::size_t c = first; c < first + width; ++c)
                if (c != a) w *= (t - traj.times[c]) / (traj.times[a] - traj.times[c]);
            const SpectralInterpolant& f = interp(a);
            u += w * f(x);
            ux += w * f.derivative(x);
        }
        return std::pair{u, ux};
    };

    TimeSeries out({"t", "q", "q_x"});
    double q = x0, logqx = 0.0;
    bool clamped = false;
    auto clamp = [&](double x) {
        if (x < lo || x >= hi) {
            if (!clamped) out.notes.push_back("characteristic left the periodic cell and was clamped");
            clamped = true;
            return std::clamp(x, lo, std::nextafter(hi, lo));
        }
        return x;
    };
    out.append({traj.times[0], q, 1.0});
    for (std::size_t k = 1; k < n; ++k) {
        const double t0 = traj.times[k - 1];
        const double h = (traj.times[k] - t0) / substeps;
        for (int s = 0; s < substeps; ++s) {
            const double t = t0 + s * h;
            const auto [u1, a1] = field(t, q);
            const auto [u2, a2] = field(t + 0.5 * h, clamp(q + 0.5 * h * u1));
            const auto [u3, a3] = field(t + 0.5 * h, clamp(q + 0.5 * h * u2));
            const auto [u4, a4] = field(t + h, clamp(q + h * u3));
            q = clamp(q + h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4));
            logqx += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        }
        out.append({traj.times[k], q, std::exp(logqx)});
    }
    return out;
}

}  // namespace peakon
