#include "peakon/diagnostics.hpp"

#include "peakon/functionals.hpp"
#include "peakon/states.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace peakon {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double particle_vx(const PeakonState& s, double x)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += s.p[i] * rho_prime(x - s.q[i]);
    return acc;
}

// Root of a function that is negative at lo and positive at hi (or the reverse).
template <class F>
double bisect(F f, double lo, double hi, double tol)
{
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double uniform_step(const std::vector<double>& t)
{
    if (t.size() < 2) throw DomainError("need at least two samples");
    const double h = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t k = 1; k < t.size(); ++k)
        if (std::abs(t[k] - t[k - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw DomainError("samples must be uniformly spaced in time");
    return h;
}

// Fourth-order central difference at index k (needs k-2..k+2).
double central4(const std::vector<double>& f, std::size_t k, double h)
{
    return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
}

// Weighted pairings against Psi(. - z) that reuse one set of density samples.
struct EnergySampler {
    std::vector<std::pair<double, double>> density;
    const PeakonState* state = nullptr;

    explicit EnergySampler(const PeakonState& s) : density(dp_energy_density(s).quadrature()), state(&s) {}

    double operator()(double z, double gamma) const
    {
        double acc = 0.0;
        for (const auto& [x, wf] : density) acc += wf * psi(x - z);
        if (gamma != 0.0)
            for (std::size_t i = 0; i < state->size(); ++i) acc += gamma * 2.0 * state->p[i] * psi(state->q[i] - z);
        return acc;
    }
};

struct FluxTerms {
    double energy, u3, vh, vu2, vxhx;
};

FluxTerms flux_terms(const GridFn& u, const GridFn& g, const GridFn& gp)
{
    const GridFn v = helmholtz_inv(u, 2.0);
    const GridFn vx = deriv(v, 1);
    const GridFn vxx = 4.0 * v - u;
    const GridFn h = helmholtz_inv(u * u, 1.0);
    const GridFn hx = deriv(h, 1);
    FluxTerms t{};
    for (std::size_t j = 0; j < u.size(); ++j) {
        t.energy += (4.0 * v[j] * v[j] + 5.0 * vx[j] * vx[j] + vxx[j] * vxx[j]) * g[j];
        t.u3 += u[j] * u[j] * u[j] * gp[j];
        t.vh += v[j] * h[j] * gp[j];
        t.vu2 += v[j] * u[j] * u[j] * gp[j];
        t.vxhx += vx[j] * hx[j] * gp[j];
    }
    const double dx = u.grid.spacing;
    return {t.energy * dx, t.u3 * dx, t.vh * dx, t.vu2 * dx, t.vxhx * dx};
}

double h1_sum(const std::vector<double>& w, const std::vector<double>& wx, const std::vector<bool>& mask, double dx)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
        if (mask[j]) acc += w[j] * w[j] + wx[j] * wx[j];
    return std::sqrt(acc * dx);
}

}  // namespace

// ---------------------------------------------------------------- modulation

double modulation_argmax(const GridFn& v)
{
    if (v.size() < 3 || v.max() == v.min()) throw DomainError("modulation_argmax: v is flat");
    const std::size_t n = v.size();
    std::size_t j = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (v[i] > v[j]) j = i;
    const double a = v[(j + n - 1) % n], b = v[j], c = v[(j + 1) % n];
    const double curv = a - 2.0 * b + c;
    const double offset = curv < 0.0 ? 0.5 * (a - c) / curv : 0.0;
    return v.grid.node(j) + offset * v.grid.spacing;
}

double modulation_argmax(const PeakonState& s)
{
    if (s.empty()) throw DomainError("modulation_argmax: empty state");
    const auto f = evaluate_exact(s, s.q);
    std::size_t k = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (f[i].v > f[k].v) k = i;
    const double d0 = particle_vx(s, s.q[k]);
    if (d0 == 0.0) return s.q[k];
    // Walk outward from the top atom so the bracket holds the nearest local maximum.
    const double dir = d0 > 0.0 ? 1.0 : -1.0;
    double near = s.q[k], end = s.q[k] + dir * 1e-6;
    for (double step = 1e-6; particle_vx(s, end) * dir > 0.0; step *= 2.0) {
        if (step > 1e6) throw DomainError("modulation_argmax: v has no interior maximum");
        near = end;
        end += dir * step;
    }
    const double lo = std::min(near, end), hi = std::max(near, end);
    return bisect([&](double x) { return particle_vx(s, x); }, lo, hi, 1e-13);
}

double modulation_orthogonality(const GridFn& v, double x_init, std::vector<std::string>* notes)
{
    const auto F = [&](double x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) acc += v[j] * rho_prime(v.grid.node(j) - x);
        return acc * v.grid.spacing;
    };
    const double lo = x_init - 2.0, hi = x_init + 2.0;
    if (!(F(lo) < 0.0 && F(hi) > 0.0)) {
        if (notes) notes->push_back("orthogonality: no sign change near the initial guess; kept the argmax");
        return x_init;
    }
    return bisect(F, lo, hi, 1e-12);
}

double rho_autocorrelation(double d)
{
    const double r = std::abs(d), e1 = std::exp(-r), e2 = std::exp(-2.0 * r);
    const double c11 = (1.0 + r) * e1;
    const double c12 = (2.0 / 3.0) * (2.0 * e1 - e2);
    const double c22 = 0.5 * (1.0 + 2.0 * r) * e2;
    return c11 / 9.0 - c12 / 9.0 + c22 / 36.0;
}

double rho_autocorrelation_prime(double d)
{
    const double r = std::abs(d), e1 = std::exp(-r), e2 = std::exp(-2.0 * r);
    const double c11 = -d * e1;
    const double c12 = -(4.0 / 3.0) * sgn(d) * (e1 - e2);
    const double c22 = -2.0 * d * e2;
    return c11 / 9.0 - c12 / 9.0 + c22 / 36.0;
}

double modulation_orthogonality(const PeakonState& s, double x_init, std::vector<std::string>* notes)
{
    const auto F = [&](double x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) acc -= s.p[i] * rho_autocorrelation_prime(x - s.q[i]);
        return acc;
    };
    const double lo = x_init - 2.0, hi = x_init + 2.0;
    if (!(F(lo) < 0.0 && F(hi) > 0.0)) {
        if (notes) notes->push_back("orthogonality: no sign change near the initial guess; kept the argmax");
        return x_init;
    }
    return bisect(F, lo, hi, 1e-13);
}

double peak_height(const PeakonState& s)
{
    if (s.empty()) return 0.0;
    const auto r = multipeakon_rhs(s, 1.0);  // dq_i = u(q_i)
    return *std::max_element(r.dq.begin(), r.dq.end());
}

std::vector<double> smoothed_derivative(const std::vector<double>& t, const std::vector<double>& x)
{
    if (t.size() != x.size()) throw DomainError("smoothed_derivative: length mismatch");
    const std::size_t n = t.size();
    if (n < 3) throw DomainError("smoothed_derivative: need at least three samples");
    const double h = uniform_step(t);
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (k >= 2 && k + 2 < n)
            d[k] = (-2.0 * x[k - 2] - x[k - 1] + x[k + 1] + 2.0 * x[k + 2]) / (10.0 * h);
        else if (k == 0)
            d[k] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
        else if (k == n - 1)
            d[k] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h);
        else
            d[k] = (x[k + 1] - x[k - 1]) / (2.0 * h);
    }
    return d;
}

ModulationPath track_modulation(const ParticleTrajectory& traj)
{
    ModulationPath path;
    path.times = traj.times;
    for (const auto& s : traj.states) {
        path.x.push_back(modulation_argmax(s));
        path.lambda.push_back(peak_height(s));
    }
    path.xdot = path.times.size() >= 3 ? smoothed_derivative(path.times, path.x) : std::vector<double>(path.x.size(), 0.0);
    return path;
}

ModulationPath track_modulation(const GridTrajectory& traj)
{
    ModulationPath path;
    path.times = traj.times;
    for (const auto& u : traj.states) {
        path.x.push_back(modulation_argmax(helmholtz_inv(u, 2.0)));
        path.lambda.push_back(u.max());
    }
    path.xdot = path.times.size() >= 3 ? smoothed_derivative(path.times, path.x) : std::vector<double>(path.x.size(), 0.0);
    return path;
}

// ---------------------------------------------------------------- jump law

TrailingJump trailing_jump(const PeakonState& s)
{
    if (s.empty()) throw DomainError("trailing_jump: empty state");
    const double qn = s.q.back();
    const auto f = evaluate_exact(s, std::span<const double>(&qn, 1));
    return {f[0].ux_left - f[0].ux_right, f[0].u};
}

JumpLawFit jump_law_residual(const ParticleTrajectory& traj)
{
    const std::size_t n = traj.size();
    if (n < 5) throw DomainError("jump_law_residual: need at least five outputs");
    const double h = uniform_step(traj.times);
    std::vector<double> a(n), drive(n);
    for (std::size_t k = 0; k < n; ++k) {
        const PeakonState& s = traj.states[k];
        if (s.size() != traj.states.front().size()) throw DomainError("jump_law_residual: particle count changed");
        const double qn = s.q.back();
        const auto f = evaluate_exact(s, std::span<const double>(&qn, 1));
        a[k] = f[0].ux_left - f[0].ux_right;
        drive[k] = f[0].u * f[0].u - f[0].ux_left * f[0].ux_left;
    }
    JumpLawFit fit;
    fit.series = TimeSeries({"t", "a", "dadt", "drive", "residual"});
    double num = 0.0, den = 0.0;
    std::vector<double> dadt(n, 0.0);
    for (std::size_t k = 2; k + 2 < n; ++k) {
        dadt[k] = central4(a, k, h);
        num += dadt[k] * drive[k];
        den += drive[k] * drive[k];
    }
    fit.kappa = den > 0.0 ? num / den : 0.0;
    for (std::size_t k = 2; k + 2 < n; ++k) {
        const double r = dadt[k] - fit.kappa * drive[k];
        fit.max_residual = std::max(fit.max_residual, std::abs(r));
        fit.series.append({traj.times[k], a[k], dadt[k], drive[k], r});
    }
    return fit;
}

// ---------------------------------------------------------------- identities

TimeSeries flux_identity_residual(const GridTrajectory& traj, const GridFn& g, const GridFn& g_prime, double coeff_vh)
{
    const std::size_t n = traj.size();
    if (n < 5) throw DomainError("flux_identity_residual: need at least five outputs");
    const double h = uniform_step(traj.times);
    std::vector<FluxTerms> terms;
    std::vector<double> energy;
    for (const auto& u : traj.states) {
        terms.push_back(flux_terms(u, g, g_prime));
        energy.push_back(terms.back().energy);
    }
    TimeSeries out({"t", "dEdt", "u3", "vh", "vu2", "vxhx", "residual"});
    for (std::size_t k = 2; k + 2 < n; ++k) {
        const FluxTerms& f = terms[k];
        const double dEdt = central4(energy, k, h);
        const double rhs = (2.0 / 3.0) * f.u3 + coeff_vh * f.vh - 4.0 * f.vu2 + f.vxhx;
        out.append({traj.times[k], dEdt, f.u3, f.vh, f.vu2, f.vxhx, dEdt - rhs});
    }
    return out;
}

TimeSeries flux_identity_residual(const GridTrajectory& traj, double z, double coeff_vh)
{
    if (traj.size() == 0) throw DomainError("flux_identity_residual: empty trajectory");
    const UniformGrid& grid = traj.states.front().grid;
    const GridFn g = GridFn::sample(grid, [z](double x) { return psi(x - z); });
    const GridFn gp = GridFn::sample(grid, [z](double x) { return psi_prime(x - z); });
    return flux_identity_residual(traj, g, gp, coeff_vh);
}

double transport_identity_residual(const GridTrajectory& traj, double b, std::span<const double> sample_x, int substeps)
{
    if (traj.size() == 0) throw DomainError("transport_identity_residual: empty trajectory");
    std::vector<SpectralInterpolant> y;
    y.reserve(traj.size());
    for (const auto& u : traj.states) y.emplace_back(helmholtz_apply(u, 1.0));
    const double scale = helmholtz_apply(traj.states.front(), 1.0).max_abs();
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (double x0 : sample_x) {
        const double y0 = y.front()(x0);
        const TimeSeries path = flow_map(traj, x0, substeps);
        for (std::size_t k = 0; k < path.size(); ++k) {
            const double q = path.rows[k][1], qx = path.rows[k][2];
            worst = std::max(worst, std::abs(y0 - y[k](q) * std::pow(qx, b)));
        }
    }
    return worst / scale;
}

// ---------------------------------------------------------------- monotonicity

ExponentialFit fit_exponential(std::span<const double> R, std::span<const double> D)
{
    if (R.size() != D.size()) throw DomainError("fit_exponential: length mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < R.size(); ++i)
        if (D[i] > 0.0) {
            xs.push_back(R[i]);
            ys.push_back(std::log(D[i]));
        }
    if (xs.size() < 2) throw DomainError("fit_exponential: need two positive values");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) throw DomainError("fit_exponential: need two distinct R values");
    const double slope = sxy / sxx;
    return {std::exp(my - slope * mx), slope};
}

double localized_functional(const PeakonState& s, double x_t, double x_t0, double R, double gamma, double alpha)
{
    return localized_energy(s, x_t0 + R + (1.0 - alpha) * (x_t - x_t0), gamma);
}

MonotonicityReport monotonicity_audit(const ParticleTrajectory& traj, const ModulationPath& path, double t0,
                                      std::span<const double> R_list, double gamma, double alpha)
{
    const std::size_t n = traj.size();
    if (n == 0 || path.x.size() != n) throw DomainError("monotonicity_audit: path does not match the trajectory");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("monotonicity_audit: alpha must lie in (0, 1)");
    if (gamma < 0.0) throw DomainError("monotonicity_audit: gamma must be nonnegative");
    std::size_t k0 = 0;
    for (std::size_t k = 1; k < n; ++k)
        if (std::abs(traj.times[k] - t0) < std::abs(traj.times[k0] - t0)) k0 = k;

    std::vector<EnergySampler> samplers;
    samplers.reserve(n);
    for (const auto& s : traj.states) samplers.emplace_back(s);
    const auto I = [&](std::size_t k, double R) {
        return samplers[k](path.x[k0] + R + (1.0 - alpha) * (path.x[k] - path.x[k0]), gamma);
    };

    MonotonicityReport rep;
    rep.table = TimeSeries({"R", "D_plus", "D_minus"});
    std::vector<double> Rs, Ds;
    for (double R : R_list) {
        const double plus0 = I(k0, R), minus0 = I(k0, -R);
        double dplus = 0.0, dminus = 0.0;
        for (std::size_t k = 0; k <= k0; ++k) dplus = std::max(dplus, plus0 - I(k, R));
        for (std::size_t k = k0; k < n; ++k) dminus = std::max(dminus, I(k, -R) - minus0);
        rep.table.append({R, dplus, dminus});
        Rs.push_back(R);
        Ds.push_back(dplus);
    }
    try {
        rep.fit = fit_exponential(Rs, Ds);
    } catch (const DomainError&) {
        rep.fit = {0.0, 0.0};
        rep.table.notes.push_back("exponential fit skipped: fewer than two positive D values");
    }
    return rep;
}

double right_tail(const PeakonState& s, double x, double R, double gamma)
{
    return localized_energy(s, x + R, gamma);
}

// ---------------------------------------------------------------- stability

TimeSeries stability_metrics(const ParticleTrajectory& traj, const ModulationPath& path, const StabilityOptions& opt)
{
    const std::size_t n = traj.size();
    if (n == 0 || path.x.size() != n) throw DomainError("stability_metrics: path does not match the trajectory");
    if (!(opt.spacing > 0.0) || !(opt.window_A > 0.0)) throw DomainError("stability_metrics: bad options");
    const double level = opt.gamma_level > 0.0 ? opt.gamma_level : 0.5 * energy_DP(traj.states.front());

    TimeSeries out({"t", "x", "lambda", "xdot", "e_local", "e_right", "tail_mass_left", "h1_left", "x_gamma",
                    "x_gamma_dot", "td6_bound"});
    std::vector<double> xg(n);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < n; ++k) {
        const PeakonState& s = traj.states[k];
        const double t = traj.times[k], xc = path.x[k], lam = path.lambda[k];

        // e_local on offsets (-A, right_extent) around x(t).
        // Cell midpoints keep the samples off the crest, where u_x is one-sided.
        std::vector<double> pts;
        const auto cells = static_cast<std::size_t>(std::floor((opt.window_A + opt.right_extent) / opt.spacing));
        for (std::size_t j = 0; j < cells; ++j) pts.push_back(xc - opt.window_A + (static_cast<double>(j) + 0.5) * opt.spacing);
        auto f = evaluate_exact(s, pts);
        std::vector<double> w(pts.size()), wx(pts.size());
        for (std::size_t j = 0; j < pts.size(); ++j) {
            const double o = pts[j] - xc, phi = std::exp(-std::abs(o));
            w[j] = f[j].u - lam * phi;
            wx[j] = f[j].ux + lam * sgn(o) * phi;
        }
        const double e_local = h1_sum(w, wx, std::vector<bool>(pts.size(), true), opt.spacing);

        // Absolute cells covering the cloud, aligned to multiples of the spacing.
        const double lo = std::floor((std::min(s.q.front(), opt.z) - opt.margin) / opt.spacing) * opt.spacing;
        const double hi = std::max(s.q.back(), opt.theta * t) + opt.margin;
        pts.clear();
        const auto nodes = static_cast<std::size_t>(std::ceil((hi - lo) / opt.spacing));
        for (std::size_t j = 0; j < nodes; ++j) pts.push_back(lo + (static_cast<double>(j) + 0.5) * opt.spacing);
        f = evaluate_exact(s, pts);
        w.assign(pts.size(), 0.0);
        wx.assign(pts.size(), 0.0);
        std::vector<double> u(pts.size()), ux(pts.size());
        std::vector<bool> right(pts.size()), left(pts.size());
        for (std::size_t j = 0; j < pts.size(); ++j) {
            const double o = pts[j] - xc, phi = std::exp(-std::abs(o));
            u[j] = f[j].u;
            ux[j] = f[j].ux;
            w[j] = f[j].u - lam * phi;
            wx[j] = f[j].ux + lam * sgn(o) * phi;
            left[j] = pts[j] < opt.z;
            right[j] = pts[j] > opt.theta * t || left[j];
        }
        const double e_right = h1_sum(w, wx, right, opt.spacing);
        const double h1_left = h1_sum(u, ux, left, opt.spacing);
        double tail = 0.0;
        for (std::size_t i = 0; i < s.size() && s.q[i] < opt.z; ++i) tail += 2.0 * s.p[i];

        xg[k] = x_gamma(s, level);
        const double bound = std::sqrt(std::max(0.0, weighted_u2_psi_prime(s, xg[k]))) / 50.0;
        rows.push_back({t, xc, lam, path.xdot[k], e_local, e_right, tail, h1_left, xg[k], 0.0, bound});
    }
    const std::vector<double> xgdot = n >= 3 ? smoothed_derivative(traj.times, xg) : std::vector<double>(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        rows[k][9] = xgdot[k];
        out.append(rows[k]);
    }
    return out;
}

// ---------------------------------------------------------------- grid comparisons

double w11_norm(const GridFn& w) { return w11_norm(w, deriv(w, 1)); }

double w11_contraction(const GridFn& u0a, const GridFn& u0b, const BFamilyParams& params, double T, double dt,
                       double output_every)
{
    if (!(u0a.grid == u0b.grid)) throw DomainError("w11_contraction: data live on different grids");
    const auto a = evolve_grid(u0a, params, T, dt, output_every);
    const auto b = evolve_grid(u0b, params, T, dt, output_every);
    if (a.stats.aborted || b.stats.aborted) throw SolverAbort("w11_contraction: a grid run aborted");
    const double w0 = w11_norm(u0a - u0b);
    if (w0 == 0.0) return 0.0;
    double c = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < a.size(); ++k) c = std::max(c, std::log(w11_norm(a.states[k] - b.states[k]) / w0) / a.times[k]);
    return c;
}

GridFn reflect_negate(const GridFn& u)
{
    const std::size_t n = u.size();
    GridFn out(u.grid);
    for (std::size_t j = 0; j < n; ++j) out[j] = -u[(n - j) % n];
    return out;
}

double antipeakon_symmetry_defect(const GridFn& u0, const BFamilyParams& params, double T, double dt,
                                  double output_every)
{
    const auto a = evolve_grid(u0, params, T, dt, output_every);
    const auto b = evolve_grid(reflect_negate(u0), params, T, dt, output_every);
    if (a.stats.aborted || b.stats.aborted) throw SolverAbort("antipeakon_symmetry_defect: a grid run aborted");
    if (a.size() != b.size()) throw SolverAbort("antipeakon_symmetry_defect: output times differ");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, l2_norm(b.states[k] - reflect_negate(a.states[k])));
    return worst;
}

}  // namespace peakon
