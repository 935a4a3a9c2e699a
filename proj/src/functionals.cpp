#include "peakon/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace peakon {

namespace {

using Field = PiecewiseExp::Field;

struct ParticleFields {
    PiecewiseExp u, ux, v, vx, vxx;
    explicit ParticleFields(const PeakonState& s)
        : u(PiecewiseExp::from_state(s, Field::u)),
          ux(PiecewiseExp::from_state(s, Field::ux)),
          v(PiecewiseExp::from_state(s, Field::v)),
          vx(PiecewiseExp::from_state(s, Field::vx)),
          vxx(PiecewiseExp::from_state(s, Field::vxx))
    {
    }

    PiecewiseExp dp_density() const
    {
        return (v * v).scaled(4.0) + (vx * vx).scaled(5.0) + vxx * vxx;
    }
};

std::vector<FieldSample> at_atoms(const PeakonState& s) { return evaluate_exact(s, s.q); }

void check_routes(const DpEnergy& r)
{
    const double scale = std::max({std::abs(r.pairing), std::abs(r.integral), 1e-300});
    if (std::abs(r.pairing - r.integral) > 1e-6 * scale)
        throw std::logic_error("DP energy routes disagree: <y,v> and int(4v^2+5v_x^2+v_xx^2) differ");
}

// Bisection for the decreasing map z -> energy(z) crossing level.
template <class F>
double solve_decreasing(F energy, double level, double start)
{
    double lo = start, hi = start, step = 1.0;
    while (energy(lo) <= level) {
        lo -= step;
        step *= 2.0;
        if (step > 1e7) throw DomainError("x_gamma: cannot bracket the energy level");
    }
    step = 1.0;
    while (energy(hi) >= level) {
        hi += step;
        step *= 2.0;
        if (step > 1e7) throw DomainError("x_gamma: cannot bracket the energy level");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (energy(mid) > level) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

void record(FunctionalReport& r, const std::string& key, double violation)
{
    auto [it, inserted] = r.auxiliary.emplace(key, violation);
    if (!inserted) it->second = std::max(it->second, violation);
}

void finish(FunctionalReport& r)
{
    r.value = -std::numeric_limits<double>::infinity();
    for (const auto& [k, v] : r.auxiliary) r.value = std::max(r.value, v);
}

}  // namespace

double mass_M(const GridFn& u) { return integrate(u); }
double mass_M(const PeakonState& s) { return s.momentum_mass(); }

double energy_CH(const GridFn& u)
{
    const GridFn ux = deriv(u, 1);
    return integrate(u * u + ux * ux);
}

double energy_CH(const PeakonState& s)
{
    const auto f = at_atoms(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += 2.0 * s.p[i] * f[i].u;
    return acc;
}

double cubic_CH(const GridFn& u)
{
    const GridFn ux = deriv(u, 1);
    return integrate(u * (u * u + ux * ux));
}

double cubic_CH(const PeakonState& s)
{
    if (s.empty()) return 0.0;
    const auto u = PiecewiseExp::from_state(s, Field::u);
    const auto ux = PiecewiseExp::from_state(s, Field::ux);
    return (u * (u * u + ux * ux)).integrate();
}

GridFn dp_energy_density(const GridFn& u)
{
    const GridFn v = helmholtz_inv(u, 2.0);
    const GridFn vx = deriv(v, 1);
    const GridFn vxx = 4.0 * v - u;
    return 4.0 * (v * v) + 5.0 * (vx * vx) + vxx * vxx;
}

PiecewiseExp dp_energy_density(const PeakonState& s) { return ParticleFields(s).dp_density(); }

DpEnergy energy_DP_routes(const GridFn& u)
{
    const GridFn v = helmholtz_inv(u, 2.0);
    const GridFn y = helmholtz_apply(u, 1.0);
    return {integrate(y * v), integrate(dp_energy_density(u))};
}

DpEnergy energy_DP_routes(const PeakonState& s)
{
    if (s.empty()) return {};
    const auto f = at_atoms(s);
    double pairing = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) pairing += 2.0 * s.p[i] * f[i].v;
    return {pairing, ParticleFields(s).dp_density().integrate()};
}

double energy_DP(const GridFn& u)
{
    const DpEnergy r = energy_DP_routes(u);
    check_routes(r);
    return r.integral;
}

double energy_DP(const PeakonState& s)
{
    const DpEnergy r = energy_DP_routes(s);
    check_routes(r);
    return r.integral;
}

double cubic_DP(const GridFn& u) { return integrate(u * (u * u)); }

double cubic_DP(const PeakonState& s)
{
    if (s.empty()) return 0.0;
    const auto u = PiecewiseExp::from_state(s, Field::u);
    return (u * u * u).integrate();
}

GridFn h_of_u(const GridFn& u) { return helmholtz_inv(u * u, 1.0); }

double psi(double x)
{
    // Evaluated from the small side so that psi(x) + psi(-x) = 1 to rounding.
    const double t = (2.0 / std::numbers::pi) * std::atan(std::exp(-std::abs(x) / 6.0));
    return x > 0.0 ? 1.0 - t : t;
}

double psi_prime(double x)
{
    const double e = std::exp(-std::abs(x) / 6.0);
    return e / (3.0 * std::numbers::pi * (1.0 + e * e));
}

double psi_second(double x)
{
    const double s = x / 6.0;
    return -std::tanh(s) / (36.0 * std::numbers::pi * std::cosh(s));
}

double psi_ppp(double x)
{
    const double e = std::exp(-std::abs(x) / 6.0);
    const double sech = 2.0 * e / (1.0 + e * e);
    return sech * (1.0 - 2.0 * sech * sech) / (216.0 * std::numbers::pi);
}

double localized_energy(const GridFn& u, double z, double gamma)
{
    if (gamma < 0.0) throw DomainError("localized_energy: gamma must be nonnegative");
    const GridFn e = dp_energy_density(u);
    GridFn integrand = e;
    if (gamma > 0.0) integrand += gamma * helmholtz_apply(u, 1.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) acc += integrand[j] * psi(u.grid.node(j) - z);
    return acc * u.grid.spacing;
}

double localized_energy(const PeakonState& s, double z, double gamma)
{
    if (gamma < 0.0) throw DomainError("localized_energy: gamma must be nonnegative");
    if (s.empty()) return 0.0;
    double acc = ParticleFields(s).dp_density().integrate_weighted([z](double x) { return psi(x - z); });
    for (std::size_t i = 0; i < s.size(); ++i) acc += gamma * 2.0 * s.p[i] * psi(s.q[i] - z);
    return acc;
}

double weighted_u2_psi_prime(const GridFn& u, double z)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) acc += u[j] * u[j] * psi_prime(u.grid.node(j) - z);
    return acc * u.grid.spacing;
}

double weighted_u2_psi_prime(const PeakonState& s, double z)
{
    if (s.empty()) return 0.0;
    const auto u = PiecewiseExp::from_state(s, Field::u);
    return (u * u).integrate_weighted([z](double x) { return psi_prime(x - z); });
}

double x_gamma(const GridFn& u, double gamma_level)
{
    const GridFn e = dp_energy_density(u);
    const double total = integrate(e);
    if (!(gamma_level > 0.0 && gamma_level < total)) throw DomainError("x_gamma: level must lie in (0, H(u))");
    const auto energy = [&](double z) {
        double acc = 0.0;
        for (std::size_t j = 0; j < e.size(); ++j) acc += e[j] * psi(e.grid.node(j) - z);
        return acc * e.grid.spacing;
    };
    std::size_t jmax = 0;
    for (std::size_t j = 1; j < e.size(); ++j)
        if (e[j] > e[jmax]) jmax = j;
    return solve_decreasing(energy, gamma_level, e.grid.node(jmax));
}

double x_gamma(const PeakonState& s, double gamma_level)
{
    if (s.empty()) throw DomainError("x_gamma: empty state");
    const PiecewiseExp density = ParticleFields(s).dp_density();
    const double total = density.integrate();
    if (!(gamma_level > 0.0 && gamma_level < total)) throw DomainError("x_gamma: level must lie in (0, H(u))");
    const auto samples = density.quadrature();
    const auto energy = [&](double z) {
        double acc = 0.0;
        for (const auto& [x, wf] : samples) acc += wf * psi(x - z);
        return acc;
    };
    const auto it = std::max_element(s.p.begin(), s.p.end());
    return solve_decreasing(energy, gamma_level, s.q[static_cast<std::size_t>(it - s.p.begin())]);
}

FunctionalReport check_Yplus_inequalities(const GridFn& u)
{
    FunctionalReport r{"yplus_inequalities", 0.0, {}};
    const GridFn ux = deriv(u, 1);
    const GridFn v = helmholtz_inv(u, 2.0);
    const GridFn vx = deriv(v, 1);
    const GridFn vxx = 4.0 * v - u;
    const GridFn h = h_of_u(u);
    const GridFn hx = deriv(h, 1);
    for (std::size_t j = 0; j < u.size(); ++j) {
        record(r, "ux_le_u", std::abs(ux[j]) - u[j]);
        record(r, "3v_le_u", 3.0 * v[j] - u[j]);
        record(r, "u_le_6v", u[j] - 6.0 * v[j]);
        record(r, "vx_le_2v", std::abs(vx[j]) - 2.0 * v[j]);
        record(r, "vxx_le_4u_over_3", std::abs(vxx[j]) - 4.0 * u[j] / 3.0);
        record(r, "h_ge_u2_over_3", u[j] * u[j] / 3.0 - h[j]);
        record(r, "hx_le_h", std::abs(hx[j]) - h[j]);
    }
    const double bound = std::max({l2_norm(u), u.max_abs(), l2_norm(ux), ux.max_abs()});
    record(r, "young_bounds", bound - mass_M(u));
    finish(r);
    return r;
}

FunctionalReport check_Yplus_inequalities(const PeakonState& s, std::span<const double> points)
{
    FunctionalReport r{"yplus_inequalities", 0.0, {}};
    std::vector<double> pts(points.begin(), points.end());
    pts.insert(pts.end(), s.q.begin(), s.q.end());
    const auto f = evaluate_exact(s, pts);
    double uinf = 0.0, uxinf = 0.0;
    for (const FieldSample& a : f) {
        const double uxmax = std::max({std::abs(a.ux_left), std::abs(a.ux_right), std::abs(a.ux)});
        record(r, "ux_le_u", uxmax - a.u);
        record(r, "3v_le_u", 3.0 * a.v - a.u);
        record(r, "u_le_6v", a.u - 6.0 * a.v);
        record(r, "vx_le_2v", std::abs(a.vx) - 2.0 * a.v);
        record(r, "vxx_le_4u_over_3", std::abs(a.vxx) - 4.0 * a.u / 3.0);
        record(r, "h_ge_u2_over_3", a.u * a.u / 3.0 - a.h);
        record(r, "hx_le_h", std::abs(a.hx) - a.h);
        uinf = std::max(uinf, std::abs(a.u));
        uxinf = std::max(uxinf, uxmax);
    }
    if (!s.empty()) {
        const auto u = PiecewiseExp::from_state(s, Field::u);
        const auto ux = PiecewiseExp::from_state(s, Field::ux);
        const double bound =
            std::max({std::sqrt((u * u).integrate()), uinf, std::sqrt((ux * ux).integrate()), uxinf});
        record(r, "young_bounds", bound - s.momentum_mass());
    }
    finish(r);
    return r;
}

}  // namespace peakon
