#include <doctest.h>

#include "peakon/functionals.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace peakon;

namespace {

constexpr double pi = std::numbers::pi;

// Midpoint rule on [-60, 60]; the node set is symmetric about 0 so the kink of a peakon centred
// at 0 falls on a cell boundary.
template <class F>
double quad(F f, double h = 5e-5)
{
    double acc = 0.0;
    for (double x = 0.5 * h; x < 60.0; x += h) acc += f(x) + f(-x);
    return acc * h;
}

double psi_ref(double x) { return (2.0 / pi) * std::atan(std::exp(x / 6.0)); }

// The energy density of a unit peakon at 0: v = rho.
double peakon_dp_density(double x)
{
    const double v = rho(x), vx = rho_prime(x), vxx = rho_second(x);
    return 4.0 * v * v + 5.0 * vx * vx + vxx * vxx;
}

GridFn gaussian(const UniformGrid& g, double amp, double center, double width)
{
    GridFn u(g);
    for (std::size_t j = 0; j < g.count; ++j) {
        const double s = (g.node(j) - center) / width;
        u[j] = amp * std::exp(-s * s);
    }
    return u;
}

}  // namespace

TEST_CASE("conserved quantities of a peakon")
{
    for (double c : {0.5, 1.0, 2.3}) {
        const auto s = single_peakon(c, 0.7);
        CHECK(mass_M(s) == doctest::Approx(2.0 * c).epsilon(1e-14));
        CHECK(energy_CH(s) == doctest::Approx(2.0 * c * c).epsilon(1e-13));
        CHECK(cubic_CH(s) == doctest::Approx(4.0 * c * c * c / 3.0).epsilon(1e-12));
        CHECK(cubic_DP(s) == doctest::Approx(2.0 * c * c * c / 3.0).epsilon(1e-12));
        const auto routes = energy_DP_routes(s);
        CHECK(routes.pairing == doctest::Approx(c * c / 3.0).epsilon(1e-13));
        CHECK(routes.integral == doctest::Approx(c * c / 3.0).epsilon(1e-12));
        CHECK(energy_DP(s) == doctest::Approx(c * c / 3.0).epsilon(1e-12));
    }
    CHECK(mass_M(make_state({-3.0, 4.0}, {1.0, 2.0})) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(energy_DP(PeakonState{}) == 0.0);
}

TEST_CASE("particle and grid routes agree on a two-peakon state")
{
    const auto s = make_state({-1.5, 2.0}, {0.8, 1.4});
    const auto g = make_grid(200.0, 2048);
    GridFn u(g);
    u.values = peakon_field(s, g.nodes());
    const auto exact = energy_DP_routes(s);
    CHECK(exact.pairing == doctest::Approx(exact.integral).epsilon(1e-12));
    // Sampling the kinks aliases at O(dx^2), like the trapezoid sum of the mass.
    CHECK(std::abs(energy_DP_routes(u).integral - exact.integral) <= g.spacing * g.spacing * exact.integral);
}

TEST_CASE("grid mass of a sampled peakon is the trapezoid sum")
{
    const auto g = make_grid(200.0, 2048);
    const double c = 1.7;
    GridFn u(g);
    u.values = peakon_field(single_peakon(c), g.nodes());
    // Nodes include 0, so the trapezoid sum of c e^{-|x|} is c dx coth(dx/2) up to e^{-100}.
    const double dx = g.spacing;
    CHECK(mass_M(u) == doctest::Approx(c * dx / std::tanh(dx / 2.0)).epsilon(1e-14));
    CHECK(std::abs(mass_M(u) - 2.0 * c) <= c * dx * dx / 6.0 * 1.01);
    CHECK(mass_M(GridFn(g)) == 0.0);
}

TEST_CASE("grid functionals on a Gaussian")
{
    const auto g = make_grid(200.0, 2048);
    const GridFn u = gaussian(g, 1.0, 3.0, 1.0);
    CHECK(mass_M(u) == doctest::Approx(std::sqrt(pi)).epsilon(1e-13));
    CHECK(energy_CH(u) == doctest::Approx(2.0 * std::sqrt(pi / 2.0)).epsilon(1e-13));
    CHECK(cubic_DP(u) == doctest::Approx(std::sqrt(pi / 3.0)).epsilon(1e-13));
    // int u u_x^2 = int 4 x^2 e^{-3x^2} = (2/3) sqrt(pi/3)
    CHECK(cubic_CH(u) == doctest::Approx(std::sqrt(pi / 3.0) * (1.0 + 2.0 / 3.0)).epsilon(1e-13));
    const auto routes = energy_DP_routes(u);
    CHECK(std::abs(routes.pairing - routes.integral) <= 1e-12);
    CHECK(energy_CH(GridFn(g)) == 0.0);
}

TEST_CASE("h_of_u")
{
    for (double c : {1.0, 2.0}) {
        const auto s = single_peakon(c);
        const double at0 = 0.0;
        const auto f = evaluate_exact(s, std::span<const double>(&at0, 1));
        CHECK(f[0].h == doctest::Approx(c * c / 3.0).epsilon(1e-14));
        const double h_oracle = quad([&](double r) { return 0.5 * std::exp(-std::abs(r)) * c * c * std::exp(-2.0 * std::abs(r)); });
        CHECK(f[0].h == doctest::Approx(h_oracle).epsilon(1e-8));
    }
    const auto g = make_grid(200.0, 2048);
    const GridFn u = gaussian(g, 0.9, -1.0, 1.5);
    const GridFn h = h_of_u(u);
    for (std::size_t j : {980u, 1014u, 1024u, 1050u}) {
        const double x = g.node(j);
        const double oracle = quad([&](double r) {
            const double s = (x - r + 1.0) / 1.5;
            return 0.5 * std::exp(-std::abs(r)) * 0.81 * std::exp(-2.0 * s * s);
        });
        CHECK(h[j] == doctest::Approx(oracle).epsilon(1e-8));
    }
    CHECK(h_of_u(GridFn(g)).max_abs() == 0.0);
}

TEST_CASE("norm equivalence for random grid functions")
{
    const auto g = make_grid(100.0, 1024);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        GridFn w(g);
        // Random smooth combination of Gaussians of both signs.
        for (int k = 0; k < 4; ++k) w += gaussian(g, normal(rng), 10.0 * normal(rng), 0.2 + std::abs(normal(rng)));
        const double ratio = energy_DP(w) / integrate(w * w);
        CHECK(ratio >= 0.25);
        CHECK(ratio <= 1.0);
    }
}

TEST_CASE("weight Psi")
{
    CHECK(psi(0.0) == 0.5);
    CHECK(psi_prime(2.0) == doctest::Approx(std::exp(1.0 / 3.0) / (3.0 * pi * (1.0 + std::exp(2.0 / 3.0)))).epsilon(1e-15));
    for (double x = -80.0; x <= 80.0; x += 0.37) {
        CHECK(std::abs(psi(x) + psi(-x) - 1.0) <= 1e-14);
        CHECK(psi(x) == doctest::Approx(psi_ref(x)).epsilon(1e-14));
        CHECK(std::abs(psi_ppp(x)) <= 0.5 * psi_prime(x));
    }
    // Derivatives against centred differences.
    const double d = 1e-4;
    for (double x : {-7.0, -1.0, 0.3, 4.0, 12.0}) {
        CHECK(psi_prime(x) == doctest::Approx((psi(x + d) - psi(x - d)) / (2 * d)).epsilon(1e-7));
        CHECK(psi_second(x) == doctest::Approx((psi_prime(x + d) - psi_prime(x - d)) / (2 * d)).epsilon(1e-6));
        CHECK(psi_ppp(x) == doctest::Approx((psi_second(x + d) - psi_second(x - d)) / (2 * d)).epsilon(1e-6));
    }
    for (double x = 0.0; x <= 2.0; x += 0.01) CHECK(psi_prime(x) >= psi_prime(2.0));
    double fitted = 0.0;
    for (double x = -60.0; x <= 0.0; x += 0.01) fitted = std::max(fitted, (psi(x) + psi_prime(x)) * std::exp(-x / 6.0));
    CHECK(fitted <= 2.0);
}

TEST_CASE("localized energy")
{
    const auto s = single_peakon(1.0);
    const double H = energy_DP(s);

    const double oracle = quad([](double x) { return peakon_dp_density(x) * psi_ref(x); });
    CHECK(localized_energy(s, 0.0, 0.0) == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(localized_energy(s, 0.0, 0.0) > 0.0);
    CHECK(localized_energy(s, 0.0, 0.0) < H);

    const double gamma = 0.3;
    CHECK(localized_energy(s, -400.0, gamma) == doctest::Approx(H + gamma * mass_M(s)).epsilon(1e-12));
    CHECK(std::abs(localized_energy(s, 400.0, gamma)) <= 1e-12);

    double previous = INFINITY;
    for (double z = -30.0; z <= 30.0; z += 0.5) {
        const double value = localized_energy(s, z, gamma);
        CHECK(value <= previous);
        previous = value;
    }
    CHECK_THROWS_AS(localized_energy(s, 0.0, -1.0), DomainError);

    // The grid route on smooth data against the same quadrature.
    const auto g = make_grid(200.0, 2048);
    const GridFn u = gaussian(g, 1.0, 0.0, 1.0);
    const GridFn e = dp_energy_density(u);
    const GridFn y = helmholtz_apply(u, 1.0);
    double direct = 0.0;
    for (std::size_t j = 0; j < g.count; ++j) direct += (e[j] + gamma * y[j]) * psi_ref(g.node(j) - 1.0);
    CHECK(localized_energy(u, 1.0, gamma) == doctest::Approx(direct * g.spacing).epsilon(1e-12));

    const double w_oracle = quad([](double x) { return std::exp(-2.0 * std::abs(x)) * std::exp((x - 2.0) / 6.0) /
                                                        (3.0 * pi * (1.0 + std::exp((x - 2.0) / 3.0))); });
    CHECK(weighted_u2_psi_prime(s, 2.0) == doctest::Approx(w_oracle).epsilon(1e-8));
}

TEST_CASE("energy center")
{
    const auto s = single_peakon(1.0);
    const double H = energy_DP(s);
    const double x0 = x_gamma(s, H / 2.0);
    CHECK(std::isfinite(x0));
    CHECK(localized_energy(s, x0, 0.0) == doctest::Approx(H / 2.0).epsilon(1e-9));
    for (double shift : {-7.5, 3.25}) CHECK(x_gamma(s.translated(shift), H / 2.0) == doctest::Approx(x0 + shift).epsilon(1e-9).scale(1.0));

    double previous = INFINITY;
    for (double level = 0.05 * H; level < H; level += 0.1 * H) {
        const double x = x_gamma(s, level);
        CHECK(x < previous);
        previous = x;
    }
    CHECK_THROWS_AS(x_gamma(s, H), DomainError);
    CHECK_THROWS_AS(x_gamma(s, 0.0), DomainError);

    // Grid and particle routes coincide for a symmetric smooth profile centred at 0.
    const auto g = make_grid(200.0, 2048);
    const GridFn u = gaussian(g, 1.0, 0.0, 1.0);
    CHECK(std::abs(x_gamma(u, energy_DP(u) / 2.0)) <= 1e-9);
    CHECK_THROWS_AS(x_gamma(u, 2.0 * energy_DP(u)), DomainError);
}

TEST_CASE("Y+ inequality battery")
{
    SUBCASE("peakon equality cases")
    {
        const auto s = single_peakon(1.4);
        const std::vector<double> pts{0.0, 25.0, -25.0};
        const auto f = evaluate_exact(s, pts);
        CHECK(f[0].u == doctest::Approx(6.0 * f[0].v).epsilon(1e-14));
        CHECK(f[0].h == doctest::Approx(f[0].u * f[0].u / 3.0).epsilon(1e-14));
        CHECK(f[1].u / f[1].v == doctest::Approx(3.0).epsilon(1e-9));
        CHECK(f[2].u / f[2].v == doctest::Approx(3.0).epsilon(1e-9));
        const auto report = check_Yplus_inequalities(s, pts);
        CHECK(report.value <= 1e-12);
        CHECK(report.auxiliary.size() == 8);
    }

    SUBCASE("sampled measures")
    {
        const auto g = make_grid(200.0, 2048);
        const auto nodes = g.nodes();
        YplusSampleSpec spec;
        for (std::uint64_t seed = 100; seed < 120; ++seed) {
            spec.seed = seed;
            const auto s = discretize_measure(sample_Yplus(spec), g.spacing);
            const auto report = check_Yplus_inequalities(s, nodes);
            CHECK(report.value <= 1e-8);
        }
    }

    SUBCASE("smooth grid data")
    {
        const auto g = make_grid(200.0, 2048);
        YplusSampleSpec spec;
        spec.min_atoms = spec.max_atoms = 0;
        spec.min_bumps = spec.max_bumps = 2;
        spec.min_width = 1.0;
        spec.seed = 7;
        const auto m = sample_Yplus(spec);
        const GridFn u = measure_to_field(m, g);
        CHECK(check_Yplus_inequalities(u).value <= 1e-6);
        // A negative profile must register violations.
        CHECK(check_Yplus_inequalities(-1.0 * u).value > 0.1 * u.max());
    }
}

TEST_CASE("rho profile and its derivative norm")
{
    const std::vector<double> pts{0.0, 1.0, -2.0};
    const auto r = rho_profile(pts);
    CHECK(r[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    for (double x = -30.0; x <= 30.0; x += 0.25) CHECK(rho(x) > 0.0);
    const double norm2 = quad([](double x) { return rho_prime(x) * rho_prime(x); });
    CHECK(norm2 == doctest::Approx(1.0 / 54.0).epsilon(1e-9));
    CHECK(std::abs(norm2 - 7.0 / 54.0) > 0.1);
}
