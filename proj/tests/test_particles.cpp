#include <doctest.h>

#include "peakon/grid.hpp"
#include "peakon/particles.hpp"

#include <cmath>
#include <random>

using namespace peakon;

namespace {

// Brute-force convolution oracle: int K(x - s) g(s) ds on [-60, 60] with a fine midpoint rule.
template <class K, class G>
double convolve(K kernel, G g, double x, double h = 2e-4)
{
    // Nodes symmetric about x so kernel kinks sit on cell boundaries.
    double acc = 0.0;
    for (double r = 0.5 * h; r < 60.0; r += h) acc += kernel(r) * g(x - r) + kernel(-r) * g(x + r);
    return acc * h;
}

PeakonState random_state(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> pos(-6.0, 6.0), amp(0.1, 2.0);
    std::vector<double> q(n), p(n);
    for (int i = 0; i < n; ++i) {
        q[i] = pos(rng);
        p[i] = amp(rng);
    }
    return make_state(q, p);
}

}  // namespace

TEST_CASE("peakon_field examples")
{
    CHECK(peakon_field(single_peakon(1.7), 0.0) == doctest::Approx(1.7));
    CHECK(peakon_field(single_peakon(1.0), 3.0) == doctest::Approx(0.049787068367863944).epsilon(1e-12));
    const PeakonState two{{-1.0, 1.0}, {1.0, 1.0}};
    CHECK(peakon_field(two, 0.0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));
    // Field at each particle dominates its amplitude.
    std::mt19937_64 rng(5);
    const auto s = random_state(rng, 6);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(peakon_field(s, s.q[i]) >= s.p[i]);
}

TEST_CASE("make_state sorts and merges")
{
    const auto s = make_state({2.0, -1.0, 2.0}, {1.0, 0.5, 0.25});
    REQUIRE(s.size() == 2);
    CHECK(s.q[0] == -1.0);
    CHECK(s.p[1] == 1.25);
    CHECK(s.is_positive());
    CHECK_FALSE((PeakonState{{1.0, 0.0}, {1.0, 1.0}}).is_valid());
    CHECK_THROWS_AS((PeakonState{{1.0}, {1.0, 2.0}}).validate(), DomainError);
}

TEST_CASE("rho solves (4 - d^2) rho = exp(-|x|)")
{
    CHECK(rho(0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    for (double x = -20.0; x <= 20.0; x += 0.37) CHECK(rho(x) > 0.0);
    // Finite-difference residual away from the kink.
    for (double x : {-3.1, -0.4, 0.25, 2.0, 7.5}) {
        const double h = 1e-4;
        const double d2 = (rho(x + h) - 2.0 * rho(x) + rho(x - h)) / (h * h);
        CHECK(std::abs(4.0 * rho(x) - d2 - std::exp(-std::abs(x))) <= 1e-6);
        CHECK(rho_prime(x) == doctest::Approx((rho(x + h) - rho(x - h)) / (2 * h)).epsilon(1e-7));
        CHECK(rho_second(x) == doctest::Approx(d2).epsilon(1e-5));
    }
    // Spectral oracle: helmholtz_inv(phi, 2) on a large torus.
    const auto g = make_grid(80.0, 4096);
    const auto phi = GridFn::sample(g, [](double x) { return std::exp(-std::abs(x)); });
    const auto r = helmholtz_inv(phi, 2.0);
    double err = 0.0;
    for (std::size_t j = 0; j < g.count; ++j) err = std::max(err, std::abs(r[j] - rho(g.node(j))));
    CHECK(err <= 1e-3);
}

TEST_CASE("evaluate_exact matches convolution oracles")
{
    std::mt19937_64 rng(42);
    const auto s = random_state(rng, 4);
    const auto u = [&](double x) { return peakon_field(s, x); };
    const std::vector<double> pts{-7.3, -1.1, 0.05, 2.2, s.q[1], 9.0};
    const auto f = evaluate_exact(s, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double x = pts[i];
        CHECK(f[i].u == doctest::Approx(u(x)).epsilon(1e-14));
        const double v = convolve([](double r) { return 0.25 * std::exp(-2.0 * std::abs(r)); }, u, x);
        CHECK(f[i].v == doctest::Approx(v).epsilon(1e-7));
        const double h = convolve([](double r) { return 0.5 * std::exp(-std::abs(r)); },
                                  [&](double t) { return u(t) * u(t); }, x);
        CHECK(f[i].h == doctest::Approx(h).epsilon(1e-7));
        const double hx = convolve([](double r) { return r > 0 ? -0.5 * std::exp(-r) : 0.5 * std::exp(r); },
                                   [&](double t) { return u(t) * u(t); }, x);
        CHECK(f[i].hx == doctest::Approx(hx).epsilon(1e-6));
        CHECK(f[i].vxx == doctest::Approx(4.0 * f[i].v - f[i].u).epsilon(1e-13));
    }
    // Jump of u_x at an atom equals -2p.
    CHECK(f[4].ux_right - f[4].ux_left == doctest::Approx(-2.0 * s.p[1]).epsilon(1e-13));
}

TEST_CASE("single peakon equality cases")
{
    const double c = 1.3;
    const std::vector<double> at0{0.0};
    const auto f = evaluate_exact(single_peakon(c), at0)[0];
    CHECK(f.u == doctest::Approx(c));
    CHECK(std::abs(f.u - 6.0 * f.v) <= 1e-14);
    CHECK(std::abs(f.h - f.u * f.u / 3.0) <= 1e-14);
    CHECK(f.ux == 0.0);
    CHECK(f.ux_left == doctest::Approx(c));
}

TEST_CASE("PiecewiseExp integrals agree with quadrature")
{
    std::mt19937_64 rng(9);
    const auto s = random_state(rng, 5);
    const auto u = PiecewiseExp::from_state(s, PiecewiseExp::Field::u);
    const auto ux = PiecewiseExp::from_state(s, PiecewiseExp::Field::ux);
    // E_CH = <y, u> = 2 sum_i p_i u(q_i).
    double yu = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) yu += 2.0 * s.p[i] * peakon_field(s, s.q[i]);
    CHECK((u * u + ux * ux).integrate() == doctest::Approx(yu).epsilon(1e-13));
    CHECK(u.integrate() == doctest::Approx(s.momentum_mass()).epsilon(1e-14));

    const auto u3 = u * u * u;
    double brute = 0.0;
    const double h = 1e-4;
    for (double x = -70.0 + 0.5 * h; x < 70.0; x += h) brute += std::pow(peakon_field(s, x), 3);
    CHECK(u3.integrate() == doctest::Approx(brute * h).epsilon(1e-8));
    CHECK(u3.integrate_weighted([](double) { return 1.0; }) == doctest::Approx(u3.integrate()).epsilon(1e-12));
    CHECK(u.evaluate(0.3) == doctest::Approx(peakon_field(s, 0.3)).epsilon(1e-14));
    CHECK((u * u).integrate(-1.0, 2.5) + (u * u).integrate(2.5, 1e9) + (u * u).integrate(-1e9, -1.0) ==
          doctest::Approx((u * u).integrate()).epsilon(1e-13));
}
