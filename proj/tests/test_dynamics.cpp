#include <doctest.h>

#include "peakon/dynamics.hpp"
#include "peakon/functionals.hpp"
#include "peakon/states.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace peakon;

namespace {

PeakonState random_positive(std::mt19937_64& rng, int n, double spread = 8.0)
{
    std::uniform_real_distribution<double> pos(-spread, spread), amp(0.2, 2.0);
    std::vector<double> q(n), p(n);
    for (int i = 0; i < n; ++i) {
        q[i] = pos(rng);
        p[i] = amp(rng);
    }
    return make_state(q, p);
}

// u = (1 - d^2)^{-1} y for a smooth positive y made of two Gaussians. Larger amplitudes
// concentrate y into near-peakons within T = 20 and outrun the grid.
GridFn smooth_yplus(const UniformGrid& g, double amp = 0.2)
{
    const GridFn y = GridFn::sample(g, [amp](double x) {
        return amp * std::exp(-(x + 3.0) * (x + 3.0) / 8.0) + 0.5 * amp * std::exp(-(x - 4.0) * (x - 4.0) / 4.0);
    });
    return helmholtz_inv(y, 1.0);
}

}  // namespace

TEST_CASE("multipeakon_rhs")
{
    const auto one = multipeakon_rhs(single_peakon(1.7, 2.0), 3.0);
    CHECK(one.dq[0] == 1.7);
    CHECK(one.dp[0] == 0.0);

    const double d = 1.3;
    for (double b : {1.0, 2.0, 3.0, 4.5}) {
        const auto r = multipeakon_rhs(PeakonState{{0.0, d}, {1.0, 1.0}}, b);
        CHECK(r.dp[0] == doctest::Approx(-(b - 1.0) * std::exp(-d)).epsilon(1e-15));
        CHECK(r.dp[1] == doctest::Approx((b - 1.0) * std::exp(-d)).epsilon(1e-15));
    }

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = random_positive(rng, 12);
        const auto fast = multipeakon_rhs(s, 3.0);
        const auto slow = multipeakon_rhs_direct(s, 3.0);
        double mom = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(fast.dq[i] == doctest::Approx(slow.dq[i]).epsilon(1e-13));
            CHECK(fast.dp[i] == doctest::Approx(slow.dp[i]).epsilon(1e-12).scale(1.0));
            mom += fast.dp[i];
        }
        CHECK(std::abs(mom) <= 1e-13);
        for (double v : multipeakon_rhs(s, 1.0).dp) CHECK(v == 0.0);
    }
}

TEST_CASE("step_multipeakon")
{
    const BFamilyParams params{3.0, 0.0, 0.5};

    SUBCASE("single peakon moves rigidly")
    {
        PeakonState s = single_peakon(1.0, -2.0);
        for (int k = 0; k < 100; ++k) s = step_multipeakon(s, params, 0.1);
        CHECK(s.q[0] == doctest::Approx(8.0).epsilon(1e-10).scale(1.0));
        CHECK(s.p[0] == 1.0);
    }

    SUBCASE("ordering and positivity persist")
    {
        PeakonState s = make_state({-5.0, 0.0}, {2.0, 0.5});
        SolverStats stats;
        for (int k = 0; k < 4000; ++k) {
            s = step_multipeakon(s, params, 0.02, &stats);
            REQUIRE(s.is_positive());
        }
        CHECK(s.q[1] - s.q[0] > 0.0);
        CHECK(stats.steps >= 4000);
    }

    SUBCASE("time reversal")
    {
        std::mt19937_64 rng(2);
        const auto s0 = random_positive(rng, 5, 4.0);
        PeakonState s = s0;
        for (int k = 0; k < 50; ++k) s = step_multipeakon(s, params, 0.01);
        for (int k = 0; k < 50; ++k) s = step_multipeakon(s, params, -0.01);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s.q[i] == doctest::Approx(s0.q[i]).epsilon(1e-9).scale(1.0));
            CHECK(s.p[i] == doctest::Approx(s0.p[i]).epsilon(1e-9).scale(1.0));
        }
    }

    SUBCASE("preconditions")
    {
        CHECK_THROWS_AS(step_multipeakon(single_peakon(1.0), params, 0.0), DomainError);
        CHECK_THROWS_AS(step_multipeakon(PeakonState{{1.0, 0.0}, {1.0, 1.0}}, params, 0.1), DomainError);
    }
}

TEST_CASE("evolve_particles conserves the invariants")
{
    std::mt19937_64 rng(5);
    const auto s0 = random_positive(rng, 5);

    const auto dp = evolve_particles(s0, {3.0, 0.0, 0.5}, 50.0, 0.01, 5.0);
    REQUIRE_FALSE(dp.stats.aborted);
    REQUIRE(dp.size() == 11);
    CHECK(dp.times.back() == 50.0);
    const double M0 = mass_M(s0), H0 = energy_DP(s0), F0 = cubic_DP(s0);
    for (const auto& s : dp.states) {
        CHECK(std::abs(mass_M(s) - M0) <= 1e-10);
        CHECK(std::abs(energy_DP(s) - H0) <= 1e-8 * H0);
        CHECK(std::abs(cubic_DP(s) - F0) <= 1e-7 * F0);
        CHECK(s.is_positive());
    }

    const auto ch = evolve_particles(s0, {2.0, 0.0, 0.5}, 50.0, 0.01, 5.0);
    const double E0 = energy_CH(s0), G0 = cubic_CH(s0);
    for (const auto& s : ch.states) {
        CHECK(std::abs(energy_CH(s) - E0) <= 1e-8 * E0);
        CHECK(std::abs(cubic_CH(s) - G0) <= 1e-8 * G0);
    }

    CHECK_THROWS_AS(evolve_particles(s0, {3.0, 0.0, 0.5}, -1.0, 0.01, 1.0), DomainError);
}

TEST_CASE("grid_rhs")
{
    const auto g = make_grid(200.0, 2048);
    CHECK(grid_rhs(GridFn(g), 3.0).max_abs() == 0.0);

    const GridFn u = smooth_yplus(g);
    const GridFn dp_form = -1.0 * (u * deriv(u, 1)) - 1.5 * deriv(helmholtz_inv(u * u, 1.0), 1);
    CHECK((grid_rhs(u, 3.0) - dp_form).max_abs() <= 1e-10);

    // A mollified peakon travels: rhs ~ -c u_x, better as the mollifier narrows.
    const auto fine = make_grid(100.0, 8192);
    GridFn peak(fine);
    peak.values = peakon_field(single_peakon(1.0), fine.nodes());
    double previous = INFINITY;
    for (int n : {2, 4, 8}) {
        const GridFn un = mollify(peak, n);
        const double err = l2_norm(grid_rhs(un, 3.0) + deriv(un, 1));
        CHECK(err < previous);
        previous = err;
    }
}

TEST_CASE("evolve_grid")
{
    const auto g = make_grid(200.0, 2048);
    const BFamilyParams dp{3.0, 0.0, 0.5};

    SUBCASE("zero data")
    {
        const auto traj = evolve_grid(GridFn(g), dp, 2.0, 0.1, 0.5);
        REQUIRE(traj.size() == 5);
        for (const auto& u : traj.states) CHECK(u.max_abs() == 0.0);
    }

    SUBCASE("smooth data conserve mass and energy")
    {
        const GridFn u0 = smooth_yplus(g);
        const auto traj = evolve_grid(u0, dp, 20.0, 0.02, 2.0);
        REQUIRE_FALSE(traj.stats.aborted);
        const double M0 = mass_M(u0), H0 = energy_DP(u0);
        for (const auto& u : traj.states) {
            CHECK(std::abs(mass_M(u) - M0) <= 1e-8 * M0);
            CHECK(std::abs(energy_DP(u) - H0) <= 1e-6 * H0);
        }
        const auto ch = evolve_grid(u0, {2.0, 0.0, 0.5}, 20.0, 0.02, 2.0);
        const double E0 = energy_CH(u0);
        for (const auto& u : ch.states) CHECK(std::abs(energy_CH(u) - E0) <= 1e-6 * E0);
    }
}

TEST_CASE("flow_map")
{
    const auto g = make_grid(20.0, 64);
    const double L = g.length, kappa = 2.0 * std::numbers::pi / L;

    SUBCASE("identity at t = 0 and on a zero field")
    {
        GridTrajectory traj;
        for (int k = 0; k <= 4; ++k) {
            traj.times.push_back(0.5 * k);
            traj.states.emplace_back(g);
        }
        const auto s = flow_map(traj, 1.25);
        for (const auto& row : s.rows) {
            CHECK(row[1] == 1.25);
            CHECK(row[2] == 1.0);
        }
    }

    SUBCASE("time-dependent constant field")
    {
        GridTrajectory traj;
        for (int k = 0; k <= 10; ++k) {
            const double t = 0.2 * k;
            traj.times.push_back(t);
            traj.states.push_back(GridFn::sample(g, [t](double) { return 0.3 * t; }));
        }
        const auto s = flow_map(traj, -1.0);
        for (const auto& row : s.rows) CHECK(row[1] == doctest::Approx(-1.0 + 0.15 * row[0] * row[0]).epsilon(1e-12).scale(1.0));
    }

    SUBCASE("stationary sine field against the closed form")
    {
        const double A = 0.4;
        GridTrajectory traj;
        for (int k = 0; k <= 20; ++k) {
            traj.times.push_back(0.1 * k);
            traj.states.push_back(GridFn::sample(g, [&](double x) { return A * std::sin(kappa * x); }));
        }
        const double x0 = 1.1;
        const auto s = flow_map(traj, x0, 16);
        for (const auto& row : s.rows) {
            const double t = row[0];
            const double q = 2.0 / kappa * std::atan(std::tan(kappa * x0 / 2.0) * std::exp(A * kappa * t));
            CHECK(row[1] == doctest::Approx(q).epsilon(1e-9).scale(1.0));
            CHECK(row[2] == doctest::Approx(std::sin(kappa * q) / std::sin(kappa * x0)).epsilon(1e-8));
        }
    }
}

TEST_CASE("series CSV round trip")
{
    TimeSeries s({"t", "a"});
    s.append({0.0, 0.1});
    s.append({1.0 / 3.0, -1e-300});
    std::stringstream buf;
    write_csv(buf, s);
    CHECK(buf.str().substr(0, 4) == "t,a\n");
    const auto back = read_csv(buf);
    CHECK(back.columns == s.columns);
    CHECK(back.rows == s.rows);
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK_THROWS_AS(s.append({1.0}), DomainError);
    std::stringstream bad("t,a\n1,x\n");
    CHECK_THROWS_AS(read_csv(bad), DomainError);
}
