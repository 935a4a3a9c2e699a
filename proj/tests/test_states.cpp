#include <doctest.h>

#include "peakon/states.hpp"

#include <cmath>

using namespace peakon;

namespace {

// Midpoint-rule convolution of g with exp(-|r|)/2 over |r| < 60, nodes symmetric about x.
template <class G>
double convolve_half_exp(G g, double x, double h = 1e-4)
{
    double acc = 0.0;
    for (double r = 0.5 * h; r < 60.0; r += h) acc += 0.5 * std::exp(-r) * (g(x - r) + g(x + r));
    return acc * h;
}

}  // namespace

TEST_CASE("measure_to_field")
{
    const auto g = make_grid(256.0, 2048);  // +-1 fall on nodes

    SUBCASE("single atom is a peakon")
    {
        MomentumMeasure y;
        y.atoms = {{0.0, 2.0 * 1.3}};
        const GridFn u = measure_to_field(y, g);
        for (std::size_t j = 0; j < g.count; j += 97)
            CHECK(u[j] == doctest::Approx(1.3 * std::exp(-std::abs(g.node(j)))).epsilon(1e-12).scale(1.0));
    }

    SUBCASE("empty measure")
    {
        const GridFn u = measure_to_field(MomentumMeasure{}, g);
        CHECK(u.max_abs() == 0.0);
    }

    SUBCASE("atom plus indicator density matches quadrature")
    {
        MomentumMeasure y;
        y.atoms = {{0.0, 2.0}};
        GridFn d(g);
        for (std::size_t j = 0; j < g.count; ++j) {
            const double x = g.node(j);
            if (x >= -1.0 && x < 1.0) d[j] = 0.1;
        }
        y.density = d;
        const GridFn u = measure_to_field(y, g);
        const auto ind = [](double s) { return (s > -1.0 && s < 1.0) ? 0.1 : 0.0; };
        for (double x : {-3.0, -1.0, -0.5, 0.0, 0.375, 1.0, 2.5}) {
            const double oracle = std::exp(-std::abs(x)) + convolve_half_exp(ind, x);
            CHECK(std::abs(u[g.nearest_index(x)] - oracle) <= 1e-6);
        }
        CHECK(u.min() > 0.0);
    }
}

TEST_CASE("measure_to_v agrees with rho for atoms")
{
    const auto g = make_grid(200.0, 2048);
    MomentumMeasure y;
    y.atoms = {{-2.0, 1.0}, {3.0, 0.4}};
    const GridFn v = measure_to_v(y, g);
    for (std::size_t j = 0; j < g.count; j += 101) {
        const double x = g.node(j);
        CHECK(v[j] == doctest::Approx(0.5 * rho(x + 2.0) + 0.2 * rho(x - 3.0)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("discretize_measure")
{
    SUBCASE("pure atoms are kept")
    {
        MomentumMeasure y;
        y.atoms = {{-1.0, 0.5}, {2.0, 3.0}};
        const auto s = discretize_measure(y, 0.1);
        REQUIRE(s.size() == 2);
        CHECK(s.q[0] == -1.0);
        CHECK(s.p[0] == 0.25);
        CHECK(s.q[1] == 2.0);
        CHECK(s.p[1] == 1.5);
    }

    SUBCASE("uniform density on [0,1] with spacing 1/2")
    {
        const auto g = make_grid(16.0, 64);  // spacing 0.25, 0 and 1 on nodes
        GridFn d(g);
        for (std::size_t j = 0; j < g.count; ++j)
            if (g.node(j) >= 0.0 && g.node(j) < 1.0) d[j] = 2.0;
        MomentumMeasure y;
        y.density = d;
        const auto s = discretize_measure(y, 0.5);
        REQUIRE(s.size() == 2);
        CHECK(s.q[0] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(s.q[1] == doctest::Approx(0.75).epsilon(1e-15));
        CHECK(s.p[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(s.p[1] == doctest::Approx(0.5).epsilon(1e-15));
    }

    SUBCASE("Gaussian density conserves mass")
    {
        YplusSampleSpec spec;
        spec.min_atoms = spec.max_atoms = 0;
        spec.min_bumps = spec.max_bumps = 1;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            spec.seed = seed;
            const auto y = sample_Yplus(spec);
            for (double spacing : {0.05, 0.3, 1.7}) {
                const auto s = discretize_measure(y, spacing);
                CHECK(std::abs(s.momentum_mass() - y.total_mass()) <= 1e-12 * y.total_mass());
            }
        }
    }

    CHECK_THROWS_AS(discretize_measure(MomentumMeasure{}, 0.0), DomainError);
}

TEST_CASE("mollify")
{
    const auto g = make_grid(40.0, 8192);
    GridFn u(g), ux(g);
    for (std::size_t j = 0; j < g.count; ++j) {
        const double x = g.node(j);
        u[j] = std::exp(-std::abs(x));
        ux[j] = x > 0.0 ? -u[j] : (x < 0.0 ? u[j] : 0.0);
    }

    double previous = INFINITY;
    for (int n : {4, 8, 16, 32}) {
        const GridFn un = mollify(u, n);
        CHECK(un.min() >= -1e-14);
        CHECK(std::abs(integrate(un) - integrate(u)) <= 1e-10);
        // Convolution commutes with d/dx, so the derivative distance needs no differentiation.
        const double dist = w11_norm(un - u, mollify(ux, n) - ux);
        CHECK(dist < previous);
        previous = dist;
    }
    CHECK(previous < 0.05);
    CHECK_THROWS_AS(mollify(u, 0), DomainError);
}

TEST_CASE("sample_Yplus")
{
    YplusSampleSpec spec;
    spec.seed = 42;
    const auto a = sample_Yplus(spec);
    const auto b = sample_Yplus(spec);
    CHECK(measure_to_json(a) == measure_to_json(b));

    spec.min_atoms = spec.max_atoms = 0;
    spec.min_bumps = spec.max_bumps = 1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        spec.seed = seed;
        const auto y = sample_Yplus(spec);
        REQUIRE(y.density);
        CHECK(y.density->min() >= 0.0);
        CHECK_NOTHROW(y.validate());
    }

    spec.min_mass = 0.0;
    CHECK_THROWS_AS(spec.validate(), DomainError);
}

TEST_CASE("unit_uniform range")
{
    CHECK(unit_uniform(0) == 0.0);
    CHECK(unit_uniform(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("measure JSON round trip")
{
    YplusSampleSpec spec;
    spec.min_atoms = 2;
    spec.min_bumps = 1;
    spec.grid_length = 50.0;
    spec.grid_count = 256;
    spec.seed = 9;
    const auto y = sample_Yplus(spec);
    const auto back = measure_from_json(measure_to_json(y));
    REQUIRE(back.atoms.size() == y.atoms.size());
    for (std::size_t i = 0; i < y.atoms.size(); ++i) CHECK(back.atoms[i] == y.atoms[i]);
    REQUIRE(back.density);
    CHECK(back.density->values == y.density->values);

    CHECK_THROWS_AS(measure_from_json("{\"atoms\": [[0, -1]]}"), DomainError);
    CHECK_THROWS_AS(measure_from_json("not json"), DomainError);
}
