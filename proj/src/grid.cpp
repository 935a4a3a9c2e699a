#include "peakon/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace peakon {

namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

struct PlanPair {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

// Plans are created once per size; planner calls are not thread safe, execution with
// new-array functions is.
const PlanPair& plans_for(std::size_t n)
{
    static std::mutex mutex;
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto in = alloc_real(n);
    auto out = alloc_complex(n / 2 + 1);
    PlanPair pp;
    const int ni = static_cast<int>(n);
    pp.r2c = fftw_plan_dft_r2c_1d(ni, in.get(), out.get(), FFTW_ESTIMATE);
    pp.c2r = fftw_plan_dft_c2r_1d(ni, out.get(), in.get(), FFTW_ESTIMATE);
    return cache.emplace(n, pp).first->second;
}

void require_same_grid(const GridFn& a, const GridFn& b)
{
    if (!(a.grid == b.grid)) throw DomainError("grid functions live on different grids");
}

// Multiplies every bin by symbol(k, m) and transforms back.
template <class Symbol>
GridFn apply_symbol(const GridFn& f, Symbol symbol)
{
    Spectrum s = forward_fft(f);
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= symbol(f.grid.wavenumber(m), m);
    return inverse_fft(f.grid, s);
}

}  // namespace

std::vector<double> UniformGrid::nodes() const
{
    std::vector<double> x(count);
    for (std::size_t j = 0; j < count; ++j) x[j] = node(j);
    return x;
}

double UniformGrid::wavenumber(std::size_t m) const
{
    return 2.0 * std::numbers::pi * static_cast<double>(m) / length;
}

std::size_t UniformGrid::nearest_index(double x) const
{
    const double r = std::round((x + 0.5 * length) / spacing);
    const auto n = static_cast<long long>(count);
    long long j = static_cast<long long>(r) % n;
    if (j < 0) j += n;
    return static_cast<std::size_t>(j);
}

UniformGrid make_grid(double length, std::size_t count)
{
    if (!(length > 0.0) || !std::isfinite(length)) throw DomainError("grid length must be positive");
    if (count < 16 || !std::has_single_bit(count))
        throw DomainError("grid count must be a power of two >= 16");
    return UniformGrid{length, count, length / static_cast<double>(count)};
}

GridFn::GridFn(const UniformGrid& g, std::vector<double> v) : grid(g), values(std::move(v))
{
    if (values.size() != grid.count) throw DomainError("value count does not match grid");
}

GridFn GridFn::sample(const UniformGrid& g, const std::function<double(double)>& f)
{
    GridFn out(g);
    for (std::size_t j = 0; j < g.count; ++j) out.values[j] = f(g.node(j));
    return out;
}

GridFn& GridFn::operator+=(const GridFn& o)
{
    require_same_grid(*this, o);
    for (std::size_t j = 0; j < values.size(); ++j) values[j] += o.values[j];
    return *this;
}

GridFn& GridFn::operator-=(const GridFn& o)
{
    require_same_grid(*this, o);
    for (std::size_t j = 0; j < values.size(); ++j) values[j] -= o.values[j];
    return *this;
}

GridFn& GridFn::operator*=(double s)
{
    for (double& v : values) v *= s;
    return *this;
}

double GridFn::max() const { return *std::max_element(values.begin(), values.end()); }
double GridFn::min() const { return *std::min_element(values.begin(), values.end()); }

double GridFn::max_abs() const
{
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

bool GridFn::all_finite() const
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

GridFn operator+(GridFn a, const GridFn& b) { return a += b; }
GridFn operator-(GridFn a, const GridFn& b) { return a -= b; }
GridFn operator*(double s, GridFn a) { return a *= s; }

GridFn operator*(const GridFn& a, const GridFn& b)
{
    require_same_grid(a, b);
    GridFn out(a.grid);
    for (std::size_t j = 0; j < a.size(); ++j) out.values[j] = a.values[j] * b.values[j];
    return out;
}

Spectrum forward_fft(const GridFn& f)
{
    const std::size_t n = f.grid.count;
    const PlanPair& pp = plans_for(n);
    auto in = alloc_real(n);
    auto out = alloc_complex(n / 2 + 1);
    std::copy(f.values.begin(), f.values.end(), in.get());
    fftw_execute_dft_r2c(pp.r2c, in.get(), out.get());
    Spectrum s(n / 2 + 1);
    for (std::size_t m = 0; m < s.size(); ++m) s[m] = {out[m][0], out[m][1]};
    return s;
}

GridFn inverse_fft(const UniformGrid& grid, const Spectrum& s)
{
    const std::size_t n = grid.count;
    if (s.size() != n / 2 + 1) throw DomainError("spectrum size does not match grid");
    const PlanPair& pp = plans_for(n);
    auto in = alloc_complex(n / 2 + 1);
    auto out = alloc_real(n);
    for (std::size_t m = 0; m < s.size(); ++m) {
        in[m][0] = s[m].real();
        in[m][1] = s[m].imag();
    }
    fftw_execute_dft_c2r(pp.c2r, in.get(), out.get());
    GridFn f(grid);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) f.values[j] = out[j] * inv_n;
    return f;
}

GridFn deriv(const GridFn& f, int order)
{
    if (order != 1 && order != 2) throw DomainError("derivative order must be 1 or 2");
    const std::size_t nyquist = f.grid.count / 2;
    return apply_symbol(f, [&](double k, std::size_t m) -> std::complex<double> {
        if (order == 1) return m == nyquist ? 0.0 : std::complex<double>(0.0, k);
        return -k * k;
    });
}

GridFn helmholtz_inv(const GridFn& f, double a)
{
    if (!(a > 0.0)) throw DomainError("Helmholtz parameter must be positive");
    const double a2 = a * a;
    return apply_symbol(f, [&](double k, std::size_t) -> std::complex<double> { return 1.0 / (a2 + k * k); });
}

GridFn helmholtz_apply(const GridFn& f, double a)
{
    const double a2 = a * a;
    return apply_symbol(f, [&](double k, std::size_t) -> std::complex<double> { return a2 + k * k; });
}

double green_kernel_value(double a, double length, double x)
{
    // Wrap into [-L/2, L/2] first.
    double r = std::fmod(std::abs(x), length);
    if (r > 0.5 * length) r = length - r;
    const double half = 0.5 * a * length;
    // cosh(a(L/2-r))/sinh(aL/2) written to avoid overflow for large aL.
    const double num = std::exp(-a * r) + std::exp(-a * (length - r));
    const double den = 1.0 - std::exp(-2.0 * half);
    return num / (den * 2.0 * a);
}

GridFn green_kernel(double a, const UniformGrid& grid)
{
    if (!(a > 0.0)) throw DomainError("Green kernel parameter must be positive");
    return GridFn::sample(grid, [&](double x) { return green_kernel_value(a, grid.length, x); });
}

double resolvent_identity_residual(const GridFn& f)
{
    const GridFn composed = helmholtz_inv(helmholtz_inv(f, 1.0), 2.0);
    GridFn split = helmholtz_inv(f, 1.0) - helmholtz_inv(f, 2.0);
    split *= 1.0 / 3.0;
    return (composed - split).max_abs();
}

double integrate(std::span<const double> values, double spacing)
{
    double s = 0.0;
    for (double v : values) s += v;
    return s * spacing;
}

double integrate(const GridFn& f) { return integrate(f.values, f.grid.spacing); }

double l2_norm(const GridFn& f) { return std::sqrt(integrate(f * f)); }

SpectralInterpolant::SpectralInterpolant(const GridFn& f) : grid_(f.grid), coeffs_(forward_fft(f)) {}

double SpectralInterpolant::operator()(double x) const
{
    const std::size_t n = grid_.count;
    const double s = x + 0.5 * grid_.length;
    double acc = coeffs_[0].real();
    for (std::size_t m = 1; m < n / 2; ++m) {
        const double th = grid_.wavenumber(m) * s;
        acc += 2.0 * (coeffs_[m].real() * std::cos(th) - coeffs_[m].imag() * std::sin(th));
    }
    // Nyquist bin: real part only, symmetric split.
    acc += coeffs_[n / 2].real() * std::cos(grid_.wavenumber(n / 2) * s);
    return acc / static_cast<double>(n);
}

double SpectralInterpolant::derivative(double x) const
{
    const std::size_t n = grid_.count;
    const double s = x + 0.5 * grid_.length;
    double acc = 0.0;
    for (std::size_t m = 1; m < n / 2; ++m) {
        const double k = grid_.wavenumber(m);
        const double th = k * s;
        acc += 2.0 * k * (-coeffs_[m].real() * std::sin(th) - coeffs_[m].imag() * std::cos(th));
    }
    return acc / static_cast<double>(n);
}

}  // namespace peakon
