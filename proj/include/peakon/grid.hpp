#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace peakon {

/// Raised when a caller violates an operation's documented precondition.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Periodic uniform grid on [-L/2, L/2). Node j sits at -L/2 + j*spacing.
struct UniformGrid {
    double length = 0.0;
    std::size_t count = 0;
    double spacing = 0.0;

    double node(std::size_t j) const { return -0.5 * length + static_cast<double>(j) * spacing; }
    std::vector<double> nodes() const;
    /// Angular wavenumber of rfft bin m (m in [0, N/2]).
    double wavenumber(std::size_t m) const;
    /// Index of the node nearest to x, wrapped into [0, N).
    std::size_t nearest_index(double x) const;

    bool operator==(const UniformGrid& other) const
    {
        return length == other.length && count == other.count;
    }
};

UniformGrid make_grid(double length, std::size_t count);

/// A real function sampled on a UniformGrid.
struct GridFn {
    UniformGrid grid;
    std::vector<double> values;

    GridFn() = default;
    explicit GridFn(const UniformGrid& g) : grid(g), values(g.count, 0.0) {}
    GridFn(const UniformGrid& g, std::vector<double> v);

    static GridFn sample(const UniformGrid& g, const std::function<double(double)>& f);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t j) { return values[j]; }
    double operator[](std::size_t j) const { return values[j]; }

    GridFn& operator+=(const GridFn& o);
    GridFn& operator-=(const GridFn& o);
    GridFn& operator*=(double s);

    double max() const;
    double min() const;
    double max_abs() const;
    bool all_finite() const;
};

GridFn operator+(GridFn a, const GridFn& b);
GridFn operator-(GridFn a, const GridFn& b);
GridFn operator*(double s, GridFn a);
/// Pointwise product.
GridFn operator*(const GridFn& a, const GridFn& b);

/// Half-spectrum (N/2+1 bins) of a real grid function, unnormalized rfft.
using Spectrum = std::vector<std::complex<double>>;

Spectrum forward_fft(const GridFn& f);
/// Inverse of forward_fft, including the 1/N normalization.
GridFn inverse_fft(const UniformGrid& grid, const Spectrum& s);

/// Spectral derivative of order 1 or 2. The Nyquist bin is dropped for odd orders.
GridFn deriv(const GridFn& f, int order);

/// Solves (a^2 - d_xx) w = f through the Fourier symbol 1/(a^2 + k^2).
GridFn helmholtz_inv(const GridFn& f, double a);

/// Applies (a^2 - d_xx) spectrally.
GridFn helmholtz_apply(const GridFn& f, double a);

/// Periodic fundamental solution of (a^2 - d_xx): cosh(a(L/2-|x|)) / (2a sinh(aL/2)).
GridFn green_kernel(double a, const UniformGrid& grid);
double green_kernel_value(double a, double length, double x);

/// Sup-norm of (4-d^2)^{-1}(1-d^2)^{-1} f - [(1-d^2)^{-1} f - (4-d^2)^{-1} f] / 3.
double resolvent_identity_residual(const GridFn& f);

/// Trapezoid (= spectral for periodic data) integral.
double integrate(const GridFn& f);
double integrate(std::span<const double> values, double spacing);

double l2_norm(const GridFn& f);

/// Evaluates the trigonometric interpolant of f at an arbitrary point.
class SpectralInterpolant {
public:
    explicit SpectralInterpolant(const GridFn& f);
    double operator()(double x) const;
    /// d/dx of the interpolant.
    double derivative(double x) const;

private:
    UniformGrid grid_;
    Spectrum coeffs_;
};

}  // namespace peakon
