#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace peakon {

/// Ordered peakon ensemble representing u(x) = sum_i p_i exp(-|x - q_i|).
///
/// The momentum density of this field is y = u - u_xx = sum_i 2 p_i delta(x - q_i):
/// atoms of y carry mass 2p, not p.
struct PeakonState {
    std::vector<double> q;
    std::vector<double> p;

    std::size_t size() const { return q.size(); }
    bool empty() const { return q.empty(); }

    /// Finite values, equal lengths, strictly increasing positions.
    bool is_valid() const;
    /// is_valid() and every amplitude positive.
    bool is_positive() const;
    /// Throws DomainError unless is_valid().
    void validate() const;

    /// Total momentum <y, 1> = 2 * sum p.
    double momentum_mass() const;

    PeakonState translated(double shift) const;
};

/// Sorts atoms by position and merges coincident ones. Signed amplitudes are allowed.
PeakonState make_state(std::vector<double> q, std::vector<double> p);

/// A single peakon c * exp(-|x - x0|).
PeakonState single_peakon(double c, double x0 = 0.0);

/// u(x) = sum p_i exp(-|x - q_i|) on the whole line.
std::vector<double> peakon_field(const PeakonState& s, std::span<const double> points);
double peakon_field(const PeakonState& s, double x);

/// rho(x) = exp(-|x|)/3 - exp(-2|x|)/6, the solution of (4 - d_xx) rho = exp(-|x|).
double rho(double x);
double rho_prime(double x);
double rho_second(double x);
std::vector<double> rho_profile(std::span<const double> points);

/// Closed-form values of a multipeakon field and its nonlocal companions at one point.
/// u_x is the mean of the one-sided limits when the point sits on an atom.
struct FieldSample {
    double u = 0.0;
    double ux = 0.0;
    double ux_left = 0.0;
    double ux_right = 0.0;
    double v = 0.0;    ///< (4 - d_xx)^{-1} u
    double vx = 0.0;
    double vxx = 0.0;
    double h = 0.0;    ///< (1 - d_xx)^{-1} u^2
    double hx = 0.0;
};

/// Exact evaluation at arbitrary points (any order) in O((n + m) log(n + m)).
std::vector<FieldSample> evaluate_exact(const PeakonState& s, std::span<const double> points);

/// One exponential term c * exp(-a (x - lo)) * exp(-b (hi - x)) on a piece [lo, hi].
struct ExpTerm {
    double coef = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// A function that is a finite sum of exponentials on each interval between
/// consecutive atoms (including the two infinite tails). Products stay in the class,
/// so quadratic and cubic functionals integrate in closed form.
class PiecewiseExp {
public:
    struct Piece {
        double lo = 0.0;  ///< -infinity for the left tail
        double hi = 0.0;  ///< +infinity for the right tail
        std::vector<ExpTerm> terms;
    };

    enum class Field { u, ux, v, vx, vxx };

    PiecewiseExp() = default;
    /// Requires a state with sorted distinct positions; signed amplitudes allowed.
    static PiecewiseExp from_state(const PeakonState& s, Field which);

    const std::vector<Piece>& pieces() const { return pieces_; }

    PiecewiseExp operator*(const PiecewiseExp& o) const;
    PiecewiseExp operator+(const PiecewiseExp& o) const;
    PiecewiseExp scaled(double s) const;

    double evaluate(double x) const;
    /// Integral over [x0, x1] (either end may be infinite).
    double integrate(double x0, double x1) const;
    double integrate() const;
    /// Integral of f * weight by composite Gauss-Legendre; tails truncated where the
    /// slowest exponential has decayed below 1e-22.
    double integrate_weighted(const std::function<double(double)>& weight) const;
    /// The nodes and (quadrature weight * f(node)) pairs used by integrate_weighted, so
    /// repeated pairings against different weights can reuse the function values.
    std::vector<std::pair<double, double>> quadrature() const;

private:
    std::vector<Piece> pieces_;
};

}  // namespace peakon
