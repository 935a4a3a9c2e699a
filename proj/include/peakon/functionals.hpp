#pragma once

#include "peakon/grid.hpp"
#include "peakon/particles.hpp"
#include "peakon/states.hpp"

#include <map>
#include <span>
#include <string>

namespace peakon {

struct FunctionalReport {
    std::string name;
    double value = 0.0;
    std::map<std::string, double> auxiliary;
};

// Conserved quantities. GridFn overloads are spectral; PeakonState overloads are exact.

double mass_M(const GridFn& u);
double mass_M(const PeakonState& s);

/// int u^2 + u_x^2
double energy_CH(const GridFn& u);
double energy_CH(const PeakonState& s);
/// int u^3 + u u_x^2
double cubic_CH(const GridFn& u);
double cubic_CH(const PeakonState& s);

/// The two routes to the Degasperis-Procesi Hamiltonian.
struct DpEnergy {
    double pairing = 0.0;   ///< <y, v>
    double integral = 0.0;  ///< int 4v^2 + 5v_x^2 + v_xx^2
};

DpEnergy energy_DP_routes(const GridFn& u);
DpEnergy energy_DP_routes(const PeakonState& s);
/// Returns the integral route; throws std::logic_error if the routes differ by more than
/// 1e-6 (relative), which can only come from an operator bug.
double energy_DP(const GridFn& u);
double energy_DP(const PeakonState& s);
/// int u^3
double cubic_DP(const GridFn& u);
double cubic_DP(const PeakonState& s);

/// h = (1 - d_xx)^{-1} u^2.
GridFn h_of_u(const GridFn& u);

/// DP energy density 4v^2 + 5v_x^2 + v_xx^2 with v = (4 - d_xx)^{-1} u.
GridFn dp_energy_density(const GridFn& u);
/// The same density of a particle state in closed form.
PiecewiseExp dp_energy_density(const PeakonState& s);

// Weight Psi(x) = (2/pi) arctan(exp(x/6)) and its derivatives.
double psi(double x);
double psi_prime(double x);
double psi_second(double x);
double psi_ppp(double x);

/// Weighted pairing of a weight g with the energy density and the momentum:
/// <4v^2 + 5v_x^2 + v_xx^2 + gamma*y, Psi(. - z)>.
double localized_energy(const GridFn& u, double z, double gamma);
/// Atoms of y are paired exactly: gamma * sum 2 p_i Psi(q_i - z).
double localized_energy(const PeakonState& s, double z, double gamma);

/// int u^2 Psi'(. - z)
double weighted_u2_psi_prime(const GridFn& u, double z);
double weighted_u2_psi_prime(const PeakonState& s, double z);

/// Energy center: the z with localized_energy(u, z, 0) = gamma_level, by bisection
/// (tolerance 1e-10, at most 200 iterations). Requires 0 < gamma_level < H(u).
double x_gamma(const GridFn& u, double gamma_level);
double x_gamma(const PeakonState& s, double gamma_level);

/// Max pointwise violations of |u_x|<=u, 3v<=u, u<=6v, |v_x|<=2v, |v_xx|<=4u/3,
/// h>=u^2/3, |h_x|<=h and of max(|u|_2, |u|_inf, |u_x|_2, |u_x|_inf) <= <y,1>.
/// Violations are reported as positive numbers; value is the largest of them.
FunctionalReport check_Yplus_inequalities(const GridFn& u);
/// Exact route: evaluates at the given points and at every atom (one-sided u_x there).
FunctionalReport check_Yplus_inequalities(const PeakonState& s, std::span<const double> points);

}  // namespace peakon
