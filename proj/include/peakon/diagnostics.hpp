#pragma once

#include "peakon/dynamics.hpp"
#include "peakon/grid.hpp"
#include "peakon/particles.hpp"
#include "peakon/series.hpp"

#include <span>
#include <string>
#include <vector>

namespace peakon {

// ---------------------------------------------------------------- modulation

/// Soliton centre x(t), height lambda(t) = max u(t) and smoothed speed.
struct ModulationPath {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> lambda;
    std::vector<double> xdot;
};

/// Discrete argmax of v refined by the parabola through the neighbouring nodes.
/// Throws DomainError when v is flat.
double modulation_argmax(const GridFn& v);
/// Maximum of v = (4 - d_xx)^{-1} u for a particle state: root of the closed-form v_x
/// bracketed around the atom of largest v, bisected to 1e-13.
double modulation_argmax(const PeakonState& s);

/// Root of F(x) = int v rho'(. - x) near x_init (bracket x_init +- 2). Without a sign change
/// it returns x_init and appends a warning to `notes`.
double modulation_orthogonality(const GridFn& v, double x_init, std::vector<std::string>* notes = nullptr);
/// Exact F via the autocorrelation of rho.
double modulation_orthogonality(const PeakonState& s, double x_init, std::vector<std::string>* notes = nullptr);
/// (rho * rho)(d) = int rho(s) rho(s - d) ds and its derivative.
double rho_autocorrelation(double d);
double rho_autocorrelation_prime(double d);

/// max u of a particle state (attained at an atom).
double peak_height(const PeakonState& s);

/// Five-point Savitzky-Golay (quadratic) derivative on uniformly spaced samples; one-sided
/// second-order differences at the two ends on each side. Needs at least 3 samples.
std::vector<double> smoothed_derivative(const std::vector<double>& t, const std::vector<double>& x);

ModulationPath track_modulation(const ParticleTrajectory& traj);
ModulationPath track_modulation(const GridTrajectory& traj);

// ---------------------------------------------------------------- jump law

struct TrailingJump {
    double a = 0.0;     ///< u_x(q*-) - u_x(q*+) = 2 p_N at the rightmost atom
    double u_at = 0.0;  ///< u(q*)
};

TrailingJump trailing_jump(const PeakonState& s);

struct JumpLawFit {
    /// Columns: t, a, dadt, drive, residual, where drive = (u^2 - u_x^2)(q*-) and
    /// residual = dadt - kappa * drive.
    TimeSeries series;
    double kappa = 0.0;         ///< least-squares fit of dadt = kappa * drive
    double max_residual = 0.0;  ///< max |residual| with the fitted kappa
};

/// da/dt by fourth-order central differences of the sampled a(t) (uniform output spacing,
/// at least five outputs; the two end samples on each side are skipped).
JumpLawFit jump_law_residual(const ParticleTrajectory& traj);

// ---------------------------------------------------------------- identities

/// d/dt int (4v^2 + 5v_x^2 + v_xx^2) g against
///   (2/3) int u^3 g' + coeff_vh int v h g' - 4 int v u^2 g' + int v_x h_x g'.
/// Columns: t, dEdt, u3, vh, vu2, vxhx, residual (the four flux integrals are reported
/// without their coefficients). Fourth-order central differences in time.
TimeSeries flux_identity_residual(const GridTrajectory& traj, const GridFn& g, const GridFn& g_prime, double coeff_vh);
/// The same with g = Psi(. - z) and its exact derivative.
TimeSeries flux_identity_residual(const GridTrajectory& traj, double z, double coeff_vh);

/// max over samples and output times of |y(0,x) - y(t,q(t,x)) q_x(t,x)^b| / max|y(0)|.
double transport_identity_residual(const GridTrajectory& traj, double b, std::span<const double> sample_x,
                                   int substeps = 4);

// ---------------------------------------------------------------- monotonicity

struct ExponentialFit {
    double K0 = 0.0;
    double slope = 0.0;  ///< d ln D / d R
};

/// Least squares ln D = ln K0 + slope * R over the entries with D > 0.
ExponentialFit fit_exponential(std::span<const double> R, std::span<const double> D);

/// I^{+-R}_{t0}(t) = <4v^2 + 5v_x^2 + v_xx^2 + gamma y, Psi(. - z(t))> with
/// z(t) = x(t0) +- R + (1 - alpha)(x(t) - x(t0)).
double localized_functional(const PeakonState& s, double x_t, double x_t0, double R, double gamma, double alpha);

struct MonotonicityReport {
    /// Columns: R, D_plus, D_minus, where D_plus = max_{t<=t0} [I^{+R}(t0) - I^{+R}(t)] and
    /// D_minus = max_{t>=t0} [I^{-R}(t) - I^{-R}(t0)].
    TimeSeries table;
    ExponentialFit fit;  ///< fit of D_plus against R
};

MonotonicityReport monotonicity_audit(const ParticleTrajectory& traj, const ModulationPath& path, double t0,
                                      std::span<const double> R_list, double gamma, double alpha = 1.0 / 3.0);

/// Right tail <4v^2 + 5v_x^2 + v_xx^2 + gamma y, Psi(. - x - R)> of a particle state.
double right_tail(const PeakonState& s, double x, double R, double gamma);

// ---------------------------------------------------------------- stability

struct StabilityOptions {
    double window_A = 10.0;     ///< e_local uses offsets in (-A, right_extent)
    double right_extent = 60.0;
    double theta = 0.5;         ///< e_right window (theta t, inf) u (-inf, z)
    double z = -20.0;
    double gamma_level = 0.0;   ///< level for x_gamma; <= 0 means H/2
    double spacing = 0.05;      ///< sample spacing of the discrete H^1 norms
    double margin = 30.0;       ///< sampled region extends this far beyond the atoms
};

/// Columns: t, x, lambda, xdot, e_local, e_right, tail_mass_left, h1_left, x_gamma,
/// x_gamma_dot, td6_bound. The H^1 norms are discrete sums over sample nodes with hard
/// masks; td6_bound = (1/50) (int u^2 Psi'(. - x_gamma))^{1/2}.
TimeSeries stability_metrics(const ParticleTrajectory& traj, const ModulationPath& path, const StabilityOptions& opt);

// ---------------------------------------------------------------- grid comparisons

/// W^{1,1} norm with a spectral derivative.
double w11_norm(const GridFn& w);

/// Smallest c with |w(t)|_{W11} <= e^{ct} |w(0)|_{W11} over the output times, where w is
/// the difference of the two grid evolutions. 0 when the data coincide.
double w11_contraction(const GridFn& u0a, const GridFn& u0b, const BFamilyParams& params, double T, double dt,
                       double output_every);

/// x -> -u(-x) on the grid (node j maps to node N - j).
GridFn reflect_negate(const GridFn& u);

/// max over output times of |u_tilde(t) - (-u(t, -.))|_{L2}, where u_tilde evolves -u0(-.).
double antipeakon_symmetry_defect(const GridFn& u0, const BFamilyParams& params, double T, double dt,
                                  double output_every);

}  // namespace peakon
