#pragma once

#include "peakon/grid.hpp"
#include "peakon/particles.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace peakon {

/// Nonnegative momentum density y = u - u_xx: point masses plus an optional density.
///
/// Density values are cell averages: value j is the mean of y over [x_j, x_j + spacing).
/// Atom masses are masses of y, so an atom of mass m contributes (m/2) exp(-|x - x0|) to u.
struct MomentumMeasure {
    std::vector<std::pair<double, double>> atoms;  ///< (position, mass), positions increasing
    std::optional<GridFn> density;

    bool empty() const { return atoms.empty() && !density; }
    /// <y, 1>.
    double total_mass() const;
    /// Throws DomainError on nonpositive masses, unordered atoms or a negative density.
    void validate() const;
};

/// u = p * y on the grid (p = exp(-|x|)/2). Atoms use the periodic kernel, the density
/// is convolved exactly cell by cell. Empty measures give the zero field.
GridFn measure_to_field(const MomentumMeasure& y, const UniformGrid& grid);

/// (4 - d_xx)^{-1} u for u = p * y, computed the same way (kernel rho per unit atom mass/2).
GridFn measure_to_v(const MomentumMeasure& y, const UniformGrid& grid);

/// Bins the density into cells of width `spacing` (bins [k*spacing, (k+1)*spacing)) and
/// replaces each bin by one particle p = mass/2 at the bin's mass centroid. Atoms are kept.
/// Total mass is preserved.
PeakonState discretize_measure(const MomentumMeasure& y, double spacing);

/// A multipeakon state viewed as a measure (mass 2p per atom).
MomentumMeasure measure_from_state(const PeakonState& s);

/// Convolution with rho_n(x) = n rho(n x) / int rho, rho(x) = exp(1/(x^2-1)) on |x| < 1.
/// The discrete kernel is normalized to unit sum, so the grid integral is preserved.
GridFn mollify(const GridFn& u, int n);

/// W^{1,1} norm given samples of w and w_x.
double w11_norm(const GridFn& w, const GridFn& wx);

struct YplusSampleSpec {
    std::size_t min_atoms = 0;
    std::size_t max_atoms = 4;
    double min_mass = 0.05;
    double max_mass = 2.0;
    double spread = 8.0;            ///< atoms and bump centers uniform in [-spread, spread]
    std::size_t min_bumps = 0;
    std::size_t max_bumps = 3;
    double min_amplitude = 0.01;
    double max_amplitude = 1.0;
    double min_width = 0.3;
    double max_width = 3.0;
    double grid_length = 200.0;
    std::size_t grid_count = 2048;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Deterministic random Y+ measure: atoms plus a density made of Gaussians and
/// tanh-smoothed indicators (exact cell averages), clipped at zero.
MomentumMeasure sample_Yplus(const YplusSampleSpec& spec);

/// Uniform double in [0, 1) from a 64-bit engine draw; identical on every platform.
double unit_uniform(std::uint64_t bits);

std::string measure_to_json(const MomentumMeasure& y);
MomentumMeasure measure_from_json(const std::string& text);

}  // namespace peakon
