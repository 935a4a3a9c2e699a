#pragma once

#include "peakon/grid.hpp"
#include "peakon/particles.hpp"
#include "peakon/series.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace peakon {

/// Parameters of u_t - u_txx = -(b+1) u u_x + b u_x u_xx + u u_xxx.
struct BFamilyParams {
    double b = 3.0;
    /// Grid solver only. 0 disables the filter; s > 0 multiplies each mode by
    /// exp(-36 s (|k|/k_max)^36) once per time step.
    double filter_strength = 0.0;
    /// Grid solver only: dt <= cfl * spacing / max|u|.
    double cfl = 0.5;

    void validate() const;
};

/// A solver gave up: step size underflow, NaN, or the blow-up guard.
class SolverAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
    bool aborted = false;
    std::string abort_reason;
};

/// Output-time samples of a run. On abort the last entry is the last good state.
template <class State>
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    BFamilyParams params;
    SolverStats stats;

    std::size_t size() const { return times.size(); }
};

using ParticleTrajectory = Trajectory<PeakonState>;
using GridTrajectory = Trajectory<GridFn>;

/// Peakon ODEs for y = sum 2 p_i delta(q_i):
///   dq_i/dt = sum_j p_j exp(-|q_i - q_j|)
///   dp_i/dt = (b - 1) p_i sum_j p_j sgn(q_i - q_j) exp(-|q_i - q_j|),  sgn(0) = 0.
struct ParticleRates {
    std::vector<double> dq;
    std::vector<double> dp;
};

/// O(N) two-sweep evaluation; requires nondecreasing positions.
ParticleRates multipeakon_rhs(const PeakonState& s, double b);
/// O(N^2) direct sum in any order; kept as an oracle and for unsorted input.
ParticleRates multipeakon_rhs_direct(const PeakonState& s, double b);

/// Classic RK4 over a step dt (either sign). A step is rejected and split in two halves
/// when any stage loses strict ordering (gap below 1e-10) or, for b >= 1 with all p > 0,
/// when an amplitude changes sign. Throws SolverAbort once a substep falls below 1e-14.
PeakonState step_multipeakon(const PeakonState& s, const BFamilyParams& params, double dt,
                             SolverStats* stats = nullptr);

/// Integrates to T with steps of at most dt, recording every `output_every` time units
/// (the step is shrunk so that output times are hit exactly). Never throws on abort:
/// stats.aborted is set and the trajectory ends at the last good state.
ParticleTrajectory evolve_particles(const PeakonState& s0, const BFamilyParams& params, double T, double dt,
                                    double output_every);

/// -u u_x - d_x (1 - d_xx)^{-1} ( (b/2) u^2 + ((3-b)/2) u_x^2 ).
GridFn grid_rhs(const GridFn& u, double b);

/// The exponential filter exp(-36 s (|k|/k_max)^36); identity for s = 0.
GridFn spectral_filter(const GridFn& u, double strength);

/// Method of lines with RK4. The step is min(dt, cfl * spacing / max|u|) re-evaluated at
/// each output interval. Aborts on NaN or when max|u| exceeds ten times its initial value.
GridTrajectory evolve_grid(const GridFn& u0, const BFamilyParams& params, double T, double dt,
                           double output_every);

/// Characteristic q' = u(t, q), q(0) = x0, together with
/// q_x(t) = exp( int_0^t u_x(s, q(s)) ds ). The field is interpolated spectrally in space
/// and by cubic Lagrange polynomials through the nearest output times. Columns: t, q, q_x.
/// A characteristic leaving [-L/2, L/2) is clamped and a note is recorded.
TimeSeries flow_map(const GridTrajectory& traj, double x0, int substeps = 4);

}  // namespace peakon
