"""Peakon dynamics for the b-family of shallow-water equations."""

from ._core import (
    ConfigError,
    DomainError,
    PeakonState,
    SolverAbort,
    cubic_dp,
    energy_ch,
    energy_dp,
    evolve_grid,
    evolve_particles,
    experiment_names,
    grid_energy_dp,
    mass,
    psi,
    psi_prime,
    rho,
    run,
    single_peakon,
    verify_suites,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "PeakonState",
    "SolverAbort",
    "cubic_dp",
    "energy_ch",
    "energy_dp",
    "evolve_grid",
    "evolve_particles",
    "experiment_names",
    "grid_energy_dp",
    "mass",
    "psi",
    "psi_prime",
    "rho",
    "run",
    "single_peakon",
    "verify_suites",
]
