"""Numerical laboratory for an ideal quantum clock at finite truncation."""

from .clock_model import (
    ClockParams,
    ClockState,
    OperatorMatrix,
    band_edge_amplitude,
    boundary_mass,
    decay_report,
    energy_moment_matrix,
    gaussian_state,
    hamiltonian_matrix,
    is_interior,
    overlap_kernel,
    propagator_matrix,
    random_phase_state,
    schroedinger_evolve,
    tick_state,
    weighted_norm,
)
from .time_operator import (
    QuadratureSpec,
    UncertaintyReport,
    apply_P,
    ccr_residual,
    covariance_residual,
    eigen_scan,
    expectation,
    sigma_invariance_scan,
    time_operator_matrix,
    uncertainty_report,
)

__version__ = "0.1.0"
