"""Scalar waves on the Schwarzschild exterior: potentials, evolution, energies and decay fits."""

from .analysis import (
    ComplianceTracker,
    ConvergenceOrder,
    DecayFit,
    convergence_order,
    envelope_compliance,
    fit_power_law,
    trapping_halftime,
)
from .evolve import (
    BlowUpDetected,
    NonFiniteFieldError,
    SemilinearSpec,
    Snapshot,
    SourceSpec,
    Trajectory,
    WaveState,
    discrete_energy,
    evolve,
    gaussian_profile,
    initialize_state,
    step_linear,
    step_semilinear,
)
from .functionals import (
    EnergyBreakdown,
    basic_energy,
    conserved_energy,
    energy_breakdown,
    k0_density,
    local_energy,
    morawetz_energy,
    multiplier_weight,
    pointwise_target,
    poincare_ratio,
    sobolev_envelope,
    trapping_integral,
)
from .geometry import (
    SchwarzschildParams,
    TortoiseGrid,
    build_grid,
    metric_factor,
    photon_sphere_tortoise,
    radius_from_tortoise,
    tortoise_from_radius,
)
from .harmonics import (
    ModeCoefficients,
    assemble_total_energy,
    gauss_legendre,
    project_axisymmetric,
    reconstruct,
    ylm0,
)
from .potential import (
    ConditionReport,
    ModeSpec,
    PotentialTable,
    critical_radius,
    critical_tortoise,
    potential_derivative,
    potential_table,
    potential_value,
    regge_wheeler_family,
    search_constants,
    second_derivative_at_critical,
    trapping_term,
    verify_conditions,
)

__version__ = "0.1.0"
