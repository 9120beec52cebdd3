"""
Energies and pointwise diagnostics for a 1+1 field on the tortoise grid.

Null derivatives are L = d_t + d_x and Lbar = d_t - d_x, null weights
ubar = t + x and u = t - x (raw tortoise coordinate, no shift).  Spatial
integrals use the trapezoid rule; d_x is a centered difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .geometry import SchwarzschildParams, TortoiseGrid, horizon_gap_from_tortoise, photon_sphere_tortoise
from .potential import PotentialTable

CSV_COLUMNS = (
    "t",
    "e_basic",
    "e_morawetz",
    "mor_ubar_flux",
    "mor_u_flux",
    "mor_potential",
    "e_local",
    "trapping_integral",
    "max_abs_psi",
    "envelope_ratio",
)


@dataclass(frozen=True)
class EnergyBreakdown:
    t: float
    e_basic: float
    e_morawetz: float
    mor_ubar_flux: float
    mor_u_flux: float
    mor_potential: float
    e_local: float
    trapping_integral: float
    max_abs_psi: float
    envelope_ratio: float

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


assert tuple(f.name for f in fields(EnergyBreakdown)) == CSV_COLUMNS


def _trap(values: np.ndarray, dx: float) -> float:
    return float(np.trapezoid(values, dx=dx))


def space_derivative(psi: np.ndarray, dx: float) -> np.ndarray:
    return np.gradient(psi, dx)


def null_derivatives(snap, grid: TortoiseGrid):
    px = space_derivative(snap.psi, grid.dx)
    return snap.dpsi_dt + px, snap.dpsi_dt - px


def basic_energy_density(snap, q: np.ndarray, grid: TortoiseGrid) -> np.ndarray:
    lp, lb = null_derivatives(snap, grid)
    return lp * lp + lb * lb + q * snap.psi**2


def basic_energy(snap, table: PotentialTable, grid: TortoiseGrid) -> float:
    """int (L psi)^2 + (Lbar psi)^2 + Q psi^2 dx."""
    return _trap(basic_energy_density(snap, table.q, grid), grid.dx)


def conserved_energy(snap, table: PotentialTable, grid: TortoiseGrid) -> float:
    """
    int psi_t^2 + psi_x^2 + Q psi^2 dx, the time-translation energy.

    basic_energy weights the potential term half as much relative to the
    derivative terms, so it is only conserved when Q = 0; it always lies
    between this value and twice it.
    """
    px = space_derivative(snap.psi, grid.dx)
    return _trap(snap.dpsi_dt**2 + px * px + table.q * snap.psi**2, grid.dx)


def morawetz_terms(snap, q: np.ndarray, grid: TortoiseGrid) -> tuple[float, float, float]:
    t = snap.t
    ub = t + grid.x
    u = t - grid.x
    lp, lb = null_derivatives(snap, grid)
    dx = grid.dx
    return (
        _trap((1.0 + ub * ub) * lp * lp, dx),
        _trap((1.0 + u * u) * lb * lb, dx),
        _trap((1.0 + ub * ub + u * u) * q * snap.psi**2, dx),
    )


def morawetz_energy(snap, table: PotentialTable, grid: TortoiseGrid, q: np.ndarray | None = None):
    """
    Conformal energy with weights (1 + ubar^2), (1 + u^2), (1 + ubar^2 + u^2).

    Returns ``(total, (ubar_flux, u_flux, potential_term))``.  ``q`` replaces
    the table's potential in the last term (see :func:`theorem_potential_weight`).
    """
    terms = morawetz_terms(snap, table.q if q is None else q, grid)
    return sum(terms), terms


def theorem_potential_weight(lam: float, grid: TortoiseGrid) -> np.ndarray:
    """f (lam^2/r^2 + M/r^3): the per-mode potential weight of the 3-D estimate."""
    r, f, m = grid.r_of_x, grid.f_of_x, grid.params.mass
    return f * (lam * lam / r**2 + m / r**3)


def k0_density(snap, table: PotentialTable, grid: TortoiseGrid, x: float | None = None):
    """1/4 ubar^2 (L psi)^2 + 1/4 u^2 (Lbar psi)^2 + 1/4 (ubar^2 + u^2) Q psi^2."""
    t = snap.t
    ub = t + grid.x
    u = t - grid.x
    lp, lb = null_derivatives(snap, grid)
    dens = 0.25 * (ub * ub * lp * lp + u * u * lb * lb + (ub * ub + u * u) * table.q * snap.psi**2)
    if x is None:
        return dens
    return float(dens[grid.index_of(x)])


def local_energy(snap, table: PotentialTable, grid: TortoiseGrid, radius: float = 20.0,
                 center: float | None = None) -> float:
    """Basic-energy integrand over |x - center| <= radius, center defaulting to r*(3M)."""
    if not radius > 0:
        raise ValueError("window radius must be positive")
    if center is None:
        center = photon_sphere_tortoise(grid.params)
    if center - radius < grid.x_min - 1e-12 or center + radius > grid.x_max + 1e-12:
        raise ValueError("local-energy window exceeds the grid")
    mask = grid.window(center, radius)
    return _trap(basic_energy_density(snap, table.q, grid)[mask], grid.dx)


def trapping_integral(snap, table: PotentialTable, grid: TortoiseGrid) -> float:
    """int (y dQ/dy + 2Q) psi^2 dx with y = x - x0(lambda)."""
    y = grid.x - table.x0
    return _trap((y * table.dq + 2.0 * table.q) * snap.psi**2, grid.dx)


def multiplier_weight(x, k: float = 2.0):
    """int_0^x (1 + |y|)^(-k) dy = sgn(x) (1 - (1 + |x|)^(1-k)) / (k - 1)."""
    if not k > 1:
        raise ValueError("k must exceed 1")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * (1.0 - (1.0 + np.abs(x)) ** (1.0 - k)) / (k - 1.0)
    return float(out) if out.ndim == 0 else out


def _envelope_from(t: float, x, r, f):
    gap = np.abs(t - np.abs(np.asarray(x, dtype=float)))
    with np.errstate(divide="ignore"):
        inv = np.where(gap > 0, 1.0 / gap, np.inf)
        f_term = np.where(f > 0, f ** -0.25, np.inf)
    branch2 = np.where(gap > 0, np.sqrt(r) * f_term * inv, np.inf)
    branch3 = np.sqrt(inv)
    return np.minimum(1.0, np.minimum(branch2, branch3))


def sobolev_envelope(t: float, x, params: SchwarzschildParams, grid: TortoiseGrid | None = None):
    """
    min{1, r^(1/2) f^(-1/4) |t - |x||^(-1), |t - |x||^(-1/2)} at tortoise x.

    Pass ``grid`` (with ``x`` ignored) to evaluate on all nodes without re-inverting r*.
    """
    if grid is not None:
        return _envelope_from(t, grid.x, grid.r_of_x, grid.f_of_x)
    gap = horizon_gap_from_tortoise(x, params)
    r = 2.0 * params.mass + gap
    out = _envelope_from(t, x, r, gap / r)
    return float(out) if np.ndim(out) == 0 else out


def pointwise_target(t: float, x, params: SchwarzschildParams, epsilon: float, grid: TortoiseGrid | None = None):
    """epsilon min(1, |t - |x||^(-1/2)) / r(x)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if grid is not None:
        x, r = grid.x, grid.r_of_x
    else:
        r = 2.0 * params.mass + horizon_gap_from_tortoise(x, params)
    gap = np.abs(t - np.abs(np.asarray(x, dtype=float)))
    with np.errstate(divide="ignore"):
        decay = np.where(gap > 1.0, 1.0 / np.sqrt(gap), 1.0)
    out = epsilon * decay / r
    return float(out) if np.ndim(out) == 0 else out


def poincare_ratio(snap, grid: TortoiseGrid) -> float:
    """
    int psi^2 / int [ubar^2 (L psi)^2 + u^2 (Lbar psi)^2 + (1 + ubar^2 + u^2) f psi^2 / r^3].
    """
    t = snap.t
    ub = t + grid.x
    u = t - grid.x
    lp, lb = null_derivatives(snap, grid)
    rhs = _trap(ub * ub * lp * lp + u * u * lb * lb
                + (1 + ub * ub + u * u) * grid.f_of_x * snap.psi**2 / grid.r_of_x**3, grid.dx)
    lhs = _trap(snap.psi**2, grid.dx)
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


def energy_breakdown(snap, table: PotentialTable, grid: TortoiseGrid, window_radius: float = 20.0) -> EnergyBreakdown:
    terms = morawetz_terms(snap, table.q, grid)
    env = _envelope_from(snap.t, grid.x, grid.r_of_x, grid.f_of_x)
    return EnergyBreakdown(
        t=float(snap.t),
        e_basic=basic_energy(snap, table, grid),
        e_morawetz=float(sum(terms)),
        mor_ubar_flux=terms[0],
        mor_u_flux=terms[1],
        mor_potential=terms[2],
        e_local=local_energy(snap, table, grid, window_radius),
        trapping_integral=trapping_integral(snap, table, grid),
        max_abs_psi=float(np.max(np.abs(snap.psi))),
        envelope_ratio=float(np.max(np.abs(snap.psi) / env)),
    )
