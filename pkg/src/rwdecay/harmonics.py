"""
Axisymmetric spherical-harmonic bookkeeping.

Only the m = 0 harmonics Y_l0(theta) = sqrt((2l+1)/(4 pi)) P_l(cos theta) are
transformed; they are orthonormal on the unit sphere.  Angular integrals use
Gauss-Legendre quadrature in mu = cos(theta), with the azimuthal factor 2 pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .potential import ModeSpec


def legendre_table(l_max: int, mu) -> np.ndarray:
    """P_0..P_l_max at ``mu`` via the three-term recurrence, shape (l_max+1, len(mu))."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    out = np.empty((l_max + 1, mu.size))
    out[0] = 1.0
    if l_max >= 1:
        out[1] = mu
    for l in range(2, l_max + 1):
        out[l] = ((2 * l - 1) * mu * out[l - 1] - (l - 1) * out[l - 2]) / l
    return out


def gauss_legendre(n: int, tol: float = 1e-15):
    """
    Nodes (ascending) and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Roots of P_n are found by Newton iteration from the Chebyshev-like guess
    cos(pi (k - 1/4) / (n + 1/2)).
    """
    if n < 1:
        raise ValueError("need at least one node")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p = legendre_table(n, x)
        pn, pn1 = p[n], p[n - 1]
        dp = n * (x * pn - pn1) / (x * x - 1.0)
        dx = pn / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    p = legendre_table(n, x)
    dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


def theta_nodes(n: int) -> np.ndarray:
    """Polar angles theta_j = arccos(mu_j) of the Gauss-Legendre nodes."""
    mu, _ = gauss_legendre(n)
    return np.arccos(mu)


def ylm0(l_max: int, theta) -> np.ndarray:
    """Orthonormal Y_l0(theta) for l = 0..l_max, shape (l_max+1, len(theta))."""
    mu = np.cos(np.atleast_1d(np.asarray(theta, dtype=float)))
    norm = np.sqrt((2 * np.arange(l_max + 1) + 1) / (4 * np.pi))[:, None]
    return norm * legendre_table(l_max, mu)


def ylm0_dtheta(l_max: int, theta) -> np.ndarray:
    """d/dtheta of Y_l0, using dP_l/dmu = l (mu P_l - P_{l-1}) / (mu^2 - 1)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    mu = np.cos(theta)
    p = legendre_table(l_max, mu)
    out = np.zeros_like(p)
    for l in range(1, l_max + 1):
        # -sin(theta) dP/dmu = l (mu P_l - P_{l-1}) / sin(theta)
        out[l] = l * (mu * p[l] - p[l - 1]) / np.sin(theta)
    norm = np.sqrt((2 * np.arange(l_max + 1) + 1) / (4 * np.pi))[:, None]
    return norm * out


@dataclass(frozen=True)
class ModeCoefficients:
    """Radial profiles psi_l(x) of the m = 0 harmonics, row l of ``profiles``."""

    l_max: int
    profiles: np.ndarray

    def __post_init__(self):
        if self.profiles.ndim != 2 or self.profiles.shape[0] != self.l_max + 1:
            raise ValueError("profiles must have shape (l_max + 1, n_x)")

    def mode(self, l: int) -> np.ndarray:
        return self.profiles[l]

    def modes(self) -> list[ModeSpec]:
        return [ModeSpec(l) for l in range(self.l_max + 1)]


def project_axisymmetric(samples: np.ndarray, l_max: int) -> ModeCoefficients:
    """
    Project f(x_i, theta_j), sampled at Gauss-Legendre polar nodes, onto Y_l0.

    ``samples`` has shape (n_x, n_theta).  The rule is exact for data that are
    polynomials in cos(theta) of degree <= l_max.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n_theta = samples.shape[1]
    if n_theta < 2 * l_max + 2:
        raise ValueError(f"need at least {2 * l_max + 2} polar nodes for l_max={l_max}, got {n_theta}")
    mu, w = gauss_legendre(n_theta)
    y = ylm0(l_max, np.arccos(mu))
    coeffs = 2.0 * np.pi * (samples * w) @ y.T
    return ModeCoefficients(l_max, np.ascontiguousarray(coeffs.T))


def reconstruct(coeffs: ModeCoefficients, theta) -> np.ndarray:
    """Sum_l psi_l(x) Y_l0(theta); shape (n_x,) for scalar theta, else (n_x, n_theta)."""
    scalar = np.ndim(theta) == 0
    y = ylm0(coeffs.l_max, theta)
    out = coeffs.profiles.T @ y
    return out[:, 0] if scalar else out


def angular_smoothing_weight(lam: float, s: float) -> float:
    """Eigenvalue (1 + lam^2)^(s/2) of (1 - Laplacian_sphere)^(s/2)."""
    if not lam >= 0:
        raise ValueError("lambda must be >= 0")
    return (1.0 + lam * lam) ** (s / 2.0)


def assemble_total_energy(per_mode: Iterable[tuple[ModeSpec, float]]) -> float:
    total = 0.0
    for mode, energy in per_mode:
        if not energy >= 0:
            raise ValueError(f"negative or invalid energy {energy!r} for mode {mode}")
        total += float(energy)
    return total


def sphere_integral(values: np.ndarray) -> float:
    """Integrate axisymmetric samples at Gauss-Legendre nodes over the sphere (last axis)."""
    n = np.shape(values)[-1]
    _, w = gauss_legendre(n)
    return 2.0 * math.pi * np.asarray(values) @ w
