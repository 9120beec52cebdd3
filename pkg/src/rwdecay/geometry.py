"""
Schwarzschild exterior in Regge-Wheeler (tortoise) coordinates.

The tortoise map is r* = r + 2M ln(r - 2M).  Its inverse is computed in the
variable s = ln(r - 2M), where the residual

    h(s) = 2M + exp(s) + 2M s - r*

is smooth, strictly increasing and convex, so a Newton iteration started from
any point converges (after at most one overshoot it approaches the root
monotonically from the right).  A bisection fallback is kept for safety.

Working in s also gives r - 2M directly, which is what the metric factor
f = 1 - 2M/r needs close to the horizon: there r itself rounds to 2M long
before r - 2M underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_MAX_NEWTON = 100


@dataclass(frozen=True)
class SchwarzschildParams:
    """Mass of the black hole in geometric units (G = c = 1)."""

    mass: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ValueError(f"mass must be positive and finite, got {self.mass!r}")

    @property
    def horizon(self) -> float:
        return 2.0 * self.mass


def _as_array(x):
    scalar = np.ndim(x) == 0
    return np.atleast_1d(np.asarray(x, dtype=float)), scalar


def _unwrap(arr, scalar):
    return float(arr[0]) if scalar else arr


def tortoise_from_radius(r, params: SchwarzschildParams):
    """
    Tortoise coordinate r* = r + 2M ln(r - 2M).

    Parameters
    ----------
    r : float or ndarray
        Areal radius, strictly greater than 2M.
    params : SchwarzschildParams

    Returns
    -------
    float or ndarray
    """
    arr, scalar = _as_array(r)
    m = params.mass
    if np.any(~np.isfinite(arr)) or np.any(arr <= 2.0 * m):
        raise ValueError("tortoise_from_radius requires finite r > 2M")
    return _unwrap(arr + 2.0 * m * np.log(arr - 2.0 * m), scalar)


def _initial_log_gap(x, m):
    # s0 = ln(r0 - 2M) with the two initial guesses r0 described in the module docs
    s0 = np.empty_like(x)
    near = x <= 4.0 * m
    s0[near] = (x[near] - 2.0 * m) / (2.0 * m)
    far = ~near
    xf = x[far]
    delta = xf - 2.0 * m * np.log(np.maximum(xf, 1.0))
    # x - 2M ln x stays positive for x > 4M only when M is not tiny relative to x
    delta = np.where(delta > 0, delta, xf)
    s0[far] = np.log(delta)
    return s0


def _solve_log_gap(x, m):
    """Solve 2M + e^s + 2M s = x for s, elementwise."""
    s = _initial_log_gap(x, m)
    for _ in range(_MAX_NEWTON):
        es = np.exp(s)
        h = 2.0 * m + es + 2.0 * m * s - x
        step = h / (es + 2.0 * m)
        s = s - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(s))):
            return s
    # Newton stalled; bisection on the bracket [lo, hi] is guaranteed to work
    es = np.exp(s)
    h = 2.0 * m + es + 2.0 * m * s - x
    bad = np.abs(h) > 1e-13 * np.maximum(1.0, np.abs(x))
    if np.any(bad):
        s[bad] = _bisect_log_gap(x[bad], m)
    return s


def _bisect_log_gap(x, m):
    # h(s) >= 2M s + 2M - x  and  h(s) <= e^s + 2M(s + 1) - x
    lo = np.minimum((x - 2.0 * m) / (2.0 * m), np.log(np.maximum(np.abs(x), 1.0))) - 10.0
    hi = np.maximum(np.log(np.abs(x) + 2.0 * m), (x - 2.0 * m) / (2.0 * m)) + 10.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        h = 2.0 * m + np.exp(mid) + 2.0 * m * mid - x
        lo = np.where(h < 0, mid, lo)
        hi = np.where(h < 0, hi, mid)
    s = 0.5 * (lo + hi)
    h = 2.0 * m + np.exp(s) + 2.0 * m * s - x
    if np.any(np.abs(h) > 1e-12 * np.maximum(1.0, np.abs(x))):
        raise RuntimeError("tortoise inversion failed to converge")
    return s


def horizon_gap_from_tortoise(x, params: SchwarzschildParams):
    """
    Return r - 2M for the point with tortoise coordinate x.

    Stays accurate (relatively) where r - 2M is far below the resolution of r.
    """
    arr, scalar = _as_array(x)
    if np.any(~np.isfinite(arr)):
        raise ValueError("tortoise coordinate must be finite")
    return _unwrap(np.exp(_solve_log_gap(arr, params.mass)), scalar)


def radius_from_tortoise(x, params: SchwarzschildParams):
    """
    Areal radius r > 2M with tortoise_from_radius(r) == x.

    Near the horizon the returned value may round to exactly 2M in floating
    point; use :func:`horizon_gap_from_tortoise` when r - 2M matters.
    """
    arr, scalar = _as_array(x)
    gap = horizon_gap_from_tortoise(arr, params)
    return _unwrap(2.0 * params.mass + gap, scalar)


def metric_factor(x, params: SchwarzschildParams):
    """f = 1 - 2M/r as a function of the tortoise coordinate."""
    arr, scalar = _as_array(x)
    gap = horizon_gap_from_tortoise(arr, params)
    return _unwrap(gap / (2.0 * params.mass + gap), scalar)


@dataclass(frozen=True)
class TortoiseGrid:
    """
    Uniform grid in r* with the radius and metric factor precomputed.

    ``gap_of_x`` holds r - 2M; it is strictly increasing even where
    ``r_of_x`` has rounded to 2M near the left edge.
    """

    x_min: float
    x_max: float
    n: int
    params: SchwarzschildParams
    x: np.ndarray = field(repr=False)
    r_of_x: np.ndarray = field(repr=False)
    f_of_x: np.ndarray = field(repr=False)
    gap_of_x: np.ndarray = field(repr=False)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    def index_of(self, x0: float) -> int:
        """Index of the node nearest to ``x0``."""
        if not (self.x_min <= x0 <= self.x_max):
            raise ValueError(f"x={x0} outside grid [{self.x_min}, {self.x_max}]")
        return int(round((x0 - self.x_min) / self.dx))

    def window(self, center: float, radius: float) -> np.ndarray:
        """Boolean mask of nodes with |x - center| <= radius."""
        return np.abs(self.x - center) <= radius * (1 + 1e-12)


def build_grid(x_min: float, x_max: float, n: int, params: SchwarzschildParams) -> TortoiseGrid:
    if not (math.isfinite(x_min) and math.isfinite(x_max) and x_min < x_max):
        raise ValueError(f"need finite x_min < x_max, got [{x_min}, {x_max}]")
    if int(n) != n or n < 3:
        raise ValueError(f"need an integer n >= 3, got {n!r}")
    n = int(n)
    x = np.linspace(x_min, x_max, n)
    gap = horizon_gap_from_tortoise(x, params)
    r = 2.0 * params.mass + gap
    f = gap / r
    for a in (x, r, f, gap):
        a.setflags(write=False)
    return TortoiseGrid(float(x_min), float(x_max), n, params, x, r, f, gap)


def photon_sphere_tortoise(params: SchwarzschildParams) -> float:
    """r* of the photon sphere r = 3M."""
    return tortoise_from_radius(3.0 * params.mass, params)
