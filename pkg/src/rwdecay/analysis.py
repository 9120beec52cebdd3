"""Post-processing of recorded series: power-law fits, convergence orders, envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple

import numpy as np

SERIES_FLOOR = 1e-30


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    amplitude: float
    residual_rms: float
    window: tuple[float, float]
    n_points: int

    def to_dict(self):
        return {
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "residual": self.residual_rms,
            "window": list(self.window),
            "n_points": self.n_points,
        }


def fit_power_law(t, v, window: tuple[float, float], min_points: int = 8) -> DecayFit:
    """
    Least-squares line through (ln t, ln v) on t_lo <= t <= t_hi.

    Values at or below the round-off floor are dropped; any other
    non-positive value inside the window is an error.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    t_lo, t_hi = map(float, window)
    if not (0 < t_lo < t_hi):
        raise ValueError("need 0 < t_lo < t_hi")
    if t_hi / t_lo < 10 * (1 - 1e-12):
        raise ValueError("fit window must span at least one decade")
    sel = (t >= t_lo) & (t <= t_hi)
    t, v = t[sel], v[sel]
    if np.any(v < 0) or np.any(~np.isfinite(v)):
        raise ValueError("series must be positive and finite inside the window")
    keep = v > SERIES_FLOOR
    t, v = t[keep], v[keep]
    if t.size < min_points:
        raise ValueError(f"only {t.size} usable points in window, need {min_points}")
    lt, lv = np.log(t), np.log(v)
    A = np.vstack([lt, np.ones_like(lt)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = lv - (slope * lt + icpt)
    return DecayFit(float(slope), float(math.exp(icpt)), float(np.sqrt(np.mean(resid**2))), (t_lo, t_hi), int(t.size))


class ConvergenceOrder(NamedTuple):
    order: float
    pairwise: tuple[float, float]


def convergence_order(e_coarse: float, e_mid: float, e_fine: float) -> ConvergenceOrder:
    """Observed orders log2(e(h)/e(h/2)) and log2(e(h/2)/e(h/4)) and their mean."""
    errs = (e_coarse, e_mid, e_fine)
    if any(not (e > 0) for e in errs):
        raise ValueError("errors must be positive")
    o1 = math.log2(e_coarse / e_mid)
    o2 = math.log2(e_mid / e_fine)
    return ConvergenceOrder(0.5 * (o1 + o2), (o1, o2))


def envelope_compliance(samples: Iterable, envelope: Callable[[float], np.ndarray],
                        field: Callable = lambda s: s.psi, floor: float = 1e-14) -> float:
    """
    max over samples and nodes of |field| / envelope(t), ignoring nodes whose
    field is below ``floor``.
    """
    worst = 0.0
    for s in samples:
        vals = np.abs(np.asarray(field(s), dtype=float))
        env = np.asarray(envelope(s.t), dtype=float)
        mask = vals >= floor
        if np.any(mask):
            worst = max(worst, float(np.max(vals[mask] / env[mask])))
    return worst


class ComplianceTracker:
    """Streaming version of :func:`envelope_compliance`, usable as an ``on_record`` hook."""

    def __init__(self, envelope: Callable[[float], np.ndarray], field: Callable = lambda s: s.psi,
                 floor: float = 1e-14):
        self.envelope = envelope
        self.field = field
        self.floor = floor
        self.max_ratio = 0.0

    def __call__(self, snap):
        self.max_ratio = max(self.max_ratio, envelope_compliance([snap], self.envelope, self.field, self.floor))


def trapping_halftime(t, v, drop_factor: float) -> float:
    """
    First time the series falls below v[0] / drop_factor, linearly interpolated;
    +inf if it never does.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.size == 0:
        raise ValueError("empty series")
    if not drop_factor > 1:
        raise ValueError("drop factor must exceed 1")
    level = v[0] / drop_factor
    below = np.nonzero(v < level)[0]
    if below.size == 0:
        return math.inf
    k = int(below[0])
    if k == 0:
        return float(t[0])
    t0, t1, v0, v1 = t[k - 1], t[k], v[k - 1], v[k]
    return float(t0 + (v0 - level) * (t1 - t0) / (v0 - v1))
