"""
Explicit leapfrog evolution of  -psi_tt + psi_xx - Q psi = H  on a tortoise grid.

    psi^{n+1} = 2 psi^n - psi^{n-1} + dt^2 (D2 psi^n - Q psi^n - H^n)

with first-order outgoing (Sommerfeld) conditions at both ends.  The
semilinear l = 0 problem  box_g phi = kappa |phi|^p phi  uses the same
stepper with H = f kappa |psi|^p psi / r^p, where psi = r phi.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .functionals import EnergyBreakdown, energy_breakdown
from .geometry import TortoiseGrid
from .potential import PotentialTable

log = logging.getLogger(__name__)


class NonFiniteFieldError(FloatingPointError):
    def __init__(self, step: int, t: float, label: str = ""):
        self.step = step
        self.t = t
        where = f" ({label})" if label else ""
        super().__init__(f"non-finite field at step {step}, t={t:.6g}{where}")


class BlowUpDetected(Exception):
    """The semilinear field crossed its ceiling; a result, not a crash."""

    def __init__(self, step: int, t: float, max_abs: float):
        self.step = step
        self.t = t
        self.max_abs = max_abs
        super().__init__(f"blow-up at t={t:.6g} (|psi| = {max_abs:.3g})")


@dataclass
class WaveState:
    """Two consecutive time levels; ``psi_curr`` lives at time ``t``."""

    t: float
    psi_prev: np.ndarray
    psi_curr: np.ndarray
    dt: float
    step: int = 0

    def check_finite(self, label: str = ""):
        if not (np.all(np.isfinite(self.psi_curr)) and np.all(np.isfinite(self.psi_prev))):
            raise NonFiniteFieldError(self.step, self.t, label)


@dataclass(frozen=True)
class Snapshot:
    t: float
    psi: np.ndarray = field(repr=False)
    dpsi_dt: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class SourceSpec:
    """
    Source H(t, x) of the 1+1 equation.

    kind is "none", "gaussian-pulse" (amplitude, t0, x0, sigma_t, sigma_x),
    or "custom" with ``func(t, x)`` or a table ``times``/``values`` that is
    interpolated linearly in t.
    """

    kind: str = "none"
    amplitude: float = 0.0
    t0: float = 0.0
    x0: float = 0.0
    sigma_t: float = 1.0
    sigma_x: float = 1.0
    func: Callable | None = None
    times: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("none", "gaussian-pulse", "custom"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "gaussian-pulse" and not (self.sigma_t > 0 and self.sigma_x > 0):
            raise ValueError("gaussian-pulse widths must be positive")
        if self.kind == "custom" and self.func is None and (self.times is None or self.values is None):
            raise ValueError("custom source needs func or times/values")

    @property
    def active(self) -> bool:
        return self.kind != "none"

    def evaluate(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.kind == "none":
            return np.zeros_like(x)
        if self.kind == "gaussian-pulse":
            return self.amplitude * np.exp(-(((t - self.t0) / self.sigma_t) ** 2) - ((x - self.x0) / self.sigma_x) ** 2)
        if self.func is not None:
            return np.asarray(self.func(t, x), dtype=float) * np.ones_like(x)
        times = np.asarray(self.times, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if t <= times[0]:
            return vals[0].copy()
        if t >= times[-1]:
            return vals[-1].copy()
        k = int(np.searchsorted(times, t)) - 1
        a = (t - times[k]) / (times[k + 1] - times[k])
        return (1 - a) * vals[k] + a * vals[k + 1]


NO_SOURCE = SourceSpec()


@dataclass(frozen=True)
class SemilinearSpec:
    p: float = 3.0
    kappa: float = 1.0

    def __post_init__(self):
        if not self.p > 2:
            raise ValueError(f"power p must exceed 2, got {self.p!r}")
        if not math.isfinite(self.kappa):
            raise ValueError("kappa must be finite")


def nonlinear_source(psi: np.ndarray, grid: TortoiseGrid, spec: SemilinearSpec) -> np.ndarray:
    """f kappa |psi|^p psi / r^p, the reduced form of kappa |phi|^p phi."""
    return grid.f_of_x * spec.kappa * np.abs(psi) ** spec.p * psi / grid.r_of_x**spec.p


def second_difference(psi: np.ndarray, dx: float) -> np.ndarray:
    d2 = np.zeros_like(psi)
    d2[1:-1] = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / (dx * dx)
    return d2


def initialize_state(psi0: np.ndarray, dpsi0: np.ndarray, grid: TortoiseGrid, table: PotentialTable,
                     dt: float, source: SourceSpec = NO_SOURCE, h0: np.ndarray | None = None) -> WaveState:
    """
    Second-order Taylor start: psi(-dt) = psi - dt psi_t + dt^2/2 (D2 psi - Q psi - H).

    ``h0`` overrides the source at t = 0 (used for the nonlinear term).
    """
    psi0 = np.array(psi0, dtype=float)
    dpsi0 = np.asarray(dpsi0, dtype=float)
    if psi0.shape != (grid.n,) or dpsi0.shape != (grid.n,):
        raise ValueError("initial profiles must match the grid")
    if not (np.all(np.isfinite(psi0)) and np.all(np.isfinite(dpsi0))):
        raise ValueError("initial profiles must be finite")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt > grid.dx * (1 + 1e-12):
        raise ValueError(f"Courant violation: dt={dt} > dx={grid.dx}")
    h = source.evaluate(0.0, grid.x) if h0 is None else h0
    accel = second_difference(psi0, grid.dx) - table.q * psi0 - h
    prev = psi0 - dt * dpsi0 + 0.5 * dt * dt * accel
    return WaveState(0.0, prev, psi0, float(dt))


def apply_boundary(state: WaveState, dx: float) -> WaveState:
    """
    Outgoing conditions psi_t = psi_x (left) and psi_t = -psi_x (right), upwind.

    ``state.psi_curr`` is the freshly computed level, ``psi_prev`` the one before.
    """
    c = state.dt / dx
    old, new = state.psi_prev, state.psi_curr
    new[0] = old[0] + c * (old[1] - old[0])
    new[-1] = old[-1] - c * (old[-1] - old[-2])
    return state


def _leapfrog(state: WaveState, q: np.ndarray, h: np.ndarray | None, dx: float) -> WaveState:
    dt = state.dt
    lam2 = (dt / dx) ** 2
    cur, prev = state.psi_curr, state.psi_prev
    nxt = np.empty_like(cur)
    # overflow is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        # written so that lam2 == 1 reduces to psi_{i+1} + psi_{i-1} - psi_prev exactly
        interior = lam2 * (cur[2:] + cur[:-2]) - prev[1:-1] - dt * dt * q[1:-1] * cur[1:-1]
        if lam2 != 1.0:
            interior = interior + 2.0 * (1.0 - lam2) * cur[1:-1]
        if h is not None:
            interior = interior - dt * dt * h[1:-1]
        nxt[1:-1] = interior
        new = WaveState(state.t + dt, cur, nxt, dt, state.step + 1)
        apply_boundary(new, dx)
    if not np.all(np.isfinite(nxt)):
        raise NonFiniteFieldError(new.step, new.t)
    return new


def step_linear(state: WaveState, table: PotentialTable, source: SourceSpec, grid: TortoiseGrid) -> WaveState:
    h = source.evaluate(state.t, grid.x) if source.active else None
    return _leapfrog(state, table.q, h, grid.dx)


def step_semilinear(state: WaveState, table0: PotentialTable, spec: SemilinearSpec, grid: TortoiseGrid,
                    ceiling: float = math.inf) -> WaveState:
    if table0.lam != 0.0:
        raise ValueError("the semilinear stepper is spherically symmetric (l = 0) only")
    h = nonlinear_source(state.psi_curr, grid, spec)
    new = _leapfrog(state, table0.q, h, grid.dx)
    peak = float(np.max(np.abs(new.psi_curr)))
    if peak > ceiling:
        raise BlowUpDetected(new.step, new.t, peak)
    return new


@dataclass
class Trajectory:
    dt: float
    steps: int
    snapshots: list[Snapshot]
    energies: list[EnergyBreakdown]
    probes: dict[float, np.ndarray]
    probe_times: np.ndarray
    status: str = "global"
    blowup_time: float | None = None
    discrete_energies: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        t = np.array([e.t for e in self.energies])
        v = np.array([getattr(e, name) for e in self.energies])
        return t, v


def gaussian_profile(grid: TortoiseGrid, center: float, width: float, amplitude: float = 1.0,
                     direction: str = "static") -> tuple[np.ndarray, np.ndarray]:
    """
    psi = A exp(-((x - c)/w)^2) with zero velocity, or a pure in/outgoing pulse.
    """
    if not width > 0:
        raise ValueError("width must be positive")
    z = (grid.x - center) / width
    psi = amplitude * np.exp(-z * z)
    dpsi_dx = -2.0 * z / width * psi
    if direction == "static":
        return psi, np.zeros_like(psi)
    if direction == "outgoing":
        return psi, -dpsi_dx
    if direction == "ingoing":
        return psi, dpsi_dx.copy()
    raise ValueError(f"unknown direction {direction!r}")


def evolve(psi0: np.ndarray, dpsi0: np.ndarray, grid: TortoiseGrid, table: PotentialTable, *,
           t_final: float, courant: float = 0.9, source: SourceSpec = NO_SOURCE,
           semilinear: SemilinearSpec | None = None, energy_every: int | None = 1,
           snapshot_every: int | None = None, probes: Sequence[float] = (),
           window_radius: float = 20.0, blowup_factor: float = 1e6,
           on_record: Callable[[Snapshot], None] | None = None, label: str = "") -> Trajectory:
    """
    Run the leapfrog scheme to ``t_final`` with dt = courant * dx.

    Energies and probe values are recorded every ``energy_every`` steps
    (plus the last step), snapshots every ``snapshot_every`` steps.  Time
    derivatives at a recorded level n are centered, (psi^{n+1} - psi^{n-1}) / 2dt,
    except at t = 0 where the initial velocity is used.  A semilinear run that
    crosses ``blowup_factor`` times its initial maximum stops with status
    "blowup".  ``discrete_energies`` holds the leapfrog-conserved quadratic form
    between each recorded level and the next.
    """
    if not t_final >= 0:
        raise ValueError("t_final must be >= 0")
    if not (0 < courant <= 1):
        raise ValueError("courant must be in (0, 1]")
    dt = courant * grid.dx
    nsteps = int(round(t_final / dt))
    psi0 = np.asarray(psi0, dtype=float)
    dpsi0 = np.asarray(dpsi0, dtype=float)

    if semilinear is not None:
        if source.active:
            raise ValueError("semilinear runs take no external source")
        peak0 = float(np.max(np.abs(psi0)))
        ceiling = blowup_factor * peak0 if peak0 > 0 else math.inf
        h0 = nonlinear_source(psi0, grid, semilinear)

        def advance(s):
            return step_semilinear(s, table, semilinear, grid, ceiling)
    else:
        h0 = None

        def advance(s):
            return step_linear(s, table, source, grid)

    probe_idx = [grid.index_of(p) for p in probes]
    snapshots: list[Snapshot] = []
    energies: list[EnergyBreakdown] = []
    probe_vals: list[list[float]] = [[] for _ in probe_idx]
    probe_times: list[float] = []
    discrete: list[float] = []

    def record(snap: Snapshot, step: int, psi_next: np.ndarray | None):
        last = step == nsteps
        if energy_every and (step % energy_every == 0 or last):
            energies.append(energy_breakdown(snap, table, grid, window_radius=window_radius))
            probe_times.append(snap.t)
            for vals, i in zip(probe_vals, probe_idx):
                vals.append(float(snap.psi[i]))
            if psi_next is not None:
                discrete.append(discrete_energy(snap.psi, psi_next, table.q, dt, grid.dx))
            if on_record is not None:
                on_record(snap)
        if snapshot_every and (step % snapshot_every == 0 or last):
            snapshots.append(snap)

    state = initialize_state(psi0, dpsi0, grid, table, dt, source, h0=h0)
    status, t_blow = "global", None
    try:
        if nsteps == 0:
            record(Snapshot(0.0, psi0.copy(), dpsi0.copy()), 0, None)
        else:
            nxt = advance(state)
            record(Snapshot(0.0, psi0.copy(), dpsi0.copy()), 0, nxt.psi_curr)
            for step in range(1, nsteps + 1):
                following = advance(nxt)
                t = step * dt
                snap = Snapshot(t, nxt.psi_curr, (following.psi_curr - nxt.psi_prev) / (2.0 * dt))
                record(snap, step, following.psi_curr)
                nxt = following
    except BlowUpDetected as exc:
        status, t_blow = "blowup", exc.t
        log.info("%s: %s", label or "run", exc)
    except NonFiniteFieldError as exc:
        raise NonFiniteFieldError(exc.step, exc.t, label) from None

    return Trajectory(
        dt=dt,
        steps=nsteps,
        snapshots=snapshots,
        energies=energies,
        probes={p: np.array(v) for p, v in zip(probes, probe_vals)},
        probe_times=np.array(probe_times),
        status=status,
        blowup_time=t_blow,
        discrete_energies=np.array(discrete),
    )


def discrete_energy(psi_old: np.ndarray, psi_new: np.ndarray, q: np.ndarray, dt: float, dx: float) -> float:
    """
    Quadratic form conserved exactly by the interior leapfrog update,

        sum ((psi^{n+1} - psi^n)/dt)^2 + D+psi^{n+1} D+psi^n + Q psi^{n+1} psi^n,

    times dx.  Equals the energy  int psi_t^2 + psi_x^2 + Q psi^2  to O(dt^2, dx^2).
    """
    kin = ((psi_new - psi_old) / dt) ** 2
    grad = np.diff(psi_new) * np.diff(psi_old) / (dx * dx)
    pot = q * psi_new * psi_old
    return float((kin.sum() + grad.sum() + pot.sum()) * dx)
