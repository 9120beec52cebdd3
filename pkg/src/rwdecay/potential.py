"""
Regge-Wheeler potentials for scalar waves and the strongly-repulsive checks.

For a degree-l harmonic with angular frequency lam = sqrt(l(l+1)) the radial
field psi = r*phi obeys a flat 1+1 wave equation with potential

    Q(r) = (1 - 2M/r) (2M/r^3 + lam^2/r^2).

Derivatives are taken with respect to the tortoise coordinate x = r*.  The
six conditions are evaluated in the shifted coordinate y = x - x0(lam), where
x0 is the location of the maximum of Q.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .geometry import SchwarzschildParams, TortoiseGrid, horizon_gap_from_tortoise, tortoise_from_radius

CONDITION_NAMES = (
    "(Positivity)",
    "(Repulsive 1)",
    "(Repulsive 2)",
    "(Homogeneity)",
    "(Critical Point)",
    "(Local Bounds)",
)


@dataclass(frozen=True)
class ModeSpec:
    l: int
    m: int = 0

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise ValueError(f"l must be a non-negative integer, got {self.l!r}")
        if int(self.m) != self.m or abs(self.m) > self.l:
            raise ValueError(f"need |m| <= l, got l={self.l}, m={self.m}")

    @property
    def lam(self) -> float:
        return math.sqrt(self.l * (self.l + 1))


def _check_radius(r, params):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 2.0 * params.mass):
        raise ValueError("potential requires r > 2M")
    return r


def _check_lambda(lam):
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam!r}")


def _ret(v):
    return float(v) if np.ndim(v) == 0 else v


def potential_value(lam: float, r, params: SchwarzschildParams, f=None):
    """
    Q_lambda(r).  ``f`` may be given to avoid forming 1 - 2M/r near the horizon.
    """
    _check_lambda(lam)
    r = _check_radius(r, params)
    m = params.mass
    if f is None:
        f = 1.0 - 2.0 * m / r
    return _ret(_q(lam, r, f, m))


def _bracket(lam, r, m):
    # zero exactly at the critical radius
    return lam**2 * r**2 - 3.0 * m * (lam**2 - 1.0) * r - 8.0 * m**2


def _q(lam, r, f, m):
    return f * (2.0 * m / r**3 + lam**2 / r**2)


def _dq(lam, r, f, m):
    return -2.0 / r**5 * f * _bracket(lam, r, m)


def potential_derivative(lam: float, r, params: SchwarzschildParams, f=None):
    """dQ/dr* = -(2/r^5) f [lam^2 r^2 - 3M(lam^2 - 1) r - 8M^2]."""
    _check_lambda(lam)
    r = _check_radius(r, params)
    m = params.mass
    if f is None:
        f = 1.0 - 2.0 * m / r
    return _ret(_dq(lam, r, f, m))


def critical_radius(lam: float, params: SchwarzschildParams) -> float:
    """Areal radius of the maximum of Q_lambda; lies in [8M/3, 3M)."""
    _check_lambda(lam)
    m = params.mass
    if lam == 0:
        return 8.0 * m / 3.0
    l2 = lam * lam
    a = l2 - 1.0
    disc = math.sqrt(9.0 * a * a + 32.0 * l2)
    if a >= 0:
        return m * (3.0 * a + disc) / (2.0 * l2)
    # 3a + disc cancels for small lam; use the conjugate form 16/(disc - 3a)
    return 16.0 * m / (disc - 3.0 * a)


def critical_tortoise(lam: float, params: SchwarzschildParams) -> float:
    """x0(lambda) = r*(r(lambda)); increases to r*(3M) as lambda grows."""
    return tortoise_from_radius(critical_radius(lam, params), params)


def second_derivative_at_critical(lam: float, params: SchwarzschildParams) -> float:
    """d^2Q/dr*^2 at x0(lambda); strictly negative and O(lambda^2)."""
    m = params.mass
    r = critical_radius(lam, params)
    f = 1.0 - 2.0 * m / r
    return -2.0 / r**5 * f * f * (2.0 * lam**2 * r - 3.0 * m * (lam**2 - 1.0))


@dataclass(frozen=True)
class PotentialTable:
    """Q and dQ/dx sampled on a grid, with the critical-point data of the mode."""

    lam: float
    q: np.ndarray = field(repr=False)
    dq: np.ndarray = field(repr=False)
    x0: float
    r_crit: float = math.nan
    grid_size: int = 0
    label: str = ""

    def shifted(self, x: np.ndarray) -> np.ndarray:
        return x - self.x0


def potential_table(lam: float, grid: TortoiseGrid) -> PotentialTable:
    _check_lambda(lam)
    params = grid.params
    q = _q(lam, grid.r_of_x, grid.f_of_x, params.mass)
    dq = _dq(lam, grid.r_of_x, grid.f_of_x, params.mass)
    q.setflags(write=False)
    dq.setflags(write=False)
    return PotentialTable(
        lam=float(lam),
        q=q,
        dq=dq,
        x0=critical_tortoise(lam, params),
        r_crit=critical_radius(lam, params),
        grid_size=grid.n,
        label=f"lambda={lam:.15g}",
    )


def synthetic_table(grid: TortoiseGrid, q_of_y: Callable, dq_of_y: Callable, x0: float | None = None,
                    lam: float = 0.0, label: str = "synthetic") -> PotentialTable:
    """Table for an arbitrary potential given as a function of the shifted coordinate."""
    if x0 is None:
        x0 = 0.5 * (grid.x_min + grid.x_max)
    y = grid.x - x0
    q = np.broadcast_to(np.asarray(q_of_y(y), dtype=float), y.shape).copy()
    dq = np.broadcast_to(np.asarray(dq_of_y(y), dtype=float), y.shape).copy()
    return PotentialTable(lam=lam, q=q, dq=dq, x0=float(x0), grid_size=grid.n, label=label)


def zero_table(grid: TortoiseGrid) -> PotentialTable:
    return synthetic_table(grid, lambda y: 0.0, lambda y: 0.0, label="free")


def trapping_term(lam: float, y, params: SchwarzschildParams, grid: TortoiseGrid | None = None):
    """
    y dQ/dy + 2Q at shifted coordinate y = x - x0(lambda).

    If ``grid`` is given the point must lie inside its coordinate range.
    """
    x0 = critical_tortoise(lam, params)
    y_arr = np.asarray(y, dtype=float)
    x = y_arr + x0
    if grid is not None and (np.any(x < grid.x_min) or np.any(x > grid.x_max)):
        raise ValueError("shifted coordinate outside the grid")
    gap = horizon_gap_from_tortoise(x, params)
    r = 2.0 * params.mass + gap
    f = gap / r
    q = _q(lam, r, f, params.mass)
    dq = _dq(lam, r, f, params.mass)
    return _ret(y_arr * dq + 2.0 * q)


@dataclass
class ConditionResult:
    name: str
    passed: bool
    worst_margin: float
    worst_location: float

    def to_dict(self):
        return {
            "name": self.name,
            "pass": bool(self.passed),
            "worst_margin": _json_float(self.worst_margin),
            "worst_location": _json_float(self.worst_location),
        }


@dataclass
class ModeConditions:
    lam: float
    label: str
    conditions: list[ConditionResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)


@dataclass
class ConditionReport:
    C: float
    b1: float
    b2: float
    modes: list[ModeConditions]

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.modes)

    def flags(self) -> dict[str, bool]:
        """Per-condition pass flags, reduced over the whole family."""
        return {name: all(m.conditions[k].passed for m in self.modes) for k, name in enumerate(CONDITION_NAMES)}

    def failing(self) -> list[str]:
        return [name for name, ok in self.flags().items() if not ok]

    def to_dict(self):
        constants = {"C": self.C, "b1": self.b1, "b2": self.b2}
        return {
            "pass": self.passed,
            "constants": constants,
            "failing": self.failing(),
            "modes": [
                {
                    "lambda": m.lam,
                    "conditions": [c.to_dict() for c in m.conditions],
                    "constants": constants,
                }
                for m in self.modes
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _json_float(v):
    if v is None or not math.isfinite(v):
        return None
    return float(v)


def _condition_margins(table: PotentialTable, y: np.ndarray, C: float, b1: float, b2: float):
    """Yield (mask, margin) per condition; margin >= 0 means satisfied."""
    q, dq, lam = table.q, table.dq, table.lam
    trap = y * dq + 2.0 * q
    inner = np.abs(y) <= 2.0 * b1
    outside1 = np.abs(y) > b1
    outside2 = np.abs(y) > b2
    everywhere = np.ones_like(y, dtype=bool)
    ay = np.where(y == 0, np.inf, np.abs(y))
    yield everywhere, q
    yield everywhere, -y * dq
    yield outside1, -C * np.sign(y) * dq - trap
    yield outside2, C * q / ay - trap
    yield inner, -C * y * dq - (1.0 + lam**2) * y**2
    yield inner, np.minimum(q - 1.0 / C, C * (1.0 + lam**2) - q)


def _check_grid(family, grid):
    for t in family:
        if t.grid_size != grid.n or len(t.q) != grid.n:
            raise ValueError(f"table {t.label!r} does not match the grid")


def verify_conditions(family: Sequence[PotentialTable], C: float, b1: float, b2: float,
                      grid: TortoiseGrid) -> ConditionReport:
    """
    Check the six strongly-repulsive conditions at every grid node for every
    table, with intervals B1 = [-b1, b1], B2 = [-b2, b2] in the shifted coordinate.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    if not (0 < b1 < b2):
        raise ValueError("need 0 < b1 < b2")
    _check_grid(family, grid)
    modes = []
    for table in family:
        y = grid.x - table.x0
        results = []
        for name, (mask, margin) in zip(CONDITION_NAMES, _condition_margins(table, y, C, b1, b2)):
            if not np.any(mask):
                results.append(ConditionResult(name, True, math.inf, math.nan))
                continue
            m = np.where(mask, margin, np.inf)
            k = int(np.argmin(m))
            worst = float(m[k])
            results.append(ConditionResult(name, worst >= 0.0, worst, float(y[k])))
        modes.append(ModeConditions(table.lam, table.label, results))
    return ConditionReport(float(C), float(b1), float(b2), modes)


def _required_constant(table: PotentialTable, y: np.ndarray, b1: float, b2: float) -> float:
    """
    Smallest C for which the C-dependent conditions hold; +inf when no C works
    (including a failure of the C-independent conditions).
    """
    q, dq, lam = table.q, table.dq, table.lam
    if np.any(q < 0) or np.any(-y * dq < 0):
        return math.inf
    trap = y * dq + 2.0 * q
    need = [0.0]
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.abs(y) > b1
        # trap <= C * (-sgn(y) dq), the bracket is >= 0 given (Repulsive 1)
        s = -np.sign(y[m]) * dq[m]
        t = trap[m]
        pos = t > 0
        if np.any(pos & (s <= 0)):
            return math.inf
        if np.any(pos):
            need.append(np.max(t[pos] / s[pos]))
        m = np.abs(y) > b2
        s = q[m] / np.abs(y[m])
        t = trap[m]
        pos = t > 0
        if np.any(pos & (s <= 0)):
            return math.inf
        if np.any(pos):
            need.append(np.max(t[pos] / s[pos]))
        m = (np.abs(y) <= 2.0 * b1) & (y != 0)
        s = -y[m] * dq[m]
        t = (1.0 + lam**2) * y[m] ** 2
        if np.any(s <= 0):
            return math.inf
        if np.any(m):
            need.append(np.max(t / s))
        m = np.abs(y) <= 2.0 * b1
        if np.any(m):
            if np.any(q[m] <= 0):
                return math.inf
            need.append(1.0 / np.min(q[m]))
            need.append(np.max(q[m]) / (1.0 + lam**2))
    return float(max(need))


def default_constant_candidates() -> list[float]:
    """Factor-2 ladder over [1e-2, 1e6]."""
    out, c = [], 1e-2
    while c <= 1e6 * (1 + 1e-12):
        out.append(c)
        c *= 2.0
    return out


def default_interval_candidates() -> list[tuple[float, float]]:
    # b1 ascending, b2 descending: the first hit has the widest B2, so that the
    # trapping term is negative everywhere outside it (positive up to y ~ 30M
    # for large lambda).  C is governed by b1 alone for this family.
    b1s = (0.5, 1.0, 2.0, 4.0)
    b2s = (32.0, 16.0, 8.0, 4.0, 2.0, 1.0)
    return [(b1, b2) for b1 in b1s for b2 in b2s if b1 < b2]


@dataclass
class ConstantSearch:
    feasible: bool
    C: float = math.nan
    b1: float = math.nan
    b2: float = math.nan
    report: ConditionReport | None = None


def search_constants(family: Sequence[PotentialTable], grid: TortoiseGrid,
                     C_candidates: Iterable[float] | None = None,
                     intervals: Iterable[tuple[float, float]] | None = None) -> ConstantSearch:
    """
    Smallest candidate C, then the first (b1, b2), that make every table pass.

    The conditions are monotone in C, so each (b1, b2) is reduced to the
    minimal C it needs; the ladder is then scanned in increasing order.
    """
    if not family:
        raise ValueError("empty potential family")
    _check_grid(family, grid)
    C_candidates = sorted(C_candidates if C_candidates is not None else default_constant_candidates())
    intervals = list(intervals if intervals is not None else default_interval_candidates())
    span = grid.x_max - grid.x_min
    usable = [(b1, b2) for b1, b2 in intervals if 0 < b1 < b2 < span / 4]
    needed = []
    for b1, b2 in usable:
        c = 0.0
        for table in family:
            c = max(c, _required_constant(table, grid.x - table.x0, b1, b2))
            if math.isinf(c):
                break
        needed.append(c)
    for C in C_candidates:
        for (b1, b2), c in zip(usable, needed):
            if c <= C:
                report = verify_conditions(family, C, b1, b2, grid)
                if report.passed:
                    return ConstantSearch(True, C, b1, b2, report)
    # nothing worked: report against the last candidate for diagnostics
    if usable and C_candidates:
        b1, b2 = usable[0]
        report = verify_conditions(family, C_candidates[-1], b1, b2, grid)
    else:
        report = None
    return ConstantSearch(False, report=report)


def regge_wheeler_family(l_values: Iterable[int], grid: TortoiseGrid) -> list[PotentialTable]:
    return [potential_table(ModeSpec(l).lam, grid) for l in l_values]
