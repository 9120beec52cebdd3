"""Manufactured-solution fixture for measuring the order of the leapfrog scheme."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolve import SourceSpec, evolve
from .geometry import SchwarzschildParams, build_grid
from .potential import potential_table


@dataclass(frozen=True)
class SineBump:
    """psi(t, x) = sin(k (x - t)) g(x) with g a Gaussian cutoff of width w centered at c."""

    k: float = 1.0
    center: float = 5.0
    width: float = 4.0

    def _g(self, x):
        z = (x - self.center) / self.width
        g = np.exp(-z * z)
        g1 = -2.0 * z / self.width * g
        g2 = (4.0 * z * z - 2.0) / self.width**2 * g
        return g, g1, g2

    def psi(self, t, x):
        return np.sin(self.k * (x - t)) * self._g(x)[0]

    def dpsi_dt(self, t, x):
        return -self.k * np.cos(self.k * (x - t)) * self._g(x)[0]

    def source(self, q):
        """H = -psi_tt + psi_xx - Q psi for a potential sampled as ``q`` on the grid nodes."""

        def h(t, x):
            g, g1, g2 = self._g(x)
            ph = self.k * (x - t)
            return 2.0 * self.k * np.cos(ph) * g1 + np.sin(ph) * (g2 - q * g)

        return h


def manufactured_error(n: int, lam: float = np.sqrt(6.0), x_min: float = -40.0, x_max: float = 50.0,
                       t_final: float = 20.0, courant: float = 0.5, mass: float = 1.0,
                       fixture: SineBump = SineBump()) -> float:
    """Max-norm error at the final step for the sine-bump solution with potential Q_lam."""
    grid = build_grid(x_min, x_max, n, SchwarzschildParams(mass))
    table = potential_table(lam, grid)
    src = SourceSpec("custom", func=fixture.source(table.q))
    traj = evolve(fixture.psi(0.0, grid.x), fixture.dpsi_dt(0.0, grid.x), grid, table,
                  t_final=t_final, courant=courant, source=src, energy_every=None, snapshot_every=10**9)
    final = traj.snapshots[-1]
    return float(np.max(np.abs(final.psi - fixture.psi(final.t, grid.x))))
