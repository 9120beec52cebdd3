"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np

from rwdecay.evolve import Snapshot
from rwdecay.functionals import basic_energy
from rwdecay.harmonics import ModeCoefficients, project_axisymmetric, ylm0
from rwdecay.potential import ModeSpec, potential_table


def y20(theta):
    return math.sqrt(5 / (4 * math.pi)) * 0.5 * (3 * np.cos(theta) ** 2 - 1)


def y20_dtheta(theta):
    return -math.sqrt(5 / (4 * math.pi)) * 3 * np.cos(theta) * np.sin(theta)


def two_mode_energies(grid, n_theta=16):
    """
    Mode-summed basic energy and the direct (x, theta) quadrature of the
    3-D energy density for psi = (Y00 + Y20) g(x), psi_t = (Y00 - 0.5 Y20) h(x).

    The direct side uses numpy's Gauss-Legendre rule and the closed-form
    angular derivative of Y20; the angular term is f |d_theta psi|^2 / r^2.
    """
    x = grid.x
    g = np.exp(-(((x - 8.0) / 3.0) ** 2))
    h = (x - 8.0) / 3.0 * np.exp(-(((x - 6.0) / 2.0) ** 2))
    mu, w = np.polynomial.legendre.leggauss(n_theta)
    th = np.arccos(mu)
    y00 = np.full_like(th, 1 / math.sqrt(4 * math.pi))
    psi = np.outer(g, y00 + y20(th))
    dpsi = np.outer(h, y00 - 0.5 * y20(th))
    dpsi_dth = np.outer(g, y20_dtheta(th))

    coeffs = project_axisymmetric(psi, 2)
    vcoeffs = project_axisymmetric(dpsi, 2)
    per_mode = []
    for l in range(3):
        table = potential_table(ModeSpec(l).lam, grid)
        per_mode.append((ModeSpec(l), basic_energy(Snapshot(0.0, coeffs.mode(l), vcoeffs.mode(l)), table, grid)))

    m = grid.params.mass
    f, r = grid.f_of_x[:, None], grid.r_of_x[:, None]
    px = np.gradient(psi, grid.dx, axis=0)
    dens = ((dpsi + px) ** 2 + (dpsi - px) ** 2 + f * 2 * m / r**3 * psi**2 + f / r**2 * dpsi_dth**2)
    radial = np.trapezoid(dens, dx=grid.dx, axis=0)
    direct = 2 * math.pi * float(radial @ w)
    return per_mode, direct


def reconstruct_check(coeffs: ModeCoefficients, n_theta):
    mu, _ = np.polynomial.legendre.leggauss(n_theta)
    return coeffs.profiles.T @ ylm0(coeffs.l_max, np.arccos(mu))
