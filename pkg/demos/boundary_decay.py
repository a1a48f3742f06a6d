"""Exponential interior decay of the magnetic ground state.

At q = 60 on the unit disk the ground state lives on the boundary: we fit the
interior decay slope of |u| against the distance to the boundary and compare
it with the certified rate sqrt((1 - theta0) q), then check the weighted
boundary-layer energy bound with the calibrated constant.
"""

import numpy as np

from magspec import agmon
from magspec.degennes import THETA0
from magspec.domains import Disk2D, build_grid
from magspec.fields import linear_potential
from magspec.magop import assemble, lowest_eigenpair


def main():
    dom = Disk2D(radius=1.0)
    a = linear_potential((0.0, 0.0, 1.0))
    q = 60.0
    grid = build_grid(dom, 0.35 / np.sqrt(q))
    res = lowest_eigenpair(assemble(dom, a, q, grid=grid))
    mu0 = lowest_eigenpair(assemble(dom, a, q, bc="dirichlet", grid=grid)).value

    rate = np.sqrt((1.0 - THETA0) * q)
    rep = agmon.fit_decay(res.vector, grid, theoretical_rate=rate)
    shell = 5.0 / np.sqrt(q)
    mass = agmon.boundary_mass_fraction(res.vector, grid, shell)
    print(f"q = {q:.0f}: lambda = {res.value:.4f}, Dirichlet mu0 = {mu0:.4f}")
    print(f"fitted decay slope      : {rep.fitted_slope:8.2f}")
    print(f"certified minimum rate  : {rate:8.2f}")
    print(f"mass within {shell:.3f} of boundary: {mass:.4f}")

    eps = 1.0
    alpha = 0.5 * agmon.admissible_alpha(res.value, mu0, eps)
    gamma = 4.0 / np.sqrt(q)
    w = agmon.make_weight(grid, gamma, alpha)
    lhs = agmon.weighted_h1_norm(res.vector, w, grid)
    rhs = agmon.agmon_rhs(res.value, mu0, eps, gamma, alpha)
    print(f"weighted H1 norm {lhs:.4f} <= bound {rhs:.4f}: {lhs <= rhs}")


if __name__ == "__main__":
    main()
