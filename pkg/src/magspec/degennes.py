"""Half-line model family h^{N,xi} = -d^2/dt^2 + (t+xi)^2 on (0, T).

Neumann condition at t=0 (ghost-node reflection u_{-1} = u_1), Dirichlet
truncation at t=T.  The lowest eigenvalue mu(xi) has a unique minimum
(xi0, Theta0) which anchors all the boundary asymptotics in this package.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq


class DiscretizationTooCoarseError(RuntimeError):
    """The two lowest discrete eigenvalues are too close to certify the gap."""


class BracketError(RuntimeError):
    """mu(xi) failed the unimodality check on the search bracket."""


@dataclass(frozen=True)
class HalfLineDiscretization:
    """Uniform grid on [0, T] with nodes t_i = i*h, i = 0..N-1 (Dirichlet at T)."""

    truncation: float = 20.0
    step: float = 1e-3

    def __post_init__(self):
        if self.truncation <= 0 or self.step <= 0:
            raise ValueError("truncation and step must be positive")
        if self.truncation < 10:
            warnings.warn("truncation < 10: ground-state tail may be visible")
        if self.step > 1e-2:
            warnings.warn("step > 1e-2: run is not certified")

    @property
    def n_nodes(self) -> int:
        return int(round(self.truncation / self.step))

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes) * self.step

    @property
    def quad_weights(self) -> np.ndarray:
        # trapezoid weights; the Dirichlet end point t=T is not a node
        w = np.full(self.n_nodes, self.step)
        w[0] = self.step / 2
        return w


@dataclass(frozen=True)
class DeGennesPoint:
    xi: float
    mu: float
    ground_state: np.ndarray
    disc: HalfLineDiscretization

    def tail_mass(self, t_from: float) -> float:
        return ground_state_tail(self, t_from)


@dataclass(frozen=True)
class DeGennesMinimum:
    xi0: float
    theta0: float
    u0: DeGennesPoint
    bracket: tuple
    disc: HalfLineDiscretization


def _tridiag(xi: float, disc: HalfLineDiscretization):
    """Symmetric tridiagonal (d, e) for the Neumann/Dirichlet discretization.

    The ghost-node row (2u_0 - 2u_1)/h^2 is symmetrized by the similarity
    D^{1/2} A D^{-1/2} with D = diag(1/2, 1, ..., 1); eigenvalues are
    unchanged and the eigenvector is recovered by scaling node 0.
    """
    h = disc.step
    t = disc.nodes
    d = 2.0 / h**2 + (t + xi) ** 2
    e = np.full(disc.n_nodes - 1, -1.0 / h**2)
    e[0] = -np.sqrt(2.0) / h**2
    return d, e


def _lowest_pair(xi: float, disc: HalfLineDiscretization):
    """Two lowest eigenvalues and the normalized positive ground state."""
    d, e = _tridiag(xi, disc)
    # bisection on the Sturm sequence + inverse iteration (LAPACK stebz/stein)
    vals, vecs = eigh_tridiagonal(d, e, select="i", select_range=(0, 1), tol=1e-14)
    u = vecs[:, 0].copy()
    u[0] *= np.sqrt(2.0)  # undo the similarity scaling
    w = disc.quad_weights
    u /= np.sqrt(np.sum(w * u**2))
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    return vals[0], vals[1], u


def mu_of_xi(xi: float, disc: HalfLineDiscretization | None = None) -> DeGennesPoint:
    """Lowest eigenvalue and positive normalized ground state of h^{N,xi}."""
    if disc is None:
        disc = HalfLineDiscretization()
    if abs(xi) > disc.truncation / 2:
        raise ValueError(
            f"|xi|={abs(xi)} exceeds T/2={disc.truncation / 2}: "
            "potential well too close to the truncation boundary"
        )
    lam0, lam1, u = _lowest_pair(xi, disc)
    if lam1 - lam0 < 10 * disc.step**2:
        raise DiscretizationTooCoarseError(
            f"spectral gap {lam1 - lam0:.3e} below 10*h^2={10 * disc.step**2:.3e}"
        )
    return DeGennesPoint(xi=xi, mu=lam0, ground_state=u, disc=disc)


def _dmu_dxi(xi: float, disc: HalfLineDiscretization) -> float:
    """d mu / d xi by the Hellmann-Feynman identity: <u, 2(t+xi) u>."""
    _, _, u = _lowest_pair(xi, disc)
    t = disc.nodes
    return float(np.sum(disc.quad_weights * 2.0 * (t + xi) * u**2))


def minimize_mu(
    disc: HalfLineDiscretization | None = None,
    tol_xi: float = 1e-6,
    bracket: tuple = (-2.0, 0.0),
) -> DeGennesMinimum:
    """Locate the unique minimum (xi0, Theta0) of xi -> mu(xi).

    Golden-section search narrows the bracket to tol_xi; a Hellmann-Feynman
    derivative root-find then polishes xi0, which is far better conditioned
    than value comparisons near the flat minimum.
    """
    if disc is None:
        disc = HalfLineDiscretization()
    if tol_xi <= 0:
        raise ValueError("tol_xi must be positive")

    lo, hi = bracket
    f = lambda x: mu_of_xi(x, disc).mu

    f_lo, f_hi = f(lo), f(hi)
    # unimodality check on a coarse sample; widen once with a warning
    for _ in range(2):
        xs = np.linspace(lo, hi, 9)
        fs = [f_lo] + [f(x) for x in xs[1:-1]] + [f_hi]
        k = int(np.argmin(fs))
        if 0 < k < len(xs) - 1:
            break
        warnings.warn(f"minimum not interior to bracket {(lo, hi)}; widening")
        lo, hi = lo - 1.0, hi + 1.0
        f_lo, f_hi = f(lo), f(hi)
    else:
        raise BracketError(f"mu(xi) has no interior minimum on {(lo, hi)}")
    diffs = np.diff(fs)
    if np.any(diffs[:k] > 0) or np.any(diffs[k:] < 0):
        raise BracketError("mu(xi) is not unimodal on the sampled bracket")

    # golden-section search
    invphi = (np.sqrt(5.0) - 1) / 2
    a, b = xs[k - 1], xs[k + 1]
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol_xi:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)

    # Hellmann-Feynman polish inside the certified bracket
    ga, gb = _dmu_dxi(a, disc), _dmu_dxi(b, disc)
    if ga < 0 < gb:
        xi0 = brentq(lambda x: _dmu_dxi(x, disc), a, b, xtol=min(tol_xi, 1e-10))
    else:
        xi0 = (a + b) / 2

    point = mu_of_xi(xi0, disc)
    theta0 = point.mu
    if not (0.5 < theta0 < 0.6):
        raise BracketError(f"theta0={theta0} outside (0.5, 0.6): pathological run")
    # endpoint values exceed theta0 up to eigensolver noise
    assert f(a) > theta0 - 1e-11 and f(b) > theta0 - 1e-11
    return DeGennesMinimum(xi0=xi0, theta0=theta0, u0=point, bracket=(a, b), disc=disc)


def ground_state_tail(point: DeGennesPoint, t_from: float) -> float:
    """L2 mass of the ground state on [t_from, T] (trapezoid quadrature)."""
    disc = point.disc
    if t_from <= 0:
        return float(np.sum(disc.quad_weights * point.ground_state**2))
    if t_from >= disc.truncation:
        return 0.0
    t = disc.nodes
    u2 = point.ground_state**2
    i = int(np.searchsorted(t, t_from))
    w = disc.quad_weights.copy()
    if i < len(t):
        w[i] = disc.step / 2 + (t[i] - t_from)  # partial first cell
    return float(np.sum(w[i:] * u2[i:]))


@lru_cache(maxsize=8)
def reference_minimum(step: float = 2e-3, truncation: float = 20.0) -> DeGennesMinimum:
    """Cached de Gennes minimum at a default working resolution."""
    disc = HalfLineDiscretization(truncation=truncation, step=step)
    return minimize_mu(disc, tol_xi=1e-7)


# Frozen anchors from the dense oracle (T=20, h=1e-3, Richardson over h, h/2).
THETA0 = 0.5901061
XI0 = -0.7681836
