"""Gauge-invariant lattice discretization of the magnetic quadratic form.

Each grid edge carries the unit-modulus link phase exp(i q int A . dl)
(Peierls substitution), so a polynomial gauge change acts as an exact
diagonal unitary and the discrete spectrum is exactly gauge invariant.
Neumann is the natural boundary condition of the discrete form (exterior
links are simply omitted); Dirichlet keeps the full diagonal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from magspec.domains import Domain, Grid, build_grid
from magspec.fields import FieldSpec

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)
_GL01_NODES = 0.5 * (_GL_NODES + 1.0)
_GL01_WEIGHTS = 0.5 * _GL_WEIGHTS


class UnderResolvedGridError(ValueError):
    """Grid spacing does not resolve the magnetic length."""


@dataclass(frozen=True)
class DiscreteMagneticOperator:
    grid: Grid
    bc: str
    q: float
    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.grid.n_nodes


@dataclass(frozen=True)
class EigenResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    converged: bool
    value_next: float | None = None


@dataclass(frozen=True)
class PartitionOfUnity:
    centers: np.ndarray
    r: float
    weights: np.ndarray  # (n_centers, n_nodes)
    grad_constant: float  # C with sum_j |grad chi_j|^2 <= C / r^2


def grid_links(grid: Grid):
    """Per-axis arrays (ia, ib) of adjacent interior node ids, b = a + h e_k."""
    out = []
    for k in range(grid.dim):
        sl_a = [slice(None)] * grid.dim
        sl_b = [slice(None)] * grid.dim
        sl_a[k] = slice(None, -1)
        sl_b[k] = slice(1, None)
        ia = grid.index[tuple(sl_a)].ravel()
        ib = grid.index[tuple(sl_b)].ravel()
        ok = (ia >= 0) & (ib >= 0)
        out.append((ia[ok], ib[ok]))
    return out


def _potential_on(field_spec: FieldSpec, pts: np.ndarray, dim: int) -> np.ndarray:
    """Potential components in the grid's dimension (2D uses the plane x3=0)."""
    if dim == 3:
        return field_spec.potential(pts)
    p3 = np.zeros(pts.shape[:-1] + (3,))
    p3[..., :2] = pts
    return field_spec.potential(p3)[..., :2]


def link_phases(grid: Grid, field_spec: FieldSpec, q: float):
    """theta = q int A . dl per link, 6-node Gauss-Legendre along each edge
    (exact for polynomial potentials, high-order otherwise)."""
    phases = []
    for k, (ia, ib) in enumerate(grid_links(grid)):
        start = grid.coords[ia]
        acc = np.zeros(len(ia))
        for t, w in zip(_GL01_NODES, _GL01_WEIGHTS):
            pts = start.copy()
            pts[:, k] += t * grid.h
            acc += w * _potential_on(field_spec, pts, grid.dim)[:, k]
        phases.append(q * grid.h * acc)
    return phases


def assemble(
    dom: Domain,
    field_spec: FieldSpec,
    q: float,
    bc: str = "neumann",
    grid: Grid | None = None,
    h: float | None = None,
) -> DiscreteMagneticOperator:
    """Sparse Hermitian matrix of (i grad + q A)^2 on the grid."""
    if bc not in ("neumann", "dirichlet"):
        raise ValueError("bc must be 'neumann' or 'dirichlet'")
    if q < 0:
        raise ValueError("q must be >= 0")
    if grid is None:
        if h is None:
            raise ValueError("pass a grid or a spacing h")
        grid = build_grid(dom, h)
    if q > 0:
        if grid.h > 1.0 / np.sqrt(q):
            raise UnderResolvedGridError(
                f"h={grid.h} exceeds the magnetic length 1/sqrt(q)={1 / np.sqrt(q):.4f}"
            )
        if grid.h > 0.5 / np.sqrt(q):
            warnings.warn("h > 0.5/sqrt(q): magnetic oscillations are marginally resolved")

    n = grid.n_nodes
    h2 = grid.h**2
    diag = np.zeros(n)
    rows, cols, vals = [], [], []
    for (ia, ib), theta in zip(grid_links(grid), link_phases(grid, field_spec, q)):
        # covariant difference u(b) e^{-i theta} - u(a): hopping -e^{-i theta}
        hop = -np.exp(-1j * theta) / h2
        rows.append(ia)
        cols.append(ib)
        vals.append(hop)
        rows.append(ib)
        cols.append(ia)
        vals.append(np.conj(hop))
        np.add.at(diag, ia, 1.0 / h2)
        np.add.at(diag, ib, 1.0 / h2)
    if bc == "dirichlet":
        diag[:] = 2.0 * grid.dim / h2
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag.astype(complex))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    return DiscreteMagneticOperator(grid=grid, bc=bc, q=float(q), matrix=mat)


def rayleigh(op: DiscreteMagneticOperator, u: np.ndarray) -> float:
    """<H u, u> / <u, u>; the imaginary part must be at noise level."""
    u = np.asarray(u)
    nrm2 = float(np.real(np.vdot(u, u)))
    if nrm2 == 0.0:
        raise ValueError("zero vector")
    val = np.vdot(u, op.matrix @ u) / nrm2
    if abs(val.imag) > 1e-10 * max(abs(val.real), 1.0):
        raise AssertionError(f"Rayleigh quotient not real: {val}")
    return float(val.real)


def lowest_eigenpair(
    op: DiscreteMagneticOperator,
    tol: float = 1e-8,
    max_iter: int = 20000,
    method: str = "auto",
) -> EigenResult:
    """Lowest eigenpair, block of size 2 to detect near-degeneracy.

    'auto' uses shift-invert Lanczos (deterministic start, counted inner
    solves); 'lobpcg' runs the diagonally preconditioned block iteration.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = op.matrix
    n = op.n
    rng = np.random.default_rng(12345)
    if method not in ("auto", "shift-invert", "lobpcg"):
        raise ValueError(f"unknown method {method!r}")

    if method == "lobpcg":
        x0 = rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))
        d = np.maximum(h.diagonal().real, 1e-12)
        prec = spla.aslinearoperator(sp.diags(1.0 / d).astype(complex))
        vals, vecs = spla.lobpcg(h, x0, M=prec, tol=tol, maxiter=max_iter, largest=False)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        lam, v = float(vals[0]), vecs[:, 0]
        res = float(np.linalg.norm(h @ v - lam * v) / np.linalg.norm(v))
        return EigenResult(
            value=lam,
            vector=_normalize(v, op.grid),
            residual=res,
            iterations=max_iter,
            converged=res <= tol * max(abs(lam), 1.0),
            value_next=float(vals[1]),
        )

    sigma = -1.0
    shifted = (h - sigma * sp.identity(n, dtype=complex, format="csr")).tocsc()
    lu = spla.splu(shifted)
    count = {"n": 0}

    def solve(v):
        count["n"] += 1
        return lu.solve(v)

    opinv = spla.LinearOperator((n, n), matvec=solve, dtype=complex)
    v0 = rng.standard_normal(n)
    converged = True
    vals = vecs = None
    # a nearly degenerate lowest cluster (interior Landau levels) can defeat
    # a small Krylov space at tight tolerance; enlarge and relax, then fall
    # back to a dense solve for small problems
    for ncv, arpack_tol in ((20, tol * 1e-2), (60, tol * 1e-2), (60, tol)):
        try:
            vals, vecs = spla.eigsh(
                h, k=min(2, n - 1), sigma=sigma, which="LM", OPinv=opinv, v0=v0,
                ncv=min(n, ncv), tol=arpack_tol, maxiter=min(max_iter, 400),
            )
            break
        except spla.ArpackNoConvergence as exc:
            if len(exc.eigenvalues) > 0:
                converged = False
                vals, vecs = exc.eigenvalues, exc.eigenvectors
                break
    if vals is None:
        if n > 6000:
            raise spla.ArpackNoConvergence(
                "eigensolver failed to converge", np.array([]), np.empty((n, 0))
            )
        import scipy.linalg as sla

        dense_vals, dense_vecs = sla.eigh(h.toarray(), subset_by_index=[0, 1])
        vals, vecs = dense_vals, dense_vecs
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    v = vecs[:, 0]
    lam = rayleigh(op, v)
    res = float(np.linalg.norm(h @ v - lam * v) / np.linalg.norm(v))
    target = max(tol, 1e-12) * max(abs(lam), 1.0)
    if res > target:
        # inverse-iteration polish with a shift just below the estimate
        sigma2 = lam - 1e-3 * max(abs(lam), 1.0)
        lu2 = spla.splu((h - sigma2 * sp.identity(n, dtype=complex, format="csr")).tocsc())
        for _ in range(15):
            v = lu2.solve(v)
            v = v / np.linalg.norm(v)
            count["n"] += 1
            lam = rayleigh(op, v)
            res = float(np.linalg.norm(h @ v - lam * v))
            target = max(tol, 1e-12) * max(abs(lam), 1.0)
            if res <= target:
                break
    return EigenResult(
        value=lam,
        vector=_normalize(v, op.grid),
        residual=res,
        iterations=count["n"],
        converged=converged and res <= target,
        value_next=float(vals[1]) if len(vals) > 1 else None,
    )


def _normalize(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Unit discrete L2 norm (cell measure h^dim) with a deterministic phase."""
    v = v / np.sqrt(np.real(np.vdot(v, v)) * grid.h**grid.dim)
    k = int(np.argmax(np.abs(v)))
    phase = v[k] / abs(v[k])
    return v / phase


def _smoothstep(t):
    """C^2 quintic ramp: 0 -> 1 on [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def bump_profile(rho):
    """C^2 radial bump: 1 for rho <= 1/2, 0 for rho >= 1."""
    return 1.0 - _smoothstep(2.0 * np.asarray(rho, dtype=float) - 1.0)


def make_partition(dom: Domain, r: float, grid: Grid) -> PartitionOfUnity:
    """Quadratic partition of unity from a lattice of radial bumps of radius r,
    normalized by the square-root-of-sum-of-squares trick."""
    lo, hi = dom.bounding_box()
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    diam = float(np.linalg.norm(hi - lo))
    if not (0 < r < diam):
        raise ValueError("need 0 < r < domain diameter")
    if r < 3 * grid.h:
        raise ValueError("r below 3 grid spacings cannot be resolved")
    dim = dom.dim
    mid = (lo + hi) / 2
    if np.max(np.linalg.norm(grid.coords - mid, axis=-1)) <= r / 2:
        # one bump's flat plateau already covers the domain: chi = 1
        centers = np.array([mid])
    else:
        s = r / (2.0 * np.sqrt(dim))  # lattice spacing: every x within r/2 of a center
        axes = [np.arange(lo[k] - r, hi[k] + r + s, s) for k in range(dim)]
        centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    d2 = np.sum((centers[:, None, :] - grid.coords[None, :, :]) ** 2, axis=-1)
    w = bump_profile(np.sqrt(d2) / r)
    keep = np.max(w, axis=1) > 0
    centers, w = centers[keep], w[keep]
    ssum = np.sqrt(np.sum(w**2, axis=0))
    if np.min(ssum) <= 0:
        raise RuntimeError("bump lattice does not cover the grid")
    chi = w / ssum
    gsq = np.zeros(grid.n_nodes)
    for j in range(len(centers)):
        gsq += _grid_gradient_squared(grid, chi[j])
    c_const = float(np.max(gsq) * r**2)
    return PartitionOfUnity(centers=centers, r=r, weights=chi, grad_constant=c_const)


def _grid_gradient_squared(grid: Grid, w: np.ndarray) -> np.ndarray:
    """Sum_k (d_k w)^2 at nodes, central differences, one-sided at boundary."""
    out = np.zeros(grid.n_nodes)
    for ia, ib in grid_links(grid):
        d = (w[ib] - w[ia]) / grid.h
        acc_n = np.zeros(grid.n_nodes)
        acc_d = np.zeros(grid.n_nodes)
        np.add.at(acc_n, ia, d)
        np.add.at(acc_d, ia, 1.0)
        np.add.at(acc_n, ib, d)
        np.add.at(acc_d, ib, 1.0)
        avg = np.where(acc_d > 0, acc_n / np.maximum(acc_d, 1.0), 0.0)
        out += avg**2
    return out


def verify_ims(op: DiscreteMagneticOperator, partition: PartitionOfUnity, u: np.ndarray):
    """Both sides of the localization identity

        q_A(u) = sum_j q_A(chi_j u) - sum_j || |grad chi_j| u ||^2,

    with the discrete form; returns (lhs, rhs, gap)."""
    u = np.asarray(u, dtype=complex)
    h = op.matrix
    lhs = float(np.real(np.vdot(u, h @ u)))
    rhs = 0.0
    for j in range(len(partition.centers)):
        chi_u = partition.weights[j] * u
        rhs += float(np.real(np.vdot(chi_u, h @ chi_u)))
        gsq = _grid_gradient_squared(op.grid, partition.weights[j])
        rhs -= float(np.sum(gsq * np.abs(u) ** 2))
    return lhs, rhs, abs(lhs - rhs)
