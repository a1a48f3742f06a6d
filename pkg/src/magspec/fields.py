"""Closed-form vector potentials A with analytic B = curl A.

Variants: linear potentials of constant fields, the helical director family,
polynomial potentials (degree-capped so line integrals and the radial gauge
integral stay exact under Gauss quadrature), gauge shifts A + grad(phi), and
pullbacks through boundary charts.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import quad

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)
_GL01_NODES = 0.5 * (_GL_NODES + 1.0)
_GL01_WEIGHTS = 0.5 * _GL_WEIGHTS


class Poly3:
    """Polynomial in (x1, x2, x3): {(i, j, k): coeff}."""

    def __init__(self, coeffs: dict):
        self.coeffs = {tuple(m): float(c) for m, c in coeffs.items() if c != 0.0}

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.coeffs), default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for (i, j, k), c in self.coeffs.items():
            out = out + c * x[..., 0] ** i * x[..., 1] ** j * x[..., 2] ** k
        return out

    def partial(self, axis: int) -> "Poly3":
        out = {}
        for m, c in self.coeffs.items():
            if m[axis] > 0:
                mm = list(m)
                mm[axis] -= 1
                out[tuple(mm)] = out.get(tuple(mm), 0.0) + c * m[axis]
        return Poly3(out)

    def gradient(self):
        return [self.partial(k) for k in range(3)]


def _zero_poly():
    return Poly3({})


@dataclass(frozen=True)
class Rotation:
    """Element of SO3, validated on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=float).reshape(3, 3)
        object.__setattr__(self, "matrix", q)
        if np.max(np.abs(q.T @ q - np.eye(3))) > 1e-12:
            raise ValueError("matrix is not orthogonal to 1e-12")
        if abs(np.linalg.det(q) - 1.0) > 1e-12:
            raise ValueError("matrix has det != 1")

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(np.eye(3))

    @staticmethod
    def from_quaternion(w, x, y, z) -> "Rotation":
        n = np.sqrt(w * w + x * x + y * y + z * z)
        w, x, y, z = w / n, x / n, y / n, z / n
        m = np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )
        # re-orthonormalize so the 1e-12 class invariant holds exactly
        u, _, vt = np.linalg.svd(m)
        return Rotation(u @ vt)


def fibonacci_rotations(n: int) -> list:
    """Deterministic quasi-uniform SO3 sample: unit quaternions on a
    Fibonacci-type spiral (Alexa's super-Fibonacci construction)."""
    if n < 1:
        raise ValueError("need n >= 1")
    phi = np.sqrt(2.0)
    psi = 1.533751168755204288118041
    out = []
    for i in range(n):
        s = i + 0.5
        t = s / n
        d = 2.0 * np.pi * s
        r, big_r = np.sqrt(t), np.sqrt(1.0 - t)
        alpha, beta = d / phi, d / psi
        out.append(
            Rotation.from_quaternion(
                r * np.sin(alpha), r * np.cos(alpha), big_r * np.sin(beta), big_r * np.cos(beta)
            )
        )
    return out


@dataclass(frozen=True)
class SeminormReport:
    sup_B: float
    sup_gradB: float
    sup_hessB: float
    resolution: int

    @property
    def c1_norm_sq(self) -> float:
        return self.sup_B + self.sup_gradB**2

    @property
    def c2_norm_sq(self) -> float:
        return self.c1_norm_sq + self.sup_hessB**2


class FieldSpec:
    """A vector potential with analytic magnetic field where available."""

    def potential(self, x):
        raise NotImplementedError

    def field(self, x):
        raise NotImplementedError

    # polynomial components, or None when the variant is not polynomial
    def potential_polys(self):
        return None

    def grad_field_frobenius(self, x):
        return _fd_tensor_frobenius(self.field, x, order=1)

    def hess_field_frobenius(self, x):
        return _fd_tensor_frobenius(self.field, x, order=2)


class LinearField(FieldSpec):
    """A(x) = (1/2) B0 ^ x, the linear potential of a constant field."""

    def __init__(self, b0):
        self.b0 = np.asarray(b0, dtype=float).reshape(3)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.cross(np.broadcast_to(self.b0, x.shape), x)

    def field(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.b0, x.shape).copy()

    def potential_polys(self):
        b = self.b0
        return [
            Poly3({(0, 1, 0): -0.5 * b[2], (0, 0, 1): 0.5 * b[1]}),
            Poly3({(1, 0, 0): 0.5 * b[2], (0, 0, 1): -0.5 * b[0]}),
            Poly3({(1, 0, 0): -0.5 * b[1], (0, 1, 0): 0.5 * b[0]}),
        ]

    def grad_field_frobenius(self, x):
        return np.zeros(np.asarray(x).shape[:-1])

    hess_field_frobenius = grad_field_frobenius


def linear_potential(b0) -> LinearField:
    return LinearField(b0)


class HelicalField(FieldSpec):
    """Helical director n(x) = Q n_tau(Q^t x), n_tau = (cos(tau x3), sin(tau x3), 0).

    Satisfies curl n + tau n = 0.  With normalized=True the potential is
    A = n / tau, whose field B = -n has |B| = 1 everywhere.
    """

    def __init__(self, tau: float, rotation: Rotation | None = None, normalized: bool = False):
        if tau < 0:
            raise ValueError("tau must be >= 0")
        if normalized and tau == 0:
            raise ValueError("normalization requires tau > 0")
        self.tau = float(tau)
        self.rotation = rotation if rotation is not None else Rotation.identity()
        self.normalized = bool(normalized)

    def director(self, x):
        x = np.asarray(x, dtype=float)
        q = self.rotation.matrix
        z = x @ q[:, 2]  # third component of Q^t x
        n_loc = np.stack(
            [np.cos(self.tau * z), np.sin(self.tau * z), np.zeros_like(z)], axis=-1
        )
        return n_loc @ q.T

    def potential(self, x):
        n = self.director(x)
        return n / self.tau if self.normalized else n

    def field(self, x):
        # curl(Q f(Q^t x)) = Q (curl f)(Q^t x) and curl n_tau = -tau n_tau
        n = self.director(x)
        return -n if self.normalized else -self.tau * n

    def grad_field_frobenius(self, x):
        x = np.asarray(x, dtype=float)
        scale = self.tau if self.normalized else self.tau**2
        return np.full(x.shape[:-1], scale)

    def hess_field_frobenius(self, x):
        x = np.asarray(x, dtype=float)
        scale = self.tau**2 if self.normalized else self.tau**3
        return np.full(x.shape[:-1], scale)


def helical(tau: float, rotation: Rotation | None = None, normalized: bool = False) -> HelicalField:
    return HelicalField(tau, rotation, normalized)


class PolynomialField(FieldSpec):
    """A with polynomial components (degree <= 3 keeps all integrals exact)."""

    def __init__(self, components):
        comps = list(components)
        if len(comps) != 3:
            raise ValueError("need three components")
        self.components = [c if isinstance(c, Poly3) else Poly3(c) for c in comps]
        if max(c.degree for c in self.components) > 3:
            raise ValueError("polynomial degree capped at 3")
        a1, a2, a3 = self.components
        self._curl = [
            _poly_sub(a3.partial(1), a2.partial(2)),
            _poly_sub(a1.partial(2), a3.partial(0)),
            _poly_sub(a2.partial(0), a1.partial(1)),
        ]

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([c(x) for c in self.components], axis=-1)

    def field(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([c(x) for c in self._curl], axis=-1)

    def potential_polys(self):
        return self.components

    def grad_field_frobenius(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for c in self._curl:
            for k in range(3):
                out = out + c.partial(k)(x) ** 2
        return np.sqrt(out)

    def hess_field_frobenius(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for c in self._curl:
            for k in range(3):
                for l in range(3):
                    out = out + c.partial(k).partial(l)(x) ** 2
        return np.sqrt(out)


def _poly_sub(p: Poly3, q: Poly3) -> Poly3:
    out = dict(p.coeffs)
    for m, c in q.coeffs.items():
        out[m] = out.get(m, 0.0) - c
    return Poly3(out)


class GaugeShiftedField(FieldSpec):
    """A + grad(phi) with a polynomial scalar gauge phi; B is unchanged."""

    def __init__(self, base: FieldSpec, phi: Poly3):
        self.base = base
        self.phi = phi if isinstance(phi, Poly3) else Poly3(phi)
        self._grad = self.phi.gradient()

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        g = np.stack([p(x) for p in self._grad], axis=-1)
        return self.base.potential(x) + g

    def field(self, x):
        return self.base.field(x)

    def potential_polys(self):
        base = self.base.potential_polys()
        if base is None:
            return None
        return [_poly_sub(b, _poly_neg(g)) for b, g in zip(base, self._grad)]

    def grad_field_frobenius(self, x):
        return self.base.grad_field_frobenius(x)

    def hess_field_frobenius(self, x):
        return self.base.hess_field_frobenius(x)


def _poly_neg(p: Poly3) -> Poly3:
    return Poly3({m: -c for m, c in p.coeffs.items()})


class PullbackField(FieldSpec):
    """The 1-form pullback A~(y) = DPhi(y)^t A(Phi(y)) through a chart."""

    def __init__(self, base: FieldSpec, chart):
        self.base = base
        self.chart = chart  # needs .map(y) and .jacobian(y)

    def potential(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            j = self.chart.jacobian(y)
            return j.T @ self.base.potential(self.chart.map(y))
        return np.stack([self.potential(yy) for yy in y.reshape(-1, 3)]).reshape(y.shape)

    def field(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return numeric_curl(self.potential, y)
        return np.stack([self.field(yy) for yy in y.reshape(-1, 3)]).reshape(y.shape)


def curl(a: FieldSpec, x):
    """B = curl A, analytic for closed-form variants."""
    return a.field(x)


def numeric_curl(potential, x, step: float = 1e-5, rel_tol: float = 1e-8):
    """Central-difference curl with a step-halving accuracy check."""

    def one(h):
        g = np.zeros((3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            g[:, k] = (potential(x + e) - potential(x - e)) / (2 * h)
        return np.array([g[2, 1] - g[1, 2], g[0, 2] - g[2, 0], g[1, 0] - g[0, 1]])

    c1, c2 = one(step), one(step / 2)
    scale = max(np.linalg.norm(c2), 1.0)
    if np.linalg.norm(c1 - c2) > 100 * rel_tol * scale:
        raise RuntimeError("numeric curl failed the step-halving accuracy check")
    return c2


def line_integral(a: FieldSpec, start, end) -> float:
    """Integral of A . dl along the segment [start, end].

    Gauss-Legendre with 6 nodes: exact for polynomial potentials up to
    degree 11, high-order accurate otherwise.
    """
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    dl = end - start
    pts = start[None, :] + _GL01_NODES[:, None] * dl[None, :]
    vals = a.potential(pts) @ dl
    return float(np.dot(_GL01_WEIGHTS, vals))


def poincare_gauge(f: FieldSpec, x) -> float:
    """Radial gauge u(x) = int_0^1 F(t x) . x dt.

    Exact (Gauss-Legendre) for polynomial F; adaptive quadrature to 1e-10
    otherwise.
    """
    x = np.asarray(x, dtype=float).reshape(3)
    if f.potential_polys() is not None:
        pts = _GL01_NODES[:, None] * x[None, :]
        vals = f.potential(pts) @ x
        return float(np.dot(_GL01_WEIGHTS, vals))
    val, _ = quad(lambda t: float(f.potential(t * x) @ x), 0.0, 1.0, epsabs=1e-10, epsrel=1e-10)
    return val


def pullback_field(chart, b, y):
    """Magnetic field of the pulled-back potential: det(DPhi) (DPhi)^{-1} B.

    This is the comatrix identity for curl(DPhi^t A(Phi(y))); it reduces to
    Q^t B for rotations and to R^2 B for uniform scalings.
    """
    y = np.asarray(y, dtype=float).reshape(3)
    j = chart.jacobian(y)
    det = np.linalg.det(j)
    if abs(det) < 1e-14:
        raise np.linalg.LinAlgError("singular chart Jacobian")
    return det * np.linalg.solve(j, np.asarray(b, dtype=float).reshape(3))


def seminorms(f: FieldSpec, box, samples: int = 512) -> SeminormReport:
    """Sup-norms of B, grad B, hess B by dense sampling over a box."""
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    m = max(int(round(samples ** (1.0 / 3.0))), 8)
    axes = [np.linspace(lo[k], hi[k], m) for k in range(3)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    sup_b = float(np.max(np.linalg.norm(f.field(pts), axis=-1)))
    sup_grad = float(np.max(f.grad_field_frobenius(pts)))
    sup_hess = float(np.max(f.hess_field_frobenius(pts)))
    return SeminormReport(sup_B=sup_b, sup_gradB=sup_grad, sup_hessB=sup_hess, resolution=m)


def _fd_tensor_frobenius(field_fn, x, order: int, step: float = 1e-4):
    """Frobenius norm of the order-th derivative tensor of B, by central FD."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x.reshape(-1, 3)
    out = np.zeros(len(pts))
    for idx, p in enumerate(pts):
        acc = 0.0
        for k in range(3):
            e = np.zeros(3)
            e[k] = step
            if order == 1:
                d = (field_fn(p + e) - field_fn(p - e)) / (2 * step)
                acc += float(np.sum(np.asarray(d) ** 2))
            else:
                for l in range(3):
                    e2 = np.zeros(3)
                    e2[l] = step
                    d = (
                        np.asarray(field_fn(p + e + e2))
                        - np.asarray(field_fn(p + e - e2))
                        - np.asarray(field_fn(p - e + e2))
                        + np.asarray(field_fn(p - e - e2))
                    ) / (4 * step**2)
                    acc += float(np.sum(d**2))
        out[idx] = np.sqrt(acc)
    return out[0] if single else out.reshape(x.shape[:-1])


def field_from_json(spec: dict) -> FieldSpec:
    """Build a FieldSpec from its JSON descriptor."""
    kind = spec["type"]
    if kind == "linear":
        return LinearField(spec["b0"])
    if kind == "helical":
        rot = Rotation(np.asarray(spec["rotation"], dtype=float).reshape(3, 3)) \
            if "rotation" in spec else Rotation.identity()
        return HelicalField(spec["tau"], rot, normalized=spec.get("normalized", False))
    if kind == "polynomial":
        return PolynomialField(
            [Poly3({tuple(int(c) for c in m.split(",")): v for m, v in comp.items()})
             for comp in spec["components"]]
        )
    raise ValueError(f"unknown field type {kind!r}")
