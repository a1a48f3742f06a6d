"""Smooth bounded domains: signed distance, interior normals, boundary charts,
dilation, tangent-point search, and the Cartesian grids used by the lattice
operators.

Only analytically chartable shapes ship (ball, ellipsoid, 2D disk) so chart
Jacobians and distances carry no meshing error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


class TangentSearchError(RuntimeError):
    """No boundary point with B nearly tangent was found."""


class ChartRadiusError(ValueError):
    """Chart evaluated outside its curvature-safe radius."""


class Domain:
    dim: int

    def signed_distance(self, x):
        """Distance to the boundary, > 0 inside."""
        raise NotImplementedError

    def contains(self, x):
        return self.signed_distance(x) > 0

    def bounding_box(self):
        raise NotImplementedError

    def boundary_mesh(self, n: int):
        raise NotImplementedError

    def outward_normal(self, x):
        raise NotImplementedError

    def interior_normal(self, x):
        return -self.outward_normal(x)


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0
    dim = 3

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def _c(self):
        return np.asarray(self.center)

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        return self.radius - np.linalg.norm(x - self._c, axis=-1)

    def bounding_box(self):
        return self._c - self.radius, self._c + self.radius

    def outward_normal(self, x):
        x = np.asarray(x, dtype=float)
        v = x - self._c
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def boundary_mesh(self, n: int = 2048):
        i = np.arange(n)
        ga = np.pi * (3.0 - np.sqrt(5.0))
        z = 1.0 - (2 * i + 1.0) / n
        r = np.sqrt(np.maximum(1 - z * z, 0.0))
        pts = np.stack([r * np.cos(ga * i), r * np.sin(ga * i), z], axis=-1)
        return self._c + self.radius * pts


@dataclass(frozen=True)
class Disk2D(Domain):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    dim = 2

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def _c(self):
        return np.asarray(self.center)

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        return self.radius - np.linalg.norm(x - self._c, axis=-1)

    def bounding_box(self):
        return self._c - self.radius, self._c + self.radius

    def outward_normal(self, x):
        x = np.asarray(x, dtype=float)
        v = x - self._c
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def boundary_mesh(self, n: int = 1024):
        th = 2 * np.pi * np.arange(n) / n
        return self._c + self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)


@dataclass(frozen=True)
class Ellipsoid(Domain):
    center: tuple = (0.0, 0.0, 0.0)
    semi_axes: tuple = (1.0, 1.0, 1.0)
    dim = 3

    def __post_init__(self):
        if min(self.semi_axes) <= 0:
            raise ValueError("semi-axes must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "semi_axes", tuple(float(a) for a in self.semi_axes))

    @property
    def _c(self):
        return np.asarray(self.center)

    @property
    def _a(self):
        return np.asarray(self.semi_axes)

    def _level(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(((x - self._c) / self._a) ** 2, axis=-1) - 1.0

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x) - self._c
        d = -_ellipsoid_boundary_distance(pts, self._a)
        d[self._level(np.atleast_2d(x)) < 0] *= -1.0
        return float(d[0]) if single else d

    def bounding_box(self):
        return self._c - self._a, self._c + self._a

    def outward_normal(self, x):
        x = np.asarray(x, dtype=float)
        g = 2.0 * (x - self._c) / self._a**2
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def boundary_mesh(self, n: int = 4096):
        sphere = Ball().boundary_mesh(n)
        return self._c + self._a * sphere


def _ellipsoid_boundary_distance(pts, a):
    """|x - foot(x)| for centered points, via the standard scalar root

        sum_i (a_i x_i / (a_i^2 + lam))^2 = 1,

    solved with vectorized bisection plus clamped Newton polish."""
    pts = np.asarray(pts, dtype=float)
    out = np.zeros(len(pts))
    amin2 = np.min(a) ** 2
    norm = np.linalg.norm(pts, axis=-1)
    central = norm < 1e-14
    out[central] = np.min(a)
    if np.all(central):
        return out
    p = pts[~central]

    def f_and_fp(lam):
        t = (a * p) / (a**2 + lam[:, None])
        f = np.sum(t * t, axis=-1) - 1.0
        fp = -2.0 * np.sum(t * t / (a**2 + lam[:, None]), axis=-1)
        return f, fp

    lo = np.full(len(p), -amin2 * (1 - 1e-12))
    hi = np.maximum(np.max(a) * np.linalg.norm(p, axis=-1), amin2)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        f, _ = f_and_fp(mid)
        lo = np.where(f > 0, mid, lo)
        hi = np.where(f > 0, hi, mid)
    lam = 0.5 * (lo + hi)
    for _ in range(4):
        f, fp = f_and_fp(lam)
        lam = np.clip(lam - f / fp, lo, hi)
    foot = (a**2 * p) / (a**2 + lam[:, None])
    out[~central] = np.linalg.norm(p - foot, axis=-1)
    return out


def scale_domain(dom: Domain, r: float, x0=None) -> Domain:
    """Dilation Omega_R = {x0 + R (x - x0)}."""
    if r <= 0:
        raise ValueError("scale factor must be positive")
    x0 = np.zeros(dom.dim) if x0 is None else np.asarray(x0, dtype=float)
    if isinstance(dom, Ball):
        c = x0 + r * (dom._c - x0)
        return Ball(center=tuple(c), radius=r * dom.radius)
    if isinstance(dom, Disk2D):
        c = x0 + r * (dom._c - x0)
        return Disk2D(center=tuple(c), radius=r * dom.radius)
    if isinstance(dom, Ellipsoid):
        c = x0 + r * (dom._c - x0)
        return Ellipsoid(center=tuple(c), semi_axes=tuple(r * a for a in dom.semi_axes))
    raise TypeError(f"cannot scale {type(dom).__name__}")


@dataclass(frozen=True)
class TangentFrame:
    """Boundary point with interior normal and tangent frame, t1 || B-tangential."""

    point: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    normal: np.ndarray  # interior
    residual: float  # |B . nu| at point


def find_tangent_point(dom: Domain, field_spec, mesh_size: int = 4096) -> TangentFrame:
    """Boundary point where B is tangent: minimizes |B . nu| over a boundary
    mesh, polishes by local descent, ties broken lexicographically."""
    if dom.dim == 2:
        # out-of-plane field: every boundary point qualifies; return the
        # point of polar angle zero
        c = dom._c
        x0 = c + np.array([dom.radius, 0.0])
        n = dom.interior_normal(x0)
        t = np.array([n[1], -n[0]])  # oriented so curl(-d t) = +1
        return TangentFrame(point=x0, t1=t, t2=t, normal=n, residual=0.0)

    mesh = dom.boundary_mesh(mesh_size)
    bvals = field_spec.field(mesh)
    nu = dom.outward_normal(mesh)
    score = np.abs(np.sum(bvals * nu, axis=-1))
    smin = float(score.min())
    if smin > 1e-3:
        raise TangentSearchError(f"mesh minimum of |B . nu| is {smin:.2e} > 1e-3")
    near = np.flatnonzero(score <= smin + 1e-6)
    order = np.lexsort((mesh[near, 2], mesh[near, 1], mesh[near, 0]))
    x_start = mesh[near[order[0]]]

    # polish on the boundary: parameterize by tangent displacement + reprojection
    nrm = dom.outward_normal(x_start)
    tans = _orthonormal_tangents(nrm)

    def objective(t):
        p = _project_to_boundary(dom, x_start + t[0] * tans[0] + t[1] * tans[1])
        b = field_spec.field(p)
        return abs(float(b @ dom.outward_normal(p)))

    res = minimize(objective, np.zeros(2), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 400})
    x0 = _project_to_boundary(dom, x_start + res.x[0] * tans[0] + res.x[1] * tans[1])
    n_in = dom.interior_normal(x0)
    b = np.asarray(field_spec.field(x0), dtype=float)
    resid = abs(float(b @ n_in))
    if resid > 1e-8:
        raise TangentSearchError(f"polish stalled at |B . nu| = {resid:.2e}")
    b_tan = b - (b @ n_in) * n_in
    if np.linalg.norm(b_tan) < 1e-8:
        raise TangentSearchError("tangential field component vanishes at x0")
    t1 = b_tan / np.linalg.norm(b_tan)
    t2 = np.cross(n_in, t1)
    return TangentFrame(point=x0, t1=t1, t2=t2, normal=n_in, residual=resid)


def _orthonormal_tangents(n):
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    t1 = np.cross(n, e)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(n, t1)


def _project_to_boundary(dom: Domain, x):
    """Nearest boundary point (exact for ball; foot point for ellipsoid)."""
    if isinstance(dom, Ball):
        v = x - dom._c
        return dom._c + dom.radius * v / np.linalg.norm(v)
    if isinstance(dom, Ellipsoid):
        p = np.asarray(x, dtype=float) - dom._c
        a = dom._a
        # reuse the foot-point root
        lam_d = _ellipsoid_boundary_distance(p[None, :], a)  # ensures convergence
        del lam_d
        # recompute foot explicitly
        amin2 = np.min(a) ** 2
        lo, hi = -amin2 * (1 - 1e-12), max(np.max(a) * np.linalg.norm(p), amin2)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            t = (a * p) / (a**2 + mid)
            if np.sum(t * t) > 1.0:
                lo = mid
            else:
                hi = mid
        lam = 0.5 * (lo + hi)
        return dom._c + (a**2 * p) / (a**2 + lam)
    raise TypeError(f"no boundary projection for {type(dom).__name__}")


class ChartMap:
    """Boundary-adapted coordinates Phi(y) = phi(y1, y2) + y3 N(phi(y1, y2)).

    map() returns world points; jacobian() returns the world Jacobian whose
    columns are the partials d Phi / d y_i.  In the aligned frame
    (t1, t2, N) the Jacobian at y = 0 is the identity.
    """

    def __init__(self, dom: Domain, frame: TangentFrame):
        self.dom = dom
        self.frame = frame
        self.x0 = np.asarray(frame.point, dtype=float)
        if abs(dom.signed_distance(self.x0)) > 1e-9:
            raise ValueError("chart base point is not on the boundary")
        self.safe_radius = _safe_chart_radius(dom)

    @property
    def frame_matrix(self):
        f = self.frame
        return np.column_stack([f.t1, f.t2, f.normal])

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if np.linalg.norm(y) > self.safe_radius:
            raise ChartRadiusError(
                f"|y| = {np.linalg.norm(y):.3f} exceeds safe radius {self.safe_radius:.3f}"
            )
        return y

    def map(self, y):
        raise NotImplementedError

    def jacobian(self, y):
        raise NotImplementedError

    def aligned_jacobian(self, y):
        return self.frame_matrix.T @ self.jacobian(y)


class BallChart(ChartMap):
    """phi = radial projection of the tangent plane onto the sphere."""

    def map(self, y):
        y = self._check(y)
        dom, f = self.dom, self.frame
        u = self.x0 + y[0] * f.t1 + y[1] * f.t2 - dom._c
        return dom._c + (dom.radius - y[2]) * u / np.linalg.norm(u)

    def jacobian(self, y):
        y = self._check(y)
        dom, f = self.dom, self.frame
        u = self.x0 + y[0] * f.t1 + y[1] * f.t2 - dom._c
        r = np.linalg.norm(u)
        uh = u / r
        proj = (np.eye(3) - np.outer(uh, uh)) / r
        cols = [(dom.radius - y[2]) * proj @ f.t1,
                (dom.radius - y[2]) * proj @ f.t2,
                -uh]
        return np.column_stack(cols)


class EllipsoidChart(ChartMap):
    """phi = projection of the tangent plane onto the ellipsoid along the
    fixed normal line at x0; all derivatives are closed-form."""

    def _phi(self, y):
        dom, f = self.dom, self.frame
        a = dom._a
        n0 = f.normal
        p = self.x0 + y[0] * f.t1 + y[1] * f.t2
        al = np.sum((n0 / a) ** 2)
        be = 2.0 * np.sum((p - dom._c) * n0 / a**2)
        ga = dom._level(p)
        disc = be * be - 4 * al * ga
        if disc < 0:
            raise ChartRadiusError("tangent plane point does not project onto the boundary")
        sq = np.sqrt(disc)
        r1 = (-be - np.sign(be if be != 0 else 1.0) * sq) / (2 * al)
        r2 = ga / (al * r1) if r1 != 0 else (-be + sq) / (2 * al)
        s = r1 if abs(r1) < abs(r2) else r2
        return p + s * n0

    def _normal_and_jac(self, x):
        dom = self.dom
        w = 2.0 * (x - dom._c) / dom._a**2
        nw = np.linalg.norm(w)
        wh = w / nw
        n = -wh
        d_w = np.diag(2.0 / dom._a**2)
        dn = -(np.eye(3) - np.outer(wh, wh)) @ d_w / nw
        return n, dn

    def map(self, y):
        y = self._check(y)
        phi = self._phi(y)
        n, _ = self._normal_and_jac(phi)
        return phi + y[2] * n

    def jacobian(self, y):
        y = self._check(y)
        dom, f = self.dom, self.frame
        phi = self._phi(y)
        n, dn = self._normal_and_jac(phi)
        grad_g = 2.0 * (phi - dom._c) / dom._a**2
        n0 = f.normal
        denom = float(grad_g @ n0)
        cols = []
        for t in (f.t1, f.t2):
            ds = -float(grad_g @ t) / denom
            dphi = t + ds * n0
            cols.append(dphi + y[2] * (dn @ dphi))
        cols.append(n)
        return np.column_stack(cols)


class DiskChart(ChartMap):
    """2D arc-length chart Phi(y1, y3) on a disk boundary."""

    def __init__(self, dom: Disk2D, frame: TangentFrame):
        self.dom = dom
        self.frame = frame
        self.x0 = np.asarray(frame.point, dtype=float)
        self.safe_radius = _safe_chart_radius(dom)
        v = self.x0 - dom._c
        self.theta0 = float(np.arctan2(v[1], v[0]))

    def map(self, y):
        y = np.asarray(y, dtype=float)
        if np.linalg.norm(y) > self.safe_radius:
            raise ChartRadiusError("outside chart radius")
        dom = self.dom
        th = self.theta0 + y[0] / dom.radius
        bd = dom._c + dom.radius * np.array([np.cos(th), np.sin(th)])
        n = (dom._c - bd) / dom.radius
        return bd + y[-1] * n

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        dom = self.dom
        th = self.theta0 + y[0] / dom.radius
        tang = np.array([-np.sin(th), np.cos(th)])
        n = -np.array([np.cos(th), np.sin(th)])
        col1 = (dom.radius - y[-1]) / dom.radius * tang
        return np.column_stack([col1, n])


def _safe_chart_radius(dom: Domain) -> float:
    # policy: half the minimal curvature radius
    if isinstance(dom, (Ball, Disk2D)):
        return 0.5 * dom.radius
    if isinstance(dom, Ellipsoid):
        a = dom._a
        return 0.5 * np.min(a) ** 2 / np.max(a)
    raise TypeError(f"no chart for {type(dom).__name__}")


def boundary_chart(dom: Domain, frame: TangentFrame) -> ChartMap:
    if isinstance(dom, Ball):
        return BallChart(dom, frame)
    if isinstance(dom, Ellipsoid):
        return EllipsoidChart(dom, frame)
    if isinstance(dom, Disk2D):
        return DiskChart(dom, frame)
    raise TypeError(f"no chart for {type(dom).__name__}")


@dataclass(frozen=True)
class Grid:
    """Cell-centered uniform grid restricted to the strict interior."""

    dom: Domain
    h: float
    origin: np.ndarray
    shape: tuple
    index: np.ndarray  # full lattice -> node id, -1 outside
    coords: np.ndarray  # (n_nodes, dim)

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def dim(self) -> int:
        return self.dom.dim

    def distances(self):
        return self.dom.signed_distance(self.coords)


def build_grid(dom: Domain, h: float) -> Grid:
    """Uniform grid of spacing h over the bounding box, interior nodes only."""
    if h <= 0:
        raise ValueError("h must be positive")
    lo, hi = dom.bounding_box()
    lo = np.asarray(lo, dtype=float) - 0.5 * h
    hi = np.asarray(hi, dtype=float) + 0.5 * h
    shape = tuple(int(np.ceil((hi[k] - lo[k]) / h)) for k in range(dom.dim))
    axes = [lo[k] + (np.arange(shape[k]) + 0.5) * h for k in range(dom.dim)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    pts = mesh.reshape(-1, dom.dim)
    inside = dom.signed_distance(pts) > 0
    if not np.any(inside):
        raise ValueError("grid has no interior nodes")
    index = np.full(len(pts), -1, dtype=np.int64)
    index[inside] = np.arange(int(np.sum(inside)))
    return Grid(
        dom=dom,
        h=float(h),
        origin=lo,
        shape=shape,
        index=index.reshape(shape),
        coords=pts[inside],
    )


def domain_from_json(spec: dict) -> Domain:
    kind = spec["type"]
    if kind == "ball":
        return Ball(center=tuple(spec.get("center", (0, 0, 0))), radius=spec.get("radius", 1.0))
    if kind == "disk":
        return Disk2D(center=tuple(spec.get("center", (0, 0))), radius=spec.get("radius", 1.0))
    if kind == "ellipsoid":
        return Ellipsoid(
            center=tuple(spec.get("center", (0, 0, 0))),
            semi_axes=tuple(spec["semi_axes"]),
        )
    raise ValueError(f"unknown domain type {kind!r}")
