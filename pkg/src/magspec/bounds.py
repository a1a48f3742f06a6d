"""Spectral upper/lower bound machinery for the magnetic Neumann problem.

Provides exact-rational exponent bookkeeping for the asymptotic bounds,
evaluators for the bound right-hand sides, explicit boundary-localized
trial states ("quasimodes") whose Rayleigh quotients certify upper
bounds, the large-field rescaling identity, and the rotation scan that
estimates the infimum of the ground energy over field orientations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from magspec import degennes
from magspec.domains import Ball, Disk2D, Domain, Grid, build_grid, find_tangent_point
from magspec.fields import (
    FieldSpec,
    fibonacci_rotations,
    helical,
    linear_potential,
    seminorms,
)
from magspec.magop import DiscreteMagneticOperator, assemble, lowest_eigenpair, rayleigh

THETA0 = degennes.THETA0
XI0 = degennes.XI0


# ---------------------------------------------------------------------------
# exponent bookkeeping (exact rationals)
# ---------------------------------------------------------------------------

def choose_exponents(x: Fraction) -> tuple[Fraction, Fraction]:
    """Exponent pair (eps, delta) on the admissible segment, parametrized by
    a rational x in [0, 1/2): eps = 1/8 - x/4 and delta = (1 + x)/3."""
    x = Fraction(x)
    if not (0 <= x < Fraction(1, 2)):
        raise ValueError("x must lie in [0, 1/2)")
    eps = Fraction(1, 8) - x / 4
    delta = (1 + x) / 3
    assert 0 < eps <= Fraction(1, 8)
    assert Fraction(1, 3) <= delta < Fraction(1, 2)
    return eps, delta


def lower_bound_exponents(eps: Fraction) -> tuple[Fraction, Fraction]:
    """Exponents of the two error terms below the leading linear term."""
    eps = Fraction(eps)
    if not (0 < eps < Fraction(1, 4)):
        raise ValueError("eps must lie in (0, 1/4)")
    return 1 - 2 * eps, Fraction(1, 2) + 2 * eps


def upper_bound_exponents(delta: Fraction) -> tuple[Fraction, ...]:
    """Exponents of the five error terms of the upper bound."""
    delta = Fraction(delta)
    if not (Fraction(1, 4) < delta < Fraction(1, 2)):
        raise ValueError("delta must lie in (1/4, 1/2)")
    return (
        2 * delta,
        2 - 4 * delta,
        1 - delta,
        Fraction(3, 2) - 3 * delta,
        2 - 6 * delta,
    )


# ---------------------------------------------------------------------------
# bound right-hand sides
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundParams:
    """Constants entering the two-sided bound.

    c1_sq = sup|B| + sup|grad B|^2 and c2_sq = c1_sq + sup|hess B|^2 are the
    squared control constants of the field and its derivatives.
    """

    C: float
    sup_gradB: float = 0.0
    c1_sq: float = 1.0
    c2_sq: float = 1.0


def lower_bound_rhs(q: float, params: BoundParams, eps: Fraction) -> float:
    """theta0*q - C*(q^(1-2eps) + (1 + sup|grad B|) q^(1/2+2eps))."""
    e1, e2 = lower_bound_exponents(eps)
    return THETA0 * q - params.C * (
        q ** float(e1) + (1.0 + params.sup_gradB) * q ** float(e2)
    )


def upper_bound_rhs(
    q: float, params: BoundParams, delta: Fraction, cross_sign: int = 1
) -> float:
    """theta0*q plus the five-term error budget of the upper bound.

    cross_sign switches the sign of the q^(2 delta) cutoff term; +1 is the
    conservative default.
    """
    if cross_sign not in (-1, 1):
        raise ValueError("cross_sign must be +-1")
    e = upper_bound_exponents(delta)
    c1 = np.sqrt(params.c1_sq)
    c2 = np.sqrt(params.c2_sq)
    terms = (
        cross_sign * q ** float(e[0])
        + params.c1_sq * q ** float(e[1])
        + c1 * q ** float(e[2])
        + c2 * q ** float(e[3])
        + params.c2_sq * q ** float(e[4])
    )
    return THETA0 * q + params.C * terms


@dataclass(frozen=True)
class BoundReport:
    q: float
    lower: float
    upper: float
    eps: Fraction
    delta: Fraction
    params: BoundParams


def bound_report(
    q: float, params: BoundParams, x: Fraction = Fraction(0)
) -> BoundReport:
    eps, delta = choose_exponents(x)
    return BoundReport(
        q=q,
        lower=lower_bound_rhs(q, params, eps),
        upper=upper_bound_rhs(q, params, delta),
        eps=eps,
        delta=delta,
        params=params,
    )


def params_from_field(field_spec: FieldSpec, box, C: float = 1.0) -> BoundParams:
    """Fill the field-dependent constants by sampling on a box."""
    rep = seminorms(field_spec, box)
    return BoundParams(
        C=C, sup_gradB=rep.sup_gradB, c1_sq=rep.c1_norm_sq, c2_sq=rep.c2_norm_sq
    )


# ---------------------------------------------------------------------------
# quasimodes (certified upper bounds via Rayleigh quotients)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuasimodeReport:
    vector: np.ndarray
    certificate: float
    mode: str
    extras: dict = field(default_factory=dict)


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _cutoff(s):
    """C^2 plateau cutoff: 1 on s <= 1/2, 0 on s >= 1."""
    return 1.0 - _smoothstep(2.0 * np.asarray(s, dtype=float) - 1.0)


def _profile_interp(t):
    """Half-line ground state at the minimizing frequency, interpolated."""
    ref = degennes.reference_minimum()
    prof = ref.u0.ground_state
    return np.interp(t, ref.disc.nodes, prof, left=prof[0], right=0.0)


def _band_quasimode_disk(grid: Grid, q: float) -> np.ndarray:
    dom = grid.dom
    c = np.asarray(dom._c, dtype=float)
    radius = dom.radius
    rel = grid.coords - c
    rho = np.linalg.norm(rel, axis=-1)
    theta = np.arctan2(rel[:, 1], rel[:, 0])
    m = int(np.round(q * radius**2 / 2.0 + XI0 * np.sqrt(q) * radius))
    t = np.sqrt(q) * (radius - rho)
    u = _profile_interp(t) * np.exp(1j * m * theta)
    u *= _cutoff(1.2 * (radius - rho) / radius)  # kill the coordinate singularity
    return u


def _band_quasimode_ball(
    grid: Grid, q: float, latitude_scale: float
) -> np.ndarray:
    dom = grid.dom
    c = np.asarray(dom._c, dtype=float)
    radius = dom.radius
    rel = grid.coords - c
    rho_c = np.linalg.norm(rel[:, :2], axis=-1)
    phi = np.arctan2(rel[:, 1], rel[:, 0])
    r = np.linalg.norm(rel, axis=-1)
    beta = np.arcsin(np.clip(rel[:, 2] / np.maximum(r, 1e-300), -1.0, 1.0))
    m = int(np.round(q * radius**2 / 2.0 + XI0 * np.sqrt(q) * radius))
    t = np.sqrt(q) * (radius - r)
    u = _profile_interp(t) * np.exp(1j * m * phi)
    u = u * np.exp(-latitude_scale * np.sqrt(q) * (radius * beta) ** 2 / 2.0)
    u *= _cutoff(1.2 * (radius - rho_c) / radius)
    return u


def _chart_coords_disk(dom: Disk2D, frame, pts: np.ndarray):
    c = np.asarray(dom._c, dtype=float)
    rel = pts - c
    rho = np.linalg.norm(rel, axis=-1)
    v0 = np.asarray(frame.point, dtype=float) - c
    th0 = np.arctan2(v0[1], v0[0])
    th = np.arctan2(rel[:, 1], rel[:, 0])
    dth = np.angle(np.exp(1j * (th - th0)))
    y_t = dom.radius * dth  # arc length along the boundary
    y3 = dom.radius - rho
    return y_t, y3


def _chart_coords_ball(dom: Ball, frame, pts: np.ndarray):
    c = np.asarray(dom._c, dtype=float)
    rel = pts - c
    r = np.linalg.norm(rel, axis=-1)
    w = rel / np.maximum(r, 1e-300)[:, None]
    e = (np.asarray(frame.point, dtype=float) - c) / dom.radius
    proj = np.maximum(w @ e, 1e-6)  # hemisphere guard; cutoffs kill the rest
    y1 = dom.radius * (w @ frame.t1) / proj
    y2 = dom.radius * (w @ frame.t2) / proj
    y3 = dom.radius - r
    return y1, y2, y3


def _patch_quasimode(
    grid: Grid, field_spec: FieldSpec, q: float, delta: float,
    cutoff_scale: float = 4.0, orientation: int = 1,
) -> np.ndarray:
    """Boundary-patch trial state: transverse half-line profile, tangential
    oscillation at the minimizing frequency, plateau cutoffs of linear size
    ~ q^(-delta), anchored at a point where the field is tangent."""
    dom = grid.dom
    frame = find_tangent_point(dom, field_spec)
    qd = q**delta
    if grid.dim == 2:
        y_t, y3 = _chart_coords_disk(dom, frame, grid.coords)
        rho_tan = np.abs(y_t)
    else:
        y1, y2, y3 = _chart_coords_ball(dom, frame, grid.coords)
        # tangential oscillation runs along t2 (perpendicular to the field)
        y_t = y2
        rho_tan = np.hypot(y1, y2)
    amp = q ** (0.25 + delta) * _profile_interp(np.sqrt(q) * y3)
    amp = amp * _cutoff(cutoff_scale * qd * np.abs(y3))
    amp = amp * _cutoff(cutoff_scale * qd * rho_tan)
    # align the trial state's local gauge with the operator's gauge
    phase = np.exp(1j * q * _gauge_alignment(grid, field_spec, frame, dom))
    return amp * np.exp(1j * orientation * XI0 * np.sqrt(q) * y_t) * phase


def _gauge_alignment(grid: Grid, field_spec: FieldSpec, frame, dom: Domain):
    """Scalar S with grad S ~ A - A_model on the patch, by radial integration
    from the anchor point; A_model = -d(x) grad(y_t) is the model potential
    the patch state is built for."""
    x0 = np.asarray(frame.point, dtype=float)
    pts = grid.coords
    nodes, weights = np.polynomial.legendre.leggauss(12)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    diff = pts - x0
    s = np.zeros(len(pts))
    for t, w in zip(nodes, weights):
        x = x0 + t * diff
        a = _planar_potential(field_spec, x, grid.dim)
        am = _model_potential(dom, frame, x, grid.dim)
        s += w * np.sum((a - am) * diff, axis=-1)
    return s


def _planar_potential(field_spec: FieldSpec, pts, dim):
    if dim == 3:
        return field_spec.potential(pts)
    p3 = np.zeros(pts.shape[:-1] + (3,))
    p3[..., :2] = pts
    return field_spec.potential(p3)[..., :2]


def _model_potential(dom: Domain, frame, pts, dim):
    """-d(x) grad(y_t): unit-intensity potential adapted to the boundary."""
    c = np.asarray(dom._c, dtype=float)
    rel = pts - c
    rho = np.linalg.norm(rel, axis=-1)
    d = dom.radius - rho
    if dim == 2:
        tang = np.stack([-rel[:, 1], rel[:, 0]], axis=-1) / np.maximum(rho, 1e-300)[:, None]
        grad_yt = dom.radius * tang / np.maximum(rho, 1e-300)[:, None]
        return -d[:, None] * grad_yt
    r = np.maximum(rho, 1e-300)
    w = rel / r[:, None]
    e = (np.asarray(frame.point, dtype=float) - c) / dom.radius
    proj = np.maximum(w @ e, 1e-6)
    # y2 = R (w . t2) / (w . e); gradient via the chain rule on w = rel/r
    t2 = frame.t2
    grad_w = (np.eye(3)[None, :, :] - w[:, :, None] * w[:, None, :]) / r[:, None, None]
    dy2 = dom.radius * (
        grad_w @ t2 / proj[:, None]
        - (w @ t2 / proj**2)[:, None] * (grad_w @ e)
    )
    return -d[:, None] * dy2


def build_quasimode(
    op: DiscreteMagneticOperator,
    field_spec: FieldSpec | None = None,
    mode: str = "band",
    delta: float = 1.0 / 3.0,
    cutoff_scale: float = 4.0,
    latitude_scales=(0.5, 0.75, 1.1, 1.6, 2.4),
) -> QuasimodeReport:
    """Trial state on the operator's grid and its Rayleigh-quotient
    certificate (always a true upper bound for the lowest eigenvalue).

    'band' wraps the boundary-layer profile all the way around the boundary
    with an integer winding number (uniform field, symmetric gauge about the
    domain center); 'patch' localizes near a single tangency point of a
    general field, with cutoffs of size ~ q^(-delta).
    """
    grid, q = op.grid, op.q
    dom = grid.dom
    if mode == "band":
        if isinstance(dom, Disk2D):
            u = _band_quasimode_disk(grid, q)
            best = (rayleigh(op, u), u, {})
        elif isinstance(dom, Ball):
            best = None
            for a in latitude_scales:
                u = _band_quasimode_ball(grid, q, a)
                val = rayleigh(op, u)
                if best is None or val < best[0]:
                    best = (val, u, {"latitude_scale": a})
            assert best is not None
        else:
            raise TypeError("band mode needs a disk or ball domain")
        val, u, extras = best
        return QuasimodeReport(vector=u, certificate=val, mode=mode, extras=extras)
    if mode == "patch":
        if field_spec is None:
            raise ValueError("patch mode needs the field")
        best = None
        # the tangential orientation is fixed only up to a sign; try both
        for orient in (1, -1):
            u = _patch_quasimode(
                grid, field_spec, q, delta, cutoff_scale=cutoff_scale,
                orientation=orient,
            )
            val = rayleigh(op, u)
            if best is None or val < best[0]:
                best = (val, u, {"delta": delta, "orientation": orient})
        val, u, extras = best
        return QuasimodeReport(vector=u, certificate=val, mode=mode, extras=extras)
    raise ValueError(f"unknown quasimode mode {mode!r}")


def certificate_scan(
    dom: Domain, qs, h_of_q, field_spec: FieldSpec | None = None, mode: str = "band"
):
    """Certificates and eigenvalues across field strengths; returns a list of
    dicts with q, eigenvalue, certificate."""
    out = []
    for q in qs:
        grid = build_grid(dom, h_of_q(q))
        fs = field_spec if field_spec is not None else linear_potential((0, 0, 1.0))
        op = assemble(dom, fs, q, grid=grid)
        res = lowest_eigenpair(op)
        rep = build_quasimode(op, field_spec=fs, mode=mode)
        out.append(
            {"q": float(q), "eigenvalue": res.value, "certificate": rep.certificate}
        )
    return out


# ---------------------------------------------------------------------------
# rescaling identity
# ---------------------------------------------------------------------------

class _ScaledPotential:
    """A_R(y) = A(x0 + R (y - x0)) / R, the substitution that maps the
    problem on the dilated domain back to the unit-size domain."""

    def __init__(self, base: FieldSpec, R: float, x0=np.zeros(3)):
        self.base = base
        self.R = float(R)
        self.x0 = np.asarray(x0, dtype=float)

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return self.base.potential(self.x0 + self.R * (x - self.x0)) / self.R

    def field(self, x):
        x = np.asarray(x, dtype=float)
        return self.base.field(self.x0 + self.R * (x - self.x0))


def rescaling_gap(
    dom: Domain, field_spec: FieldSpec, q: float, R: float, h: float
) -> dict:
    """Relative gap between the eigenvalue on the dilated domain and the
    exactly rescaled eigenvalue on the original domain, on matched grids."""
    from magspec.domains import scale_domain

    x0 = np.asarray(getattr(dom, "_c"), dtype=float)
    x0_full = np.zeros(3)
    x0_full[: dom.dim] = x0
    big = scale_domain(dom, R, x0=x0)
    grid_small = build_grid(dom, h)
    # dilate the small grid's lattice in place so the node sets correspond
    # exactly; rebuilding from the scaled bounding box can flip membership of
    # near-boundary nodes through rounding
    grid_big = Grid(
        dom=big,
        h=R * h,
        origin=x0 + R * (grid_small.origin - x0),
        shape=grid_small.shape,
        index=grid_small.index,
        coords=x0[None, :] + R * (grid_small.coords - x0[None, :]),
    )
    op_big = assemble(big, field_spec, q, grid=grid_big)
    op_small = assemble(
        dom, _ScaledPotential(field_spec, R, x0=x0_full), q * R**2, grid=grid_small
    )
    lam_big = lowest_eigenpair(op_big).value
    lam_small = lowest_eigenpair(op_small).value
    pred = lam_small / R**2
    gap = abs(lam_big - pred) / max(abs(lam_big), 1e-300)
    return {"R": R, "eigenvalue": lam_big, "rescaled": pred, "gap": gap}


# ---------------------------------------------------------------------------
# rotation scan for the helical family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotationScanResult:
    mu_values: np.ndarray
    mu_star: float
    intensity: float  # planar field intensity scale q*tau
    rotations: int


def helical_mu_star(
    q: float,
    tau: float,
    n_rotations: int = 16,
    radius: float = 1.0,
    h: float | None = None,
) -> RotationScanResult:
    """Minimum ground energy over field orientations for the helical family.

    For each rotation the disk is placed in the plane orthogonal to the
    field at the disk center, and the planar problem uses the in-plane
    potential components; the effective planar intensity is q*tau at the
    center and decays with the twist away from it.
    """
    if n_rotations < 1:
        raise ValueError("need at least one rotation")
    intensity = q * tau
    if h is None:
        h = 0.35 / np.sqrt(max(intensity, 1.0))
    dom = Disk2D(radius=radius)
    grid = build_grid(dom, h)
    mus = []
    for rot in fibonacci_rotations(n_rotations):
        # scaling identity: intensity-1 field n/tau at effective coupling q*tau
        fs = helical(tau, rot, normalized=True)
        b0 = fs.field(np.zeros(3))
        m = b0 / np.linalg.norm(b0)
        p1 = np.cross(m, [0.0, 0.0, 1.0])
        if np.linalg.norm(p1) < 1e-8:
            p1 = np.cross(m, [0.0, 1.0, 0.0])
        p1 /= np.linalg.norm(p1)
        p2 = np.cross(m, p1)
        section = _SectionPotential(fs, p1, p2)
        op = assemble(dom, section, intensity, grid=grid)
        mus.append(lowest_eigenpair(op).value)
    mus = np.asarray(mus)
    return RotationScanResult(
        mu_values=mus,
        mu_star=float(np.min(mus)),
        intensity=intensity,
        rotations=n_rotations,
    )


class _SectionPotential:
    """Planar restriction of a 3D potential to the span of (p1, p2).

    The constant part of the in-plane potential is removed (a linear gauge
    shift, exactly invariant on the lattice) so link phases stay small even
    when the 3D potential has a large gauge offset.
    """

    def __init__(self, base: FieldSpec, p1, p2):
        self.base = base
        self.p1 = np.asarray(p1, dtype=float)
        self.p2 = np.asarray(p2, dtype=float)
        a0 = np.asarray(base.potential(np.zeros(3)), dtype=float)
        self.a0_plane = np.array([a0 @ self.p1, a0 @ self.p2])

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        pts = x[..., :1] * self.p1 + x[..., 1:2] * self.p2
        a = self.base.potential(pts)
        return np.stack([a @ self.p1, a @ self.p2], axis=-1) - self.a0_plane

    def field(self, x):
        x = np.asarray(x, dtype=float)
        pts = x[..., :1] * self.p1 + x[..., 1:2] * self.p2
        b = self.base.field(pts)
        n = np.cross(self.p1, self.p2)
        return b @ n  # planar scalar curl
