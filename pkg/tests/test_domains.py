import numpy as np
import pytest

from magspec.domains import (
    Ball,
    ChartRadiusError,
    Disk2D,
    Ellipsoid,
    TangentSearchError,
    boundary_chart,
    build_grid,
    domain_from_json,
    find_tangent_point,
    scale_domain,
)
from magspec.fields import linear_potential, pullback_field

RNG = np.random.default_rng(11)


def test_ball_signed_distance():
    b = Ball(radius=1.0)
    assert b.signed_distance(np.zeros(3)) == pytest.approx(1.0)
    assert b.signed_distance(np.array([1.0, 0, 0])) == pytest.approx(0.0, abs=1e-15)
    assert b.signed_distance(np.array([2.0, 0, 0])) == pytest.approx(-1.0)


def test_ellipsoid_center_distance():
    # oracle: dense boundary sampling minimum distance
    e = Ellipsoid(semi_axes=(1.0, 1.0, 2.0))
    assert e.signed_distance(np.zeros(3)) == pytest.approx(1.0, abs=1e-9)
    mesh = e.boundary_mesh(20000)
    for x in RNG.uniform(-0.5, 0.5, size=(8, 3)):
        brute = np.min(np.linalg.norm(mesh - x, axis=-1))
        assert e.signed_distance(x) == pytest.approx(brute, abs=2e-2)


def test_ellipsoid_boundary_distance_zero():
    e = Ellipsoid(semi_axes=(1.0, 1.5, 2.0))
    mesh = e.boundary_mesh(64)
    d = e.signed_distance(mesh)
    assert np.max(np.abs(d)) < 1e-9


def test_distance_is_one_lipschitz():
    e = Ellipsoid(semi_axes=(1.0, 1.3, 2.0))
    xs = RNG.uniform(-1.0, 1.0, size=(50, 3))
    ys = xs + RNG.normal(scale=0.1, size=xs.shape)
    dx, dy = e.signed_distance(xs), e.signed_distance(ys)
    step = np.linalg.norm(xs - ys, axis=-1)
    assert np.all(np.abs(dx - dy) <= step + 1e-9)


def test_eikonal_property_interior():
    e = Ellipsoid(semi_axes=(1.0, 1.2, 1.8))
    h = 1e-6
    for x in RNG.uniform(-0.3, 0.3, size=(10, 3)) + np.array([0.55, 0, 0]):
        if e.signed_distance(x) < 0.05:
            continue
        g = np.array(
            [(e.signed_distance(x + d) - e.signed_distance(x - d)) / (2 * h)
             for d in h * np.eye(3)]
        )
        assert np.linalg.norm(g) == pytest.approx(1.0, abs=1e-5)


def test_normals_unit_and_match_distance_gradient():
    b = Ball(center=(0.2, -0.1, 0.4), radius=1.3)
    p = b.boundary_mesh(32)
    n = b.interior_normal(p)
    assert np.allclose(np.linalg.norm(n, axis=-1), 1.0, atol=1e-12)
    h = 1e-6
    x = p[5] + 0.1 * n[5]
    g = np.array(
        [(b.signed_distance(x + d) - b.signed_distance(x - d)) / (2 * h)
         for d in h * np.eye(3)]
    )
    assert np.allclose(g, n[5], atol=1e-6)


def test_scale_domain_ball():
    b = Ball(radius=1.0)
    assert scale_domain(b, 2.0).radius == pytest.approx(2.0)
    s = scale_domain(b, 3.0, x0=np.array([1.0, 0, 0]))
    # similarity of distances
    for x in RNG.uniform(-0.5, 0.5, size=(10, 3)):
        lhs = s.signed_distance(np.array([1.0, 0, 0]) + 3.0 * (x - np.array([1.0, 0, 0])))
        assert lhs == pytest.approx(3.0 * b.signed_distance(x), abs=1e-12)


def test_scale_domain_volume_ratio():
    b = Ball(radius=1.0)
    s = scale_domain(b, 2.0)
    g1 = build_grid(b, 0.05)
    g2 = build_grid(s, 0.05)
    vol1 = g1.n_nodes * g1.h**3
    vol2 = g2.n_nodes * g2.h**3
    assert vol2 / vol1 == pytest.approx(8.0, rel=0.02)


def test_tangent_point_ball_constant_field():
    frame = find_tangent_point(Ball(radius=1.0), linear_potential((0, 0, 1.0)))
    assert abs(frame.point[2]) < 1e-8
    assert frame.residual <= 1e-8
    assert np.allclose(frame.t1, [0, 0, 1], atol=1e-6)  # t1 parallel to B
    assert abs(frame.normal @ frame.t1) < 1e-9
    assert abs(frame.normal @ frame.t2) < 1e-9


def test_tangent_point_disk_deterministic():
    d = Disk2D(radius=2.0)
    frame = find_tangent_point(d, linear_potential((0, 0, 1.0)))
    assert np.allclose(frame.point, [2.0, 0.0])
    assert np.allclose(frame.normal, [-1.0, 0.0])


def test_tangent_point_ellipsoid():
    # oracle: dense boundary scan of |B . nu|
    e = Ellipsoid(semi_axes=(1.0, 1.0, 2.0))
    frame = find_tangent_point(e, linear_potential((0, 0, 1.0)))
    nu = e.outward_normal(frame.point)
    assert abs(nu[2]) < 1e-8


def test_tangent_point_failure_for_inconsistent_field():
    class Radial:
        def field(self, x):
            x = np.asarray(x, dtype=float)
            return x / np.linalg.norm(x, axis=-1, keepdims=True)

    with pytest.raises(TangentSearchError):
        find_tangent_point(Ball(radius=1.0), Radial())


def test_ball_chart_basics():
    b = Ball(radius=1.0)
    frame = find_tangent_point(b, linear_potential((0, 0, 1.0)))
    chart = boundary_chart(b, frame)
    assert np.allclose(chart.map(np.zeros(3)), frame.point, atol=1e-12)
    assert np.allclose(chart.aligned_jacobian(np.zeros(3)), np.eye(3), atol=1e-12)
    # normal line: Phi(0,0,g) = x0 + g N and d(Phi) = g
    for g in (0.05, 0.2, 0.4):
        p = chart.map(np.array([0.0, 0.0, g]))
        assert np.allclose(p, frame.point + g * frame.normal, atol=1e-12)
        assert b.signed_distance(p) == pytest.approx(g, abs=1e-12)


def test_chart_metric_identity_at_origin_and_growth():
    b = Ball(radius=1.0)
    frame = find_tangent_point(b, linear_potential((0, 0, 1.0)))
    chart = boundary_chart(b, frame)
    j0 = chart.jacobian(np.zeros(3))
    assert np.allclose(j0.T @ j0, np.eye(3), atol=1e-10)
    for r in (0.05, 0.1, 0.2):
        y = np.array([r / 2, r / 2, r / 2])
        j = chart.jacobian(y)
        dev = np.max(np.abs(j.T @ j - np.eye(3)))
        assert dev <= 5.0 * np.linalg.norm(y)  # curvature-bounded growth


def test_chart_jacobian_matches_finite_differences():
    for dom in (Ball(radius=1.2), Ellipsoid(semi_axes=(1.0, 1.1, 1.6))):
        frame = find_tangent_point(dom, linear_potential((0, 0, 1.0)))
        chart = boundary_chart(dom, frame)
        y = np.array([0.03, -0.02, 0.05])
        j = chart.jacobian(y)
        h = 1e-6
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            fd = (chart.map(y + e) - chart.map(y - e)) / (2 * h)
            assert np.allclose(fd, j[:, k], atol=1e-6)


def test_chart_distance_consistency_ellipsoid():
    e = Ellipsoid(semi_axes=(1.0, 1.0, 2.0))
    frame = find_tangent_point(e, linear_potential((0, 0, 1.0)))
    chart = boundary_chart(e, frame)
    y = np.array([0.02, 0.01, 0.08])
    p = chart.map(y)
    assert e.signed_distance(p) == pytest.approx(y[2], abs=1e-8)


def test_chart_radius_guard():
    b = Ball(radius=1.0)
    frame = find_tangent_point(b, linear_potential((0, 0, 1.0)))
    chart = boundary_chart(b, frame)
    with pytest.raises(ChartRadiusError):
        chart.map(np.array([0.6, 0.0, 0.0]))


def test_chart_pullback_of_constant_field():
    # oracle: fields.pullback_field against numeric curl, on the ball chart
    from magspec.fields import PullbackField

    b = Ball(radius=1.0)
    frame = find_tangent_point(b, linear_potential((0, 0, 1.0)))
    chart = boundary_chart(b, frame)
    a = linear_potential((0, 0, 1.0))
    pb = PullbackField(a, chart)
    for y in (np.array([0.02, 0.03, 0.04]), np.array([-0.05, 0.01, 0.1])):
        expected = pullback_field(chart, a.field(chart.map(y)), y)
        assert np.allclose(pb.field(y), expected, atol=1e-6)


def test_grid_interior_only():
    g = build_grid(Disk2D(radius=1.0), 0.05)
    assert np.all(g.dom.signed_distance(g.coords) > 0)
    assert g.n_nodes == pytest.approx(np.pi / 0.05**2, rel=0.02)


def test_grid_empty_interior():
    with pytest.raises(ValueError):
        build_grid(Disk2D(radius=0.01), 0.5)


def test_domain_json_roundtrip():
    d = domain_from_json({"type": "ball", "center": [0, 0, 0], "radius": 1.5})
    assert isinstance(d, Ball) and d.radius == 1.5
    d2 = domain_from_json({"type": "ellipsoid", "semi_axes": [1, 1, 2]})
    assert isinstance(d2, Ellipsoid)
    with pytest.raises(ValueError):
        domain_from_json({"type": "mesh"})
