import numpy as np
import pytest

from magspec.domains import Ball, Disk2D, build_grid
from magspec.fields import GaugeShiftedField, Poly3, linear_potential
from magspec.magop import (
    UnderResolvedGridError,
    assemble,
    bump_profile,
    grid_links,
    link_phases,
    lowest_eigenpair,
    make_partition,
    rayleigh,
    verify_ims,
)

RNG = np.random.default_rng(23)

# lowest Dirichlet / second Neumann Laplacian eigenvalues of the unit disk
_J01 = 2.404825557695773
_P11 = 1.841183781340659


def test_matrix_exactly_hermitian():
    op = assemble(Disk2D(radius=1.0), linear_potential((0, 0, 1.0)), q=10.0, h=0.05)
    diff = op.matrix - op.matrix.getH()
    assert diff.nnz == 0 or np.max(np.abs(diff.data)) == 0.0


def test_neumann_zero_field_kernel():
    # q = 0 Neumann: constants are exact null vectors of the graph Laplacian
    op = assemble(Disk2D(radius=1.0), linear_potential((0, 0, 1.0)), q=0.0, h=0.05)
    ones = np.ones(op.n, dtype=complex)
    assert np.max(np.abs(op.matrix @ ones)) < 1e-10
    res = lowest_eigenpair(op)
    assert res.value == pytest.approx(0.0, abs=1e-9)
    assert res.converged


def test_dirichlet_disk_laplacian_oracle():
    # oracle: lowest Dirichlet eigenvalue of the unit disk is j01^2
    op = assemble(Disk2D(radius=1.0), linear_potential((0, 0, 1.0)), q=0.0,
                  bc="dirichlet", h=0.01)
    res = lowest_eigenpair(op)
    assert res.value == pytest.approx(_J01**2, rel=2e-2)


def test_neumann_disk_second_eigenvalue_oracle():
    # oracle: second Neumann eigenvalue of the unit disk is p'11^2
    op = assemble(Disk2D(radius=1.0), linear_potential((0, 0, 1.0)), q=0.0, h=0.01)
    res = lowest_eigenpair(op)
    assert res.value_next == pytest.approx(_P11**2, rel=5e-2)


def test_link_phase_linear_field_closed_form():
    # A = (-x2/2, x1/2): along an x1-edge, int A.dl = -x2 h / 2
    g = build_grid(Disk2D(radius=1.0), 0.1)
    q = 3.0
    theta = link_phases(g, linear_potential((0, 0, 1.0)), q)
    (ia, _), _ = grid_links(g)
    mid2 = g.coords[ia][:, 1]  # x2 constant along the edge
    assert np.allclose(theta[0], -q * g.h * mid2 / 2.0, atol=1e-13)


def test_plaquette_flux_is_q_b_h_squared():
    # Stokes: the oriented phase sum around a grid cell equals q B h^2
    g = build_grid(Disk2D(radius=1.0), 0.1)
    q = 7.0
    a = linear_potential((0, 0, 1.0))
    th = link_phases(g, a, q)
    links = grid_links(g)
    ph = {}
    for k in range(2):
        ia, ib = links[k]
        for i, j, t in zip(ia, ib, th[k]):
            ph[(i, j)] = t
    idx = g.index
    done = 0
    for i in range(idx.shape[0] - 1):
        for j in range(idx.shape[1] - 1):
            c = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            if min(c) < 0:
                continue
            flux = ph[(c[0], c[1])] + ph[(c[1], c[2])] - ph[(c[3], c[2])] - ph[(c[0], c[3])]
            assert flux == pytest.approx(q * g.h**2, abs=1e-12)
            done += 1
            if done > 50:
                return
    assert done > 0


def test_exact_gauge_invariance_polynomial_gauge():
    dom = Disk2D(radius=1.0)
    base = linear_potential((0, 0, 1.0))
    phi = Poly3({(1, 1, 0): 0.7, (2, 0, 0): -0.4, (0, 3, 0): 0.2, (1, 0, 0): 1.3})
    shifted = GaugeShiftedField(base, phi)
    q = 25.0
    grid = build_grid(dom, 0.06)
    e0 = lowest_eigenpair(assemble(dom, base, q, grid=grid)).value
    e1 = lowest_eigenpair(assemble(dom, shifted, q, grid=grid)).value
    assert abs(e0 - e1) <= 1e-10 * abs(e0)


def test_dirichlet_dominates_neumann():
    dom = Disk2D(radius=1.0)
    a = linear_potential((0, 0, 1.0))
    grid = build_grid(dom, 0.05)
    en = lowest_eigenpair(assemble(dom, a, 16.0, grid=grid)).value
    ed = lowest_eigenpair(assemble(dom, a, 16.0, bc="dirichlet", grid=grid)).value
    assert ed > en


def test_rayleigh_matches_eigenvalue():
    op = assemble(Disk2D(radius=1.0), linear_potential((0, 0, 1.0)), q=9.0, h=0.05)
    res = lowest_eigenpair(op)
    assert rayleigh(op, res.vector) == pytest.approx(res.value, rel=1e-10)
    assert res.residual < 1e-6


def test_lobpcg_agrees_with_shift_invert():
    op = assemble(Disk2D(radius=1.0), linear_potential((0, 0, 1.0)), q=9.0, h=0.08)
    a = lowest_eigenpair(op)
    b = lowest_eigenpair(op, method="lobpcg", tol=1e-7)
    assert b.value == pytest.approx(a.value, rel=1e-5)


def test_ball_3d_small_assembly_runs():
    op = assemble(Ball(radius=1.0), linear_potential((0, 0, 1.0)), q=4.0, h=0.2)
    res = lowest_eigenpair(op, tol=1e-7)
    assert res.converged
    assert 0.0 < res.value < 4.0  # below the field strength q|B|


def test_under_resolved_grid_rejected():
    with pytest.raises(UnderResolvedGridError):
        assemble(Disk2D(radius=1.0), linear_potential((0, 0, 1.0)), q=500.0, h=0.1)


def test_resolution_warning():
    with pytest.warns(UserWarning):
        assemble(Disk2D(radius=1.0), linear_potential((0, 0, 1.0)), q=150.0, h=0.05)


def test_bump_profile_plateau_and_support():
    assert bump_profile(0.0) == 1.0
    assert bump_profile(0.5) == 1.0
    assert bump_profile(1.0) == 0.0
    assert bump_profile(1.7) == 0.0
    assert 0.0 < bump_profile(0.75) < 1.0


def test_partition_sums_to_one():
    dom = Disk2D(radius=1.0)
    grid = build_grid(dom, 0.05)
    part = make_partition(dom, 0.5, grid)
    total = np.sum(part.weights**2, axis=0)
    assert np.allclose(total, 1.0, atol=1e-12)
    assert part.grad_constant < 200.0


def test_partition_single_ball_is_constant():
    dom = Disk2D(radius=0.5)
    grid = build_grid(dom, 0.04)
    part = make_partition(dom, 1.4, grid)
    assert len(part.centers) == 1
    assert np.allclose(part.weights[0], 1.0)
    assert part.grad_constant == pytest.approx(0.0, abs=1e-12)


def test_partition_radius_guards():
    dom = Disk2D(radius=1.0)
    grid = build_grid(dom, 0.05)
    with pytest.raises(ValueError):
        make_partition(dom, 0.1, grid)
    with pytest.raises(ValueError):
        make_partition(dom, 10.0, grid)


def _smooth_state(grid, q):
    x = grid.coords
    return np.exp(-2.0 * np.sum(x**2, axis=-1)) * np.exp(1j * np.sqrt(q) * x[:, 0])


def test_ims_identity_small_gap_and_refines():
    dom = Disk2D(radius=1.0)
    a = linear_potential((0, 0, 1.0))
    q = 9.0
    gaps = []
    for h in (0.04, 0.02):
        grid = build_grid(dom, h)
        op = assemble(dom, a, q, grid=grid)
        part = make_partition(dom, 0.5, grid)
        u = _smooth_state(grid, q)
        lhs, rhs, gap = verify_ims(op, part, u)
        nrm2 = float(np.real(np.vdot(u, u)))
        assert gap / nrm2 < 0.1 * part.grad_constant / 0.5**2
        gaps.append(gap / nrm2)
    assert gaps[1] < 0.7 * gaps[0]


def test_ims_trivial_partition_exact():
    dom = Disk2D(radius=0.5)
    grid = build_grid(dom, 0.04)
    op = assemble(dom, linear_potential((0, 0, 1.0)), 9.0, grid=grid)
    part = make_partition(dom, 1.4, grid)
    u = _smooth_state(grid, 9.0)
    lhs, rhs, gap = verify_ims(op, part, u)
    assert gap <= 1e-10 * abs(lhs)
