import numpy as np
import pytest

from magspec.degennes import (
    BracketError,
    DiscretizationTooCoarseError,
    HalfLineDiscretization,
    ground_state_tail,
    minimize_mu,
    mu_of_xi,
    reference_minimum,
)

COARSE = HalfLineDiscretization(truncation=12.0, step=4e-3)


def test_mu_at_zero_is_full_line_oscillator():
    # even reflection maps the Neumann problem onto -u'' + t^2 u on R
    p = mu_of_xi(0.0, COARSE)
    assert p.mu == pytest.approx(1.0, abs=5 * COARSE.step**2)


def test_mu_dominated_by_shifted_well():
    # (t+xi)^2 >= xi^2 pointwise for xi, t >= 0
    assert mu_of_xi(2.0, COARSE).mu >= 4.0


def test_mu_near_minimizer_matches_oracle():
    # frozen oracle: dense tridiagonal solve, T=20, h=1e-3, Richardson h, h/2
    p = mu_of_xi(-0.76818, HalfLineDiscretization(step=1e-3))
    assert p.mu == pytest.approx(0.5901061, abs=1e-3)


def test_mu_lower_bounded_by_xi_squared_for_positive_xi():
    for xi in (0.0, 0.5, 1.0, 1.5, 2.0):
        assert mu_of_xi(xi, COARSE).mu >= xi**2


def test_ground_state_positive_and_normalized():
    p = mu_of_xi(-0.7, COARSE)
    assert p.ground_state.min() > 0
    w = COARSE.quad_weights
    assert np.sum(w * p.ground_state**2) == pytest.approx(1.0, abs=1e-12)


def test_richardson_second_order_convergence():
    for xi in (-1.2, -0.7, 0.4):
        mus = [
            mu_of_xi(xi, HalfLineDiscretization(truncation=12.0, step=s)).mu
            for s in (8e-3, 4e-3, 2e-3)
        ]
        assert abs(mus[0] - mus[1]) <= 4 * abs(mus[1] - mus[2]) * (1 + 1e-4) + 1e-12


def test_truncation_converged():
    for xi in (-2.0, -0.7, 2.0):
        a = mu_of_xi(xi, HalfLineDiscretization(truncation=10.0, step=2e-3)).mu
        b = mu_of_xi(xi, HalfLineDiscretization(truncation=20.0, step=2e-3)).mu
        assert abs(a - b) <= 1e-10


def test_xi_outside_truncation_rejected():
    with pytest.raises(ValueError):
        mu_of_xi(8.0, COARSE)


def test_coarse_gap_certification_error():
    # a very coarse grid cannot certify the spectral gap
    with pytest.raises((DiscretizationTooCoarseError, UserWarning)):
        with pytest.warns(UserWarning):
            bad = HalfLineDiscretization(truncation=10.0, step=0.9)
            mu_of_xi(0.0, bad)


def test_minimize_mu_oracle_anchors():
    m = minimize_mu(HalfLineDiscretization(truncation=15.0, step=2e-3), tol_xi=1e-6)
    assert m.xi0 == pytest.approx(-0.7681836, abs=1e-4)
    assert m.theta0 == pytest.approx(0.5901061, abs=1e-5)
    assert m.bracket[0] < m.xi0 < m.bracket[1]
    # stationarity identity Theta0 = xi0^2, verified (not assumed) by the oracle
    assert abs(m.theta0 - m.xi0**2) <= 1e-5


def test_minimum_is_a_minimum():
    m = reference_minimum()
    for dx in (-0.1, 0.1):
        assert mu_of_xi(m.xi0 + dx, m.disc).mu > m.theta0


def test_theta0_improves_on_bulk():
    m = reference_minimum()
    assert m.theta0 < 1.0


def test_bad_bracket_raises():
    with pytest.raises(BracketError):
        minimize_mu(COARSE, tol_xi=1e-4, bracket=(0.5, 2.0))


def test_tail_mass_trivial_ends():
    p = mu_of_xi(-0.76818, COARSE)
    assert ground_state_tail(p, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert ground_state_tail(p, COARSE.truncation) == 0.0


def test_tail_mass_at_minimizer():
    # oracle value: 4.7e-10 at t_from=5 for the dense run
    m = reference_minimum()
    assert ground_state_tail(m.u0, 5.0) <= 1e-8


def test_tail_mass_monotone():
    p = mu_of_xi(-0.76818, COARSE)
    masses = [ground_state_tail(p, t) for t in (0.0, 1.0, 2.0, 4.0, 8.0)]
    assert all(a >= b for a, b in zip(masses, masses[1:]))
