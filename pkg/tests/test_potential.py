import math

import numpy as np
import pytest

from kramers_spde import (FourierState, InvalidPotential, LocalPotential, NEUMANN,
                          PERIODIC, check_assumptions, critical_points, energy_V,
                          eval_U, grad_V)
from kramers_spde.potential import energy_lower_bound_constants, h1_norm_squared


def test_eval_quartic_values(pot):
    assert eval_U(pot, 0, 1.0) == pytest.approx(-0.25, abs=0)
    assert eval_U(pot, 2, 0.0) == -1.0
    assert eval_U(pot, 4, 0.7) == 6.0
    assert eval_U(pot, 5, 0.3) == 0.0


def test_eval_order_range(pot):
    with pytest.raises(ValueError):
        pot.derivative(0.0, 6)


def test_critical_points_quartic(pot):
    assert critical_points(pot) == (-1.0, 0.0, 1.0)


def test_critical_points_asymmetric_match_root_oracle():
    pot = LocalPotential.from_coefficients([0, 0, -0.5, 0.1, 0.25])
    # independent oracle: numpy root finder on U' = u^3 + 0.3 u^2 - u
    roots = np.sort(np.roots([1.0, 0.3, -1.0, 0.0]))
    assert pot.u_minus == pytest.approx(roots[0], rel=1e-12)
    assert pot.u_plus == pytest.approx(roots[2], rel=1e-12)
    assert pot.u_minus != -pot.u_plus
    for r in (pot.u_minus, pot.u_plus):
        assert abs(pot.derivative(r, 1)) <= 1e-12


def test_normalization_reported():
    # unnormalized double well: maximum off origin, curvature != -1
    base = np.polynomial.Polynomial([0, 0, -0.5, 0, 0.25])
    shifted = base(np.polynomial.Polynomial([-0.3, 1.0])) * 2.0 + 5.0
    pot = LocalPotential.from_coefficients(shifted.coef)
    shift, scale = pot.normalization
    assert shift == pytest.approx(0.3, rel=1e-9)
    assert scale == pytest.approx(0.5, rel=1e-9)
    assert pot.derivative(0.0, 0) == 0.0
    assert pot.derivative(0.0, 2) == -1.0
    # the recorded affine change undoes the construction exactly
    assert pot.u_minus == pytest.approx(-1.0, rel=1e-9)


def test_four_well_rejected():
    # U' = u (u^2-1)(u^2-4)(u^2-9) / 10 has 7 real critical points
    dU = np.polynomial.Polynomial([0, -36, 0, 49, 0, -14, 0, 1]) / 10.0
    U = dU.integ()
    with pytest.raises(InvalidPotential):
        LocalPotential.from_coefficients(U.coef)


def test_wrong_curvature_rejected():
    with pytest.raises(InvalidPotential):
        LocalPotential.from_coefficients([0, 0, 0.5, 0, 0.25], normalize=False)
    with pytest.raises(InvalidPotential):  # odd degree
        LocalPotential.from_coefficients([0, 0, -0.5, 0.25])
    with pytest.raises(InvalidPotential):  # negative leading coefficient
        LocalPotential.from_coefficients([0, 0, 0.5, 0, -0.25])


def test_check_assumptions_quartic(pot):
    rep = check_assumptions(pot)
    assert rep.monotone_period_sufficient
    assert rep.period_increasing_at_zero  # 6 > 0
    assert rep.supercritical


def test_check_assumptions_inequality_direct():
    # U''''(0) = -10 < -(5/3) U'''(0)^2 = -5/3 must fail the expansion test;
    # build the report arithmetic directly on a potential with those jets.
    coef = [0.0, 0.0, -0.5, 1.0 / 6.0, -10.0 / 24.0, 0.0, 1.0, 0.0, 0.0]
    # ensure confinement: degree 8 with tiny high-order terms -> normalize off
    coef = np.array(coef)
    pot = LocalPotential.from_coefficients(coef, normalize=False)
    assert pot.derivative(0.0, 3) == pytest.approx(1.0)
    assert pot.derivative(0.0, 4) == pytest.approx(-10.0)
    rep = check_assumptions(pot)
    assert not rep.period_increasing_at_zero
    assert not rep.supercritical


def test_energy_constant_states(pot):
    s = FourierState.constant(-1.0, NEUMANN, 1.0, 3)
    assert energy_V(s, pot) == pytest.approx(-0.25, abs=1e-15)
    z = FourierState.zeros(NEUMANN, 1.0, 3)
    assert energy_V(z, pot) == 0.0


def test_energy_single_mode_vs_dense_trapezoid(pot):
    # oracle: 10^6-point midpoint/trapezoid quadrature of the quartic integrand
    coeffs = np.zeros(4)
    coeffs[1] = 0.3
    s = FourierState(NEUMANN, 1.0, 3, coeffs)
    n = 10**6
    x = (np.arange(n) + 0.5) / n
    u = 0.3 * math.sqrt(2.0) * np.cos(math.pi * x)
    ref = 0.5 * math.pi**2 * 0.09 + np.mean(0.25 * u**4 - 0.5 * u**2)
    assert energy_V(s, pot) == pytest.approx(ref, abs=1e-10)


def test_grad_zero_at_stationary_points(pot):
    for value in (pot.u_minus, 0.0):
        s = FourierState.constant(value, PERIODIC, 2.0, 5)
        assert np.abs(grad_V(s, pot)).max() <= 1e-12


def test_grad_matches_finite_differences(pot, rng):
    # oracle: central finite differences of energy_V, 100 random states
    worst = 0.0
    for _ in range(100):
        bc = NEUMANN if rng.random() < 0.5 else PERIODIC
        d = int(rng.integers(1, 17))
        L = 0.8 + 2.4 * rng.random()
        st = FourierState(bc, L, d, rng.uniform(-2.0, 2.0, bc.n_coeffs(d)))
        g = grad_V(st, pot)
        h = 1e-5
        fd = np.empty_like(g)
        for i in range(len(g)):
            cp = st.coeffs.copy(); cp[i] += h
            cm = st.coeffs.copy(); cm[i] -= h
            fd[i] = (energy_V(st.with_coeffs(cp), pot)
                     - energy_V(st.with_coeffs(cm), pot)) / (2.0 * h)
        worst = max(worst, float(np.abs(g - fd).max() / (1.0 + np.abs(g).max())))
    assert worst <= 1e-5


def test_neumann_reflection_symmetry(pot, rng):
    for _ in range(10):
        d = int(rng.integers(1, 10))
        L = 0.7 + rng.random()
        c = rng.uniform(-1.5, 1.5, d + 1)
        cr = c * (-1.0) ** np.arange(d + 1)
        va = energy_V(FourierState(NEUMANN, L, d, c), pot)
        vb = energy_V(FourierState(NEUMANN, L, d, cr), pot)
        assert abs(va - vb) <= 1e-12 * max(1.0, abs(va))


def test_periodic_translation_invariance(pot, rng):
    d, L = 6, 2.5
    c = rng.uniform(-1.5, 1.5, 2 * d + 1)
    v0 = energy_V(FourierState(PERIODIC, L, d, c), pot)
    for phi in rng.uniform(0.0, L, 10):
        ct = c.copy()
        for k in range(1, d + 1):
            th = 2.0 * math.pi * k * phi / L
            a, b = c[2 * k - 1], c[2 * k]
            ct[2 * k - 1] = math.cos(th) * a + math.sin(th) * b
            ct[2 * k] = -math.sin(th) * a + math.cos(th) * b
        vt = energy_V(FourierState(PERIODIC, L, d, ct), pot)
        assert abs(vt - v0) <= 1e-11 * max(1.0, abs(v0))


def test_energy_lower_bound(pot, rng):
    for bc in (NEUMANN, PERIODIC):
        L = 1.7
        alpha, beta = energy_lower_bound_constants(pot, L, bc)
        for _ in range(100):
            d = int(rng.integers(0, 12))
            st = FourierState(bc, L, d, rng.uniform(-2, 2, bc.n_coeffs(d)))
            assert energy_V(st, pot) >= beta * h1_norm_squared(st) - alpha - 1e-9
