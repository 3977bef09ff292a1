import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perilotka.analysis import (
    check_E26, check_E27, check_H2, check_thm2, dplusV_bound, existence_bounds, ext_log,
    lyapunov_V, verify_attraction,
)
from perilotka.coefficients import PeriodicCoefficient as PC, hat_mean
from perilotka.dynamics import CoefficientSet, full_field
from perilotka.exceptions import DomainError
from perilotka.integrator import IntegratorConfig, integrate
from perilotka.orbits import find_orbit

from conftest import OMEGA, composite_simpson


def shifted(f, s):
    """``t -> f(t + s)`` as a new trigonometric coefficient."""
    w = 2 * math.pi / f.period
    hs = []
    for h in f.harmonics:
        phi = h.k * w * s
        hs.append((h.k, h.sin * math.cos(phi) - h.cos * math.sin(phi),
                   h.sin * math.sin(phi) + h.cos * math.cos(phi)))
    return PC(f.period, f.mean, hs)


def test_ext_log():
    assert ext_log(0.0) == -math.inf
    assert ext_log(-2.0) == -math.inf
    assert ext_log(math.e) == 1.0


# existence bounds -----------------------------------------------------------

def test_L11_constant_coefficients():
    p = CoefficientSet.constant(OMEGA, a1=3.0, b11=1.5)
    B = existence_bounds(p)
    assert B.L11 == pytest.approx(math.log(2.0), abs=1e-12)
    assert B.H11 == pytest.approx(math.log(2.0) + 2 * 3.0 * OMEGA, abs=1e-12)


def test_constant_bounds_closed_forms():
    c = dict(a1=3.0, a2=2.0, a3=0.5, b11=1.0, b12=0.01, b21=0.001, b22=1.0,
             c1=0.3, c2=0.2, d1=2.0, d2=1.5, alpha=0.001, beta=0.2, gamma=1.0)
    B = existence_bounds(CoefficientSet.constant(OMEGA, **c))
    w = OMEGA
    L11, L21 = math.log(3.0), math.log(2.0)
    H11, H21 = L11 + 6 * w, L21 + 4 * w
    L12 = math.log(3.0 - 0.01 * math.exp(H21) - 0.3)
    L22 = math.log(2.0 - 0.001 * math.exp(H11) - 0.2)
    H12, H22 = L12 - 6 * w, L22 - 4 * w
    L31 = math.log((2.0 * math.exp(H11) + 1.5 * math.exp(H21) - 0.0005) / 0.5)
    L32 = math.log((1.9 * math.exp(H12) + 1.4 * math.exp(H22) - 0.001) / 1.0)
    expected = dict(L11=L11, L21=L21, H11=H11, H21=H21, L12=L12, L22=L22, H12=H12, H22=H22,
                    L31=L31, H31=L31 + w, L32=L32, H32=L32 - w)
    for k, v in expected.items():
        assert getattr(B, k) == pytest.approx(v, abs=1e-12), k


def test_negative_argument_gives_minus_infinity():
    B = existence_bounds(CoefficientSet.constant(OMEGA, b12=5.0))
    assert B.L12 == B.H12 == -math.inf
    assert B.L32 == -math.inf


def test_fig1_bounds(fig1):
    B = existence_bounds(fig1.params)
    assert B.L11 == pytest.approx(math.log(1.5), abs=1e-9)
    assert B.H11 == pytest.approx(math.log(1.5) + 6 * OMEGA, abs=1e-9)
    assert B.L21 == pytest.approx(math.log(1.1), abs=1e-9)
    assert B.L31 == pytest.approx(10.7761057475, abs=1e-8)
    assert B.L12 == B.L22 == B.H12 == B.H22 == B.L32 == B.H32 == -math.inf


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 5), st.floats(0.5, 5), st.floats(0.1, 2), st.floats(-0.4, 0.4))
def test_ladder_identities(a1, a2, a3, amp):
    p = CoefficientSet.constant(OMEGA).replace(
        a1=PC(OMEGA, a1, [(1, amp, 0)]), a2=PC(OMEGA, a2, [(1, 0, amp)]),
        a3=PC(OMEGA, a3, [(1, amp / 5, 0)]), b12=PC.constant(0.01, OMEGA),
        b21=PC.constant(0.01, OMEGA), d1=PC.constant(20.0, OMEGA))
    B = existence_bounds(p)
    w = p.period
    A1, A2, A3 = hat_mean(p.a1), hat_mean(p.a2), hat_mean(p.a3)
    assert B.H11 == B.L11 + 2 * A1 * w
    assert B.H21 == B.L21 + 2 * A2 * w
    assert B.H12 == B.L12 - 2 * A1 * w
    assert B.H22 == B.L22 - 2 * A2 * w
    assert B.H31 == B.L31 + 2 * A3 * w
    assert B.H32 == B.L32 - 2 * A3 * w or (B.H32 == B.L32 == -math.inf)


# existence conditions ---------------------------------------------------------------------------

def test_existence_predator_ceiling_fails_for_tiny_conversion():
    p = CoefficientSet.constant(OMEGA, d1=0.001, d2=0.001, a3=10.0)
    assert check_H2(p)["predator_ceiling"].verdict is False


def test_existence_singular_competition_matrix():
    p = CoefficientSet.constant(OMEGA, b11=1, b12=1, b21=1, b22=1)
    rep = check_H2(p)
    assert rep["b_det_nonzero"].verdict is False
    assert rep.verdict is False


def test_existence_fig1_pinned(fig1):
    rep = check_H2(fig1.params)
    assert rep.verdict is False
    assert rep["b_det_nonzero"].right == pytest.approx(9.994, abs=1e-9)
    assert rep["prey1_floor"].right == pytest.approx(-245.819082, abs=1e-5)
    assert rep["prey2_floor"].right == pytest.approx(-19.7310301, abs=1e-6)
    assert rep["predator_ceiling"].verdict
    assert rep["predator_floor"].verdict is False


def test_report_margin_orientation(fig1):
    for c in check_H2(fig1.params).entries:
        assert c.margin == c.right - c.left
        assert c.verdict == (c.margin > 0)


# boundary coexistence and stability --------------------------------------------------------------------

def test_coexistence_without_competition():
    p = CoefficientSet.constant(OMEGA, b12=0, b21=0)
    assert check_E26(p).verdict


def test_coexistence_strong_competitor():
    p = CoefficientSet.constant(OMEGA, a1=1, b12=3, a2=1, b22=1)
    rep = check_E26(p)
    assert rep["prey1_invades"].left == pytest.approx(3.0, abs=1e-12)
    assert rep["prey1_invades"].verdict is False


def test_coexistence_needs_positive_growth():
    p = CoefficientSet.constant(OMEGA).replace(a2=PC(OMEGA, -0.5, [(1, 1, 0)]))
    with pytest.raises(DomainError, match="species 2"):
        check_E26(p)


def test_coexistence_fig2_against_poincare_oracle(fig2):
    p = fig2.params
    X2 = find_orbit(p, guess=[1.0], mode="logistic-2")
    oracle = composite_simpson(lambda t: p.b12(t) * X2.state_at(t)[:, 1], 0, OMEGA, 4096) / OMEGA
    rep = check_E26(p)
    assert rep.verdict
    assert rep["prey1_invades"].left == pytest.approx(oracle, abs=1e-8)
    assert rep["prey2_invades"].left == pytest.approx(0.248697503, abs=1e-8)


def test_boundary_stability_uncoupled_constants():
    p = CoefficientSet.constant(OMEGA, b12=0, b21=0)
    orbit = find_orbit(p, guess=[0.5, 0.5, 0.0], mode="boundary")
    rep = check_E27(p, orbit, n=64)
    assert rep.data["A12_mean"] == pytest.approx(-1.0, abs=1e-12)
    assert np.allclose(rep.data["A12"], -1.0, atol=1e-12)
    assert rep.verdict


def test_boundary_stability_strong_coupling_constants():
    p = CoefficientSet.constant(OMEGA, a1=3, a2=3, b12=2, b21=2)
    orbit = find_orbit(p, guess=[1.0, 1.0, 0.0], mode="boundary")
    rep = check_E27(p, orbit, n=64)
    assert rep.data["A12_mean"] == pytest.approx(3.0, abs=1e-12)
    assert rep.verdict is False


def test_boundary_stability_fig2_pinned(fig2, fig2_boundary):
    rep = check_E27(fig2.params, fig2_boundary)
    assert rep.verdict
    assert rep.data["A12_mean"] == pytest.approx(-2.95263354, abs=1e-7)


def test_boundary_stability_rejects_full_orbit(fig1, fig1_orbit):
    with pytest.raises(DomainError):
        check_E27(fig1.params, fig1_orbit)


# attraction hypotheses --------------------------------------------------------------------

def test_attraction_hypotheses_b_margin_constants():
    rep = check_thm2(CoefficientSet.constant(OMEGA, b12=2, b22=1), with_a12=False)
    assert rep.margins["b22-b12"] == pytest.approx(-1.0, abs=1e-12)
    assert rep.hypothesis_i is False


def _grid(f, n=1_000_001):
    t = np.linspace(0, OMEGA, n)
    return f(t)


def test_attraction_hypotheses_fig2_against_grid(fig2):
    p = fig2.params
    rep = check_thm2(p, with_a12=False)
    ba3 = _grid(lambda t: p.beta(t) * p.a3(t))
    cd = _grid(lambda t: p.c1(t) + p.c2(t) + p.d1(t) + p.d2(t))
    assert rep.extremes["min beta*a3"] == pytest.approx(ba3.min(), abs=1e-9)
    assert rep.extremes["max c1+c2+d1+d2"] == pytest.approx(cd.max(), abs=1e-9)
    assert rep.extremes["min beta*a3"] == pytest.approx(11.84, abs=1e-6)
    assert rep.extremes["max c1+c2+d1+d2"] == pytest.approx(7.6, abs=1e-6)
    assert rep.hypothesis_i and rep.hypothesis_ii and rep.hypothesis_iii
    assert rep.margins["beta*a3-(c+d)"] >= 4.24
    assert rep.mu1 > 0


def test_attraction_hypotheses_fig1_fails(fig1):
    rep = check_thm2(fig1.params, with_a12=False)
    p = fig1.params
    assert _grid(lambda t: p.beta(t) * p.a3(t)).max() < _grid(
        lambda t: p.c1(t) + p.c2(t) + p.d1(t) + p.d2(t)).min()
    assert not (rep.hypothesis_i or rep.hypothesis_ii or rep.hypothesis_iii)
    assert rep.mu1 < 0


def test_attraction_hypotheses_margins_shift_invariant(fig2):
    p = fig2.params
    base = check_thm2(p, with_a12=False)
    for s in (0.1, 0.37):
        q = CoefficientSet(**{n: shifted(f, s) for n, f in p.items()})
        rep = check_thm2(q, with_a12=False)
        for k, v in base.margins.items():
            assert rep.margins[k] == pytest.approx(v, abs=1e-9)
        assert rep.mu1 == pytest.approx(base.mu1, abs=1e-9)


def test_attraction_hypotheses_includes_A12(fig2, fig2_boundary):
    rep = check_thm2(fig2.params, fig2_boundary)
    assert rep.A12_mean == pytest.approx(-2.95263354, abs=1e-7)


# Lyapunov function --------------------------------------------------------------

def test_V_examples():
    xb = np.array([1.3, 0.8, 0.0])
    assert lyapunov_V([1.3, 0.8, 0.0], xb) == 0.0
    assert lyapunov_V([1.3, 0.8, 0.7], xb) == pytest.approx(0.7, abs=1e-15)
    assert lyapunov_V([math.e * 1.3, 0.8 / math.e, 0.0], xb) == pytest.approx(2.0, abs=1e-14)


def test_V_domain():
    with pytest.raises(DomainError):
        lyapunov_V([0.0, 1.0, 0.0], [1.0, 1.0, 0.0])
    with pytest.raises(DomainError):
        lyapunov_V([1.0, 1.0, -0.1], [1.0, 1.0, 0.0])


def test_V_zero_only_on_orbit(fig2_boundary):
    t = np.linspace(0, OMEGA, 50)
    xb = fig2_boundary.state_at(t)
    assert np.all(lyapunov_V(xb, xb) == 0)
    for d in ([1e-6, 0, 0], [0, -1e-6, 0], [0, 0, 1e-6]):
        assert np.all(lyapunov_V(xb + d, xb) > 0)


def test_dplusV_examples(fig2):
    xb = np.array([1.2, 0.9, 0.0])
    assert dplusV_bound(fig2.params, 0.3, xb, xb) == 0.0
    p = CoefficientSet.constant(OMEGA, b12=0, b22=1, b21=1, b11=1)
    assert dplusV_bound(p, 0.0, [1.2, 1.9, 0.0], xb) == pytest.approx(-1.0, abs=1e-15)


def test_dplusV_dominated_by_mu1(fig2):
    p = fig2.params
    mu1 = check_thm2(p, with_a12=False).mu1
    rng = np.random.default_rng(5)
    n = 10_000
    t = rng.uniform(0, 10, n)
    xb = rng.uniform(0.1, 3, (n, 3))
    xb[:, 2] = 0
    x = np.column_stack([rng.uniform(0.01, 5, n), rng.uniform(0.01, 5, n), rng.uniform(0, 5, n)])
    bound = dplusV_bound(p, t, x, xb)
    assert np.all(bound <= -mu1 * np.abs(x - xb).sum(axis=1) + 1e-12)


# attraction monitor ---------------------------------------------------------------

def test_attraction_on_orbit(fig2, fig2_boundary):
    rep = verify_attraction(fig2.params, fig2_boundary.trajectory, fig2_boundary)
    assert np.max(rep.V) <= 1e-10
    assert np.max(rep.delta) <= 1e-10


def test_attraction_fig1_negative_control(fig1, fig1_boundary):
    cfg = IntegratorConfig(rtol=1e-12, atol=1e-14)
    traj = integrate(lambda t, x: full_field(fig1.params, t, x), 0.0, fig1.initial, 20.0, cfg)
    rep = verify_attraction(fig1.params, traj, fig1_boundary)
    assert rep.monotone is False
    assert rep.terminal_delta > 1.0


def test_attraction_needs_boundary_orbit(fig1, fig1_orbit):
    with pytest.raises(DomainError):
        verify_attraction(fig1.params, fig1_orbit.trajectory, fig1_orbit)


def test_attraction_grid_too_coarse(fig2, fig2_boundary):
    with pytest.raises(DomainError):
        verify_attraction(fig2.params, fig2_boundary.trajectory, fig2_boundary, samples_per_period=5)
