import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdlab.domain import Field, lebesgue_norm
from rdlab.estimates import (
    exponent_table,
    h1_smoothing_fit,
    h1_weight_exponent,
    second_rung_closed_form,
    smoothing_constant,
    smoothing_report_from_states,
    verify_ak_bk,
    verify_lemma23,
)
from rdlab.profiles import eigenmode_mixture, normalized
from rdlab.solver import PairTrajectory, ProblemSpec, SolverConfig, Trajectory


def test_ladder_frozen_values():
    t4 = exponent_table(4.0, 3)
    assert t4.a[0] == 1.0 and t4.b[0] == 1.0
    assert t4.a[1] == pytest.approx(1.5, abs=1e-15)
    assert t4.b[1] == pytest.approx(1.0, abs=1e-15)
    t3 = exponent_table(3.0, 3)
    assert t3.a[1] == pytest.approx(4.0 / 3.0, abs=1e-15)
    assert t3.b[1] == pytest.approx(5.0 / 4.0, abs=1e-15)


def test_ladder_second_rung_closed_form():
    for p in (2.5, 3.0, 4.0, 7.3):
        a2, b2 = second_rung_closed_form(p)
        t = exponent_table(p, 2)
        assert t.a[1] == pytest.approx(a2, abs=1e-14)
        assert t.b[1] == pytest.approx(b2, abs=1e-14)


@given(p=st.floats(min_value=2.0, max_value=10.0, exclude_min=True))
@settings(max_examples=100, deadline=None)
def test_ladder_product_identity(p):
    # p * a_k * b_k == p + 2(k-1), the invariant the recursion is built on
    t = exponent_table(p, 50)
    assert t.product_residuals().max() <= 1e-12


def test_ladder_weights_constant_at_p4():
    t = exponent_table(4.0, 50)
    assert np.max(np.abs(t.b - 1.0)) <= 1e-12


def test_ladder_exponents_increase():
    t = exponent_table(3.0, 20)
    assert np.all(np.diff(t.a) > 0)
    # step size is constant: a_k = 1 + (k-1)(p-2)/p
    ks = np.arange(1, 21)
    assert np.allclose(t.a, 1.0 + (ks - 1) * (3.0 - 2.0) / 3.0, atol=1e-14)


def test_ladder_rejects_bad_arguments():
    with pytest.raises(ValueError):
        exponent_table(2.0)
    with pytest.raises(ValueError):
        exponent_table(4.0, k_max=0)


def test_h1_weight_exponent_values():
    assert h1_weight_exponent(4.0) == pytest.approx(7.0 / 6.0, abs=1e-15)
    # pinned to the second rung: 2(1 + p a2 b2) / (p a2) == 2 r
    for p in (3.0, 4.0, 6.0):
        a2, b2 = second_rung_closed_form(p)
        pinned = 2.0 * (1.0 + p * a2 * b2) / (p * a2)
        assert pinned == pytest.approx(2.0 * h1_weight_exponent(p), abs=1e-13)


def test_exponent_table_accessors():
    t = exponent_table(4.0, 3)
    assert t.k_max == 3
    assert t.pa(1) == 4.0
    assert t.pa(2) == 6.0
    assert t.weight(2) == pytest.approx(1.0)


def test_moment_bound_small_family(dom_small, cubic, cubic_constants, rng):
    problem = ProblemSpec(domain=dom_small, lam=1.0, f=cubic, g=None)
    family = [
        eigenmode_mixture(dom_small, rng, n_modes=4, l2=0.5),
        eigenmode_mixture(dom_small, rng, n_modes=4, l2=1.0),
    ]
    cfg = SolverConfig(dt=1e-3, t_end=0.5, scheme="imex_cn_ab2", record_stride=25)
    rep = verify_lemma23(problem, cubic_constants, eps=0.1, family=family, k_max=2, cfg=cfg)
    assert rep.finite
    assert rep.ks == (1, 2)
    assert rep.exponents[1] == pytest.approx(4.0)
    assert rep.exponents[2] == pytest.approx(6.0)
    for k in rep.ks:
        assert np.isfinite(rep.sup_quotient[k])
        assert rep.sup_quotient[k] > 0
        assert len(rep.sup_per_member[k]) == 2
    # nearest-time lookup returns one moment per member
    m = rep.moment_at(1, 0.1)
    assert m.shape == (2,)
    assert np.all(m > 0)


def test_weighted_quotients_finite(dom_small, cubic, rng):
    from rdlab.solver import solve_pair

    problem = ProblemSpec(domain=dom_small, lam=1.0, f=cubic, g=None)
    base = eigenmode_mixture(dom_small, rng, n_modes=4, l2=1.0)
    diff = Field(dom_small, 1e-3 * rng.standard_normal(dom_small.shape))
    from rdlab.solver import graded_record_steps

    cfg = SolverConfig(
        dt=1e-3, t_end=1.0, scheme="imex_cn_ab2",
        record_times=graded_record_steps(1e-3, 1.0),
    )
    pair = solve_pair(base, diff, problem, cfg)
    table = exponent_table(4.0, 3)
    rep = verify_ak_bk(pair, table)
    assert rep.finite
    assert rep.ks_sup == (1, 2, 3)
    assert rep.ks_integral == (1, 2)
    for k in rep.ks_sup:
        assert np.isfinite(rep.sup_quotient[k]) and rep.sup_quotient[k] >= 0
    for k in rep.ks_integral:
        assert np.isfinite(rep.integral_quotient[k]) and rep.integral_quotient[k] >= 0


def test_weighted_quotients_reject_zero_start(dom_small):
    times = np.array([0.0, 0.5, 1.0])
    vals = np.zeros((3, *dom_small.shape))
    pair = PairTrajectory(
        base=Trajectory(dom_small, times, vals.copy()),
        diff=Trajectory(dom_small, times, vals),
    )
    with pytest.raises(ValueError, match="zero"):
        verify_ak_bk(pair, exponent_table(4.0, 2))


def test_smoothing_report_synthetic_oracle(dom_small):
    # manufactured states with ||d1||_g^g = c * ||d0||_2^2 exactly: the fitted
    # slope must be 1 and the constant must be recovered
    gamma = 4.0
    c = 2.5
    n = 20
    amps = np.geomspace(1e-4, 1.0, n)
    mode = Field.from_modes(dom_small, {1: 1.0})
    base_l2 = lebesgue_norm(mode, 2.0)
    diff0 = amps[:, None] * mode.values[None, :] / base_l2  # ||d0||_2 = amp
    g_norm = lebesgue_norm(mode, gamma)
    targets = (c * amps**2) ** (1.0 / gamma)  # desired L^gamma norms
    diff1 = (targets / g_norm)[:, None] * mode.values[None, :]
    rep = smoothing_report_from_states(dom_small, gamma, diff0, diff1)
    assert rep.c_gamma == pytest.approx(c, rel=1e-10)
    assert rep.slope == pytest.approx(1.0, abs=1e-10)
    assert rep.r_squared == pytest.approx(1.0, abs=1e-12)


def test_smoothing_report_rejects_zero_and_small_gamma(dom_small, rng):
    d0 = rng.standard_normal((3, *dom_small.shape))
    d1 = rng.standard_normal((3, *dom_small.shape))
    with pytest.raises(ValueError):
        smoothing_report_from_states(dom_small, 1.5, d0, d1)
    d0[1] = 0.0
    with pytest.raises(ValueError):
        smoothing_report_from_states(dom_small, 4.0, d0, d1)


def test_smoothing_constant_linear_response_slope(dom_small, cubic, rng):
    # one base, one direction, amplitudes small enough that the difference
    # flow is effectively its linearization: quotient slope is 1
    problem = ProblemSpec(domain=dom_small, lam=1.0, f=cubic, g=None)
    base = eigenmode_mixture(dom_small, rng, n_modes=3, l2=1.0)
    direction = rng.standard_normal(dom_small.shape)
    pairs = [
        (base, normalized(dom_small, direction, amp))
        for amp in np.geomspace(1e-6, 1e-3, 8)
    ]
    cfg = SolverConfig(dt=1e-3, t_end=1.0, scheme="imex_cn_ab2")
    rep = smoothing_constant(2.0, pairs, problem, cfg)
    assert np.isfinite(rep.c_gamma) and rep.c_gamma > 0
    assert rep.slope == pytest.approx(1.0, abs=1e-3)
    # dissipative problem with this margin actually contracts in L^2
    assert rep.c_gamma < 1.0


def test_h1_fit_requires_certified_envelope(dom_small, cubic, rng):
    problem = ProblemSpec(domain=dom_small, lam=1.0, f=cubic, g=None)
    pairs = [
        (eigenmode_mixture(dom_small, rng, n_modes=3, l2=1.0),
         Field(dom_small, 1e-3 * rng.standard_normal(dom_small.shape)))
        for _ in range(3)
    ]
    with pytest.raises(ValueError, match="derivative-growth envelope"):
        h1_smoothing_fit(pairs, problem, p=4.0)


def test_h1_fit_envelope_dominates(dom_small, cubic, rng):
    problem = ProblemSpec(domain=dom_small, lam=1.0, f=cubic, g=None)
    pairs = []
    for amp in np.geomspace(1e-5, 1.0, 12):
        base = eigenmode_mixture(dom_small, rng, n_modes=3, l2=1.0)
        d = normalized(dom_small, rng.standard_normal(dom_small.shape), amp)
        pairs.append((base, d))
    cfg = SolverConfig(dt=1e-3, t_end=1.0, scheme="imex_cn_ab2")
    rep = h1_smoothing_fit(pairs, problem, p=4.0, cfg=cfg, f_add_certified=True)
    assert rep.max_ratio <= 1.0 + 1e-9
    assert rep.c_r > 0 and rep.c >= 0
    assert rep.unit_ball_ok
    assert math.isfinite(rep.slope)
    # measured decay of the gradient is no slower than the small-data power
    assert rep.slope >= rep.small_data_exponent - 0.05
