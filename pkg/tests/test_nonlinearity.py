from fractions import Fraction

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from rdlab.nonlinearity import (
    DissipativityConstants,
    LipschitzGrowthConstants,
    NonlinearitySpec,
    ScanSpec,
    certify_conditions,
    certify_decomposition,
    certify_f_add,
    check_corollary,
    decompose,
    monotonicity_constant_oracle,
)


def test_cubic_evaluation(cubic):
    s = np.array([-2.0, 0.0, 0.5, 3.0])
    assert np.allclose(cubic.evaluate(s), s**3 - s)
    assert np.allclose(cubic.evaluate_derivative(s), 3 * s**2 - 1)
    assert cubic.p == 4.0
    assert cubic.degree == 3


def test_spec_validation():
    with pytest.raises(ValueError):
        NonlinearitySpec(coefficients=())
    with pytest.raises(ValueError):
        NonlinearitySpec(coefficients=(1.0, -2.0))  # leading <= 0
    with pytest.raises(ValueError):
        NonlinearitySpec(coefficients=(0.0, 0.0, 1.0), p=2.0)
    with pytest.raises(ValueError):
        NonlinearitySpec(coefficients=(float("nan"), 1.0))


def test_exact_difference_beats_naive(cubic):
    a, h = 1e8, 1e-8
    # exact value of (a+h)^3 - (a+h) - a^3 + a, computed in rationals
    fa, fh = Fraction(a), Fraction(h)
    exact = (fa + fh) ** 3 - (fa + fh) - fa**3 + fa
    got = cubic.exact_difference(a, h)
    naive = (a + h) ** 3 - (a + h) - (a**3 - a)
    assert abs(got - float(exact)) <= 1e-7 * abs(float(exact))
    assert abs(naive - float(exact)) > 1e5  # catastrophic cancellation


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    h=st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
)
@example(a=2.261399876799103e-126, h=1.0)  # h^3 - h cancels exactly at h = 1
def test_exact_difference_matches_rational_arithmetic(a, h):
    f = NonlinearitySpec(coefficients=(-1.0, 0.0, 1.0))
    fa, fh = Fraction(a), Fraction(h)
    exact = (fa + fh) ** 3 + (fa + fh) * Fraction(-1) - (fa**3 + fa * Fraction(-1))
    got = float(f.exact_difference(a, h))
    err = abs(got - float(exact))
    # the expansion h*(3a^2 - 1) + 3a*h^2 + h^3, term magnitudes summed:
    scale = abs(h) * (3 * a * a + 1) + 3 * abs(a) * h * h + abs(h) ** 3
    assert err <= 1e-13 * scale + 1e-300
    if abs(float(exact)) >= 1e-2 * scale:
        # terms do not cancel against each other: full relative precision
        assert err <= 1e-12 * abs(float(exact))


def test_certification_margins(cubic, cubic_constants):
    rep = certify_conditions(cubic, cubic_constants)
    assert rep.passed
    names = [c.name for c in rep.checks]
    assert names == ["f1", "f2", "f3", "2.4"]
    for c in rep.checks:
        assert c.margin >= -1e-12
        assert c.tail_ok


def test_certification_boundary_equality_is_exact(cubic):
    # alpha = kappa/(p-1) exactly: the compatibility margin must be 0.0, not noise
    c = DissipativityConstants(p=4.0, kappa=3.0, l=1.0, alpha=1.0, beta=1.0, sigma=2.0)
    rep = certify_conditions(cubic, c)
    m = rep.check("2.4")
    assert m.margin == 0.0
    assert m.passed


def test_certification_catches_bad_constants(cubic):
    # kappa far too large: f' = 3s^2 - 1 cannot dominate 10|s|^2 - 1
    bad = DissipativityConstants(p=4.0, kappa=10.0, l=1.0, alpha=0.5, beta=0.5, sigma=2.0)
    rep = certify_conditions(cubic, bad)
    assert not rep.passed
    assert rep.check("f1").margin < -1e-6


def test_decomposition_frozen_constants(cubic, cubic_constants):
    d = decompose(cubic, cubic_constants)
    assert d.f1_scale == 0.25
    assert d.f1_shift == 2.0
    assert d.f1(2.0) == 0.0  # f1(s) = s^3/4 - 2
    assert d.f1(0.0) == -2.0
    assert d.kappa2 == 2.25
    assert d.alpha2 == 0.125
    assert d.l2 == 1.0
    assert d.sigma2 == 2.25
    assert d.beta2 == pytest.approx(2.8811015779522995, rel=1e-12)
    assert d.alpha1 == pytest.approx(0.061875, rel=1e-12)
    assert d.sigma1 == pytest.approx(0.505, rel=1e-12)
    # split reproduces f
    s = np.linspace(-7, 7, 101)
    assert np.allclose(d.f1(s) + d.f2(s), cubic.evaluate(s), atol=1e-12)


def test_decomposition_recertifies(cubic, cubic_constants):
    d = decompose(cubic, cubic_constants)
    rep = certify_decomposition(d)
    assert rep.passed
    assert [c.name for c in rep.checks] == ["f21", "f22", "f23", "f24"]
    for c in rep.checks:
        assert c.margin >= -1e-12


def test_monotonicity_oracle_ranges():
    c1_4, c4_4 = monotonicity_constant_oracle(4.0, samples=200000, seed=0)
    assert 0.245 <= c4_4 <= 0.255
    c1_3, c4_3 = monotonicity_constant_oracle(3.0, samples=200000, seed=0)
    assert 0.49 <= c4_3 <= 0.51
    assert c1_4 >= 1.0 and c1_3 >= 1.0
    # deterministic for a fixed seed
    again = monotonicity_constant_oracle(4.0, samples=200000, seed=0)
    assert again == (c1_4, c4_4)


def test_corollary_no_violations(cubic, cubic_constants, rng):
    d = decompose(cubic, cubic_constants)
    s1 = rng.uniform(-20, 20, 20000)
    s2 = rng.uniform(-20, 20, 20000)
    r = rng.uniform(0, 6, 20000)
    rep = check_corollary(cubic, d, s1, s2, r)
    assert rep.passed
    assert rep.n_violations == 0
    assert rep.n_samples == 20000


def test_corollary_negative_control(cubic, cubic_constants, rng):
    # inflating the coercivity constant far beyond its certified value must fail
    import dataclasses

    d = decompose(cubic, cubic_constants)
    d_bad = dataclasses.replace(d, alpha1=d.alpha1 * 50.0)
    s1 = rng.uniform(-20, 20, 20000)
    s2 = rng.uniform(-20, 20, 20000)
    r = rng.uniform(0, 6, 20000)
    rep = check_corollary(cubic, d_bad, s1, s2, r)
    assert not rep.passed
    assert rep.n_violations > 0
    assert rep.worst_margin < 0


def test_f_add_envelope(cubic):
    k = LipschitzGrowthConstants(kappa0=3.0, l0=1.0)
    rep = certify_f_add(cubic, k)
    assert rep.passed
    chk = rep.check("f_add")
    assert chk.margin >= 0.0  # |3s^2-1| <= 3s^2+1 with equality at s=0
    bad = LipschitzGrowthConstants(kappa0=2.0, l0=0.5)
    assert not certify_f_add(cubic, bad).passed


def test_scan_grid_symmetric():
    scan = ScanSpec(radius=2.0, step=0.5)
    g = scan.half_grid()
    assert g[0] == 0.0
    assert g[-1] == pytest.approx(2.0)
    assert np.all(np.diff(g) > 0)


def test_decompose_rejects_incompatible_constants(cubic):
    # alpha > kappa/(p-1) violates the compatibility premise
    c = DissipativityConstants(p=4.0, kappa=3.0, l=1.0, alpha=2.0, beta=0.5, sigma=2.0)
    with pytest.raises(ValueError):
        decompose(cubic, c)
