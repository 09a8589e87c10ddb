import numpy as np
import pytest

from rdlab.domain import lebesgue_norm
from rdlab.profiles import (
    direction_bank,
    eigenmode_mixture,
    flattest_field,
    normalized,
    rough_field,
    spiked_plateau,
    spiky_field,
    spiky_power_range,
)


def test_normalization_exact(dom_small, rng):
    for maker in (
        lambda: eigenmode_mixture(dom_small, rng, n_modes=5, l2=2.5),
        lambda: rough_field(dom_small, rng, l2=2.5),
        lambda: spiky_field(dom_small, 4.0, 3.0, l2=2.5),
        lambda: flattest_field(dom_small, l2=2.5),
    ):
        f = maker()
        assert lebesgue_norm(f, 2.0) == pytest.approx(2.5, rel=1e-12)


def test_normalized_rejects_zero(dom_small):
    with pytest.raises(ValueError):
        normalized(dom_small, np.zeros(dom_small.shape))


def test_spiky_field_hits_power_target(dom_small):
    lo, hi = spiky_power_range(dom_small, 4.0)
    assert lo < 10.0 < hi
    f = spiky_field(dom_small, 4.0, 10.0)
    assert lebesgue_norm(f, 4.0) ** 4 == pytest.approx(10.0, rel=1e-3)
    with pytest.raises(ValueError, match="outside attainable range"):
        spiky_field(dom_small, 4.0, hi * 10.0)


def test_flattest_field_power(dom_small):
    # constant interior: ||u||_p^p at unit L2 equals ((M+1)/M)^(p/2 - 1)
    f = flattest_field(dom_small)
    m = dom_small.points_per_axis
    want = ((m + 1) / m) ** (4.0 / 2.0 - 1.0)
    assert lebesgue_norm(f, 4.0) ** 4 == pytest.approx(want, rel=1e-12)


def test_spiked_plateau_concentrates(dom_small):
    # same backbone, rising L4 mass, fixed L2 budget
    powers = [2.0, 10.0, 60.0]
    fields = [spiked_plateau(dom_small, 4.0, pw) for pw in powers]
    for pw, f in zip(powers, fields):
        assert lebesgue_norm(f, 2.0) == pytest.approx(1.0, rel=1e-12)
        assert lebesgue_norm(f, 4.0) ** 4 == pytest.approx(pw, rel=1e-6)
    # the spike is a local feature: fields agree away from the spike node up
    # to the overall normalization
    a, b = fields[0].values, fields[-1].values
    node = int(np.argmax(np.abs(b - a)))
    mask = np.ones_like(a, dtype=bool)
    mask[node] = False
    ratio = b[mask] / a[mask]
    assert np.ptp(ratio) < 1e-9


def test_spiked_plateau_rejects_unreachable(dom_small):
    with pytest.raises(ValueError, match="one-point cap"):
        spiked_plateau(dom_small, 4.0, 1e9)


def test_direction_bank_unit_and_distinct(dom_small, rng):
    bank = direction_bank(dom_small, rng, n=4)
    assert len(bank) == 4
    for i, f in enumerate(bank):
        assert lebesgue_norm(f, 2.0) == pytest.approx(1.0, rel=1e-12)
        for g in bank[i + 1 :]:
            # varied textures, not copies of one another
            assert not np.allclose(f.values, g.values, atol=1e-6)


def test_mixture_2d_shapes(dom_2d, rng):
    f = eigenmode_mixture(dom_2d, rng, n_modes=4)
    assert f.values.shape == dom_2d.shape
    assert lebesgue_norm(f, 2.0) == pytest.approx(1.0, rel=1e-12)
