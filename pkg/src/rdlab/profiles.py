"""Deterministic initial-data families used by the measurement suites.

Three textures are provided: smooth mixtures of low sine modes, rough
white-noise fields, and concentrated bumps whose L^p mass can be dialed up
while the L^2 norm stays fixed.  On a grid with spacing h the ratio
||u||_p / ||u||_2 is capped at h^(1/2 - 1/p) (attained by a one-point
spike), so concentration targets are expressed through the p-th power
||u||_p^p; the achievable power range is reported by spiky_power_range.
"""

from __future__ import annotations

import numpy as np

from rdlab.domain import DomainSpec, Field, lebesgue_norm_values


def normalized(dom: DomainSpec, values: np.ndarray, l2: float = 1.0) -> Field:
    n = lebesgue_norm_values(dom, values, 2.0)
    if n == 0:
        raise ValueError("cannot normalize the zero field")
    return Field(dom, values * (l2 / n))


def eigenmode_mixture(dom: DomainSpec, rng, n_modes: int = 8, l2: float = 1.0) -> Field:
    """Random mixture of the first n_modes sine modes, L2-normalized."""
    n_modes = min(n_modes, dom.points_per_axis)
    coeff = np.zeros(dom.shape)
    if dom.dimension == 1:
        coeff[:n_modes] = rng.standard_normal(n_modes) / np.arange(1, n_modes + 1)
    else:
        block = rng.standard_normal((n_modes, n_modes))
        k = np.arange(1, n_modes + 1)
        block /= np.sqrt(k[:, None] ** 2 + k[None, :] ** 2)
        coeff[:n_modes, :n_modes] = block
    from rdlab.domain import dst_inverse

    return normalized(dom, dst_inverse(dom, coeff), l2)


def rough_field(dom: DomainSpec, rng, l2: float = 1.0) -> Field:
    """White-noise field on the grid, L2-normalized."""
    return normalized(dom, rng.standard_normal(dom.shape), l2)


def _bump_values(dom: DomainSpec, plateau_half_width: float, ramp: float) -> np.ndarray:
    """Centered plateau with cosine-squared shoulders (1-D profile per axis)."""
    x = dom.axis()
    center = dom.side_length / 2.0
    xi = np.abs(x - center)
    vals = np.zeros_like(xi)
    vals[xi <= plateau_half_width] = 1.0
    shoulder = (xi > plateau_half_width) & (xi < plateau_half_width + ramp)
    vals[shoulder] = np.cos(0.5 * np.pi * (xi[shoulder] - plateau_half_width) / ramp) ** 2
    if dom.dimension == 1:
        return vals
    return np.outer(vals, vals)


def _bump_power(dom: DomainSpec, w: float, ramp: float, p: float) -> float:
    vals = _bump_values(dom, w, ramp)
    n2 = lebesgue_norm_values(dom, vals, 2.0)
    if n2 == 0:
        return np.inf
    return float(lebesgue_norm_values(dom, vals / n2, p) ** p)


def spiky_power_range(dom: DomainSpec, p: float):
    """Attainable range of ||u||_p^p over the bump family with ||u||_2 = 1."""
    ramp = dom.h
    w_max = dom.side_length / 2.0 - dom.h - ramp
    w_min = dom.h / 2.0
    return _bump_power(dom, w_max, ramp, p), _bump_power(dom, w_min, ramp, p)


def spiky_field(dom: DomainSpec, p: float, power_target: float, l2: float = 1.0) -> Field:
    """Bump with ||u||_2 = l2 and ||u||_p^p = power_target * l2^p.

    The plateau half-width is bisected until the normalized p-th power norm
    hits the target.  Raises when the target falls outside the attainable
    range of the grid.
    """
    lo_power, hi_power = spiky_power_range(dom, p)
    if not (lo_power <= power_target <= hi_power):
        raise ValueError(
            f"power target {power_target} outside attainable range "
            f"[{lo_power:.6g}, {hi_power:.6g}] on this grid"
        )
    ramp = dom.h
    w_lo = dom.h / 2.0  # most concentrated
    w_hi = dom.side_length / 2.0 - dom.h - ramp
    for _ in range(200):
        w = 0.5 * (w_lo + w_hi)
        if _bump_power(dom, w, ramp, p) > power_target:
            w_lo = w
        else:
            w_hi = w
    vals = _bump_values(dom, 0.5 * (w_lo + w_hi), ramp)
    return normalized(dom, vals, l2)


def flattest_field(dom: DomainSpec, l2: float = 1.0) -> Field:
    """The minimizer of ||u||_p / ||u||_2 on the grid: a constant interior.

    Its ||u||_p^p at unit L2 norm equals ((M+1)/M)^(N(p/2 - 1)), the closest
    the discrete interior gets to 1.
    """
    return normalized(dom, np.ones(dom.shape), l2)


def spiked_plateau(dom: DomainSpec, p: float, power_target: float, l2: float = 1.0) -> Field:
    """Flat backbone plus a single-node spike carrying the excess L^p mass.

    All members of a family built this way share the same coarse (low-mode)
    structure; only the spike amplitude differs, so ||u||_2 = l2 throughout
    while ||u||_p^p ranges from the flat minimum up to near the one-point
    cap.  A one-node spike is the cheapest realization in L2 terms: hitting
    power P costs only sqrt(P h^N) of squared L2 mass, leaving the rest to
    the backbone.  The spike sits off-center, away from symmetry axes.
    """
    flat = np.ones(dom.shape)
    node = int(round(0.31 * (dom.points_per_axis - 1)))
    idx = (node,) * dom.dimension
    spike = np.zeros(dom.shape)
    spike[idx] = 1.0

    def power(amp: float) -> float:
        f = normalized(dom, flat + amp * spike, 1.0)
        return float(lebesgue_norm_values(dom, f.values, p) ** p)

    if power_target < power(0.0):
        raise ValueError(f"power target {power_target} below the flat minimum {power(0.0):.6g}")
    amp_hi = 1.0
    while power(amp_hi) < power_target:
        amp_hi *= 2.0
        if amp_hi > 1e12:
            raise ValueError(f"power target {power_target} above the one-point cap")
    amp_lo = 0.0
    for _ in range(200):
        amp = 0.5 * (amp_lo + amp_hi)
        if power(amp) < power_target:
            amp_lo = amp
        else:
            amp_hi = amp
    return normalized(dom, flat + 0.5 * (amp_lo + amp_hi) * spike, l2)


def direction_bank(dom: DomainSpec, rng, n: int = 3):
    """A fixed set of unit-L2 perturbation directions of varied texture."""
    out = [eigenmode_mixture(dom, rng, n_modes=6)]
    if n >= 2:
        mid = spiky_power_range(dom, 4.0)
        target = min(10.0, 0.5 * mid[1])
        out.append(spiky_field(dom, 4.0, max(target, mid[0] * 1.5)))
    if n >= 3:
        out.append(rough_field(dom, rng))
    for k in range(3, n):
        out.append(eigenmode_mixture(dom, rng, n_modes=min(4 + 2 * k, dom.points_per_axis)))
    return out[:n]
