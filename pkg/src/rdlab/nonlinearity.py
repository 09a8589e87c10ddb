"""Polynomial nonlinearities and certification of their dissipativity structure.

A nonlinearity is a polynomial f(s) = sum_{j=1}^{deg} b_j s^j with positive
leading coefficient and no constant term.  The growth exponent p defaults to
deg + 1 and may be overridden.  The structural conditions certified here,
for constants kappa, l, alpha, beta, sigma > 0, are

    (f1)   f'(s)   >= kappa |s|^(p-2) - l
    (f2)   f(s) s  >= alpha |s|^p     - beta
    (f3)   |f(s)|  <= sigma |s|^(p-1) + sigma
    (2.4)  alpha   <= kappa / (p - 1)

and their analogues (f21), (f22), (f23), (f24) for the remainder f2 = f - f1
of the splitting f = f1 + f2 with

    f1(s) = (alpha/2) |s|^(p-2) s - sigma.

Margins are scanned over a symmetric grid.  For integer p the scanned
quantity is folded into a single polynomial per sign branch before
evaluation, so conditions that hold with equality report a margin of exactly
zero instead of rounding noise.  Outside the scan radius a leading
coefficient comparison certifies the tail.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np


def _horner(coeffs_desc: Sequence[float], s):
    """Evaluate a polynomial given coefficients from highest power down."""
    acc = np.zeros_like(np.asarray(s, dtype=float))
    for c in coeffs_desc:
        acc = acc * s + c
    return acc


@dataclasses.dataclass(frozen=True)
class NonlinearitySpec:
    """Odd-degree polynomial nonlinearity without constant term.

    coefficients holds (b_1, .., b_deg) in ascending order of power.
    """

    coefficients: tuple
    p: float = 0.0  # 0 means "use degree + 1"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) == 0:
            raise ValueError("at least one coefficient is required")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("coefficients must be finite")
        if coeffs[-1] <= 0:
            raise ValueError("leading coefficient must be strictly positive")
        object.__setattr__(self, "coefficients", coeffs)
        p = float(self.p) if self.p else float(len(coeffs) + 1)
        if not (math.isfinite(p) and p > 2):
            raise ValueError(f"growth exponent p must be > 2, got {p}")
        object.__setattr__(self, "p", p)

    @property
    def degree(self) -> int:
        return len(self.coefficients)

    def evaluate(self, s):
        desc = list(reversed(self.coefficients)) + [0.0]
        return _horner(desc, s)

    def evaluate_derivative(self, s):
        desc = [j * b for j, b in enumerate(self.coefficients, start=1)][::-1]
        return _horner(desc, s)

    def exact_difference(self, a, h):
        """f(a + h) - f(a) with every term carrying a factor of h.

        Expands the difference binomially, so the f(a+h) - f(a) cancellation
        never happens and small differences survive even when |h| is many
        orders of magnitude below |a|.  Rounding error is at machine level
        relative to the expansion's term magnitudes, which means full relative
        precision unless the expansion terms themselves cancel (e.g. h near a
        root of the difference polynomial).
        """
        a = np.asarray(a, dtype=float)
        h = np.asarray(h, dtype=float)
        deg = self.degree
        acc = np.zeros(np.broadcast_shapes(a.shape, h.shape))
        for m in range(deg, 0, -1):
            d = np.zeros_like(a)
            for j in range(deg, m - 1, -1):
                d = d * a + self.coefficients[j - 1] * math.comb(j, m)
            acc = acc * h + d
        return acc * h


@dataclasses.dataclass(frozen=True)
class DissipativityConstants:
    """Constants entering the structural conditions (f1), (f2), (f3)."""

    p: float
    kappa: float
    l: float
    alpha: float
    beta: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 2):
            raise ValueError(f"p must be > 2, got {self.p}")
        for name in ("kappa", "l", "alpha", "beta", "sigma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive real, got {v}")


@dataclasses.dataclass(frozen=True)
class LipschitzGrowthConstants:
    """Constants of the derivative growth bound |f'(s)| <= kappa0 |s|^(p-2) + l0."""

    kappa0: float
    l0: float

    def __post_init__(self):
        for name in ("kappa0", "l0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive real, got {v}")


@dataclasses.dataclass(frozen=True)
class ScanSpec:
    """Symmetric scan grid over [-radius, radius] with the given step."""

    radius: float = 50.0
    step: float = 1e-3

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not (0 < self.step <= self.radius):
            raise ValueError(f"step must lie in (0, radius], got {self.step}")

    def half_grid(self) -> np.ndarray:
        """Nonnegative scan values 0..radius; the sign branch is separate."""
        n = int(round(self.radius / self.step))
        return np.linspace(0.0, self.radius, n + 1)

    def recommended_radius(self, f: NonlinearitySpec) -> float:
        """Heuristic radius from which leading-term dominance is active."""
        total = sum(abs(c) for c in f.coefficients)
        return 2.0 * total / f.coefficients[-1]


@dataclasses.dataclass
class ConditionCheck:
    name: str
    margin: float
    argmin: float
    passed: bool
    tail_ok: bool
    note: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "margin": float(self.margin),
            "argmin": float(self.argmin),
            "passed": bool(self.passed),
            "tail_ok": bool(self.tail_ok),
            "note": self.note,
        }


@dataclasses.dataclass
class CertificationReport:
    checks: list
    passed: bool
    margin_tolerance: float
    scan_radius: float
    scan_step: float

    def check(self, name: str) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "checks": [c.to_dict() for c in self.checks],
            "passed": bool(self.passed),
            "margin_tolerance": self.margin_tolerance,
            "scan_radius": self.scan_radius,
            "scan_step": self.scan_step,
        }


MARGIN_TOL = 1e-12


def _poly_asc_to_branch(coeffs_asc, negative: bool):
    """Coefficients of q(y) = poly(+-y) in ascending powers of y >= 0."""
    out = list(coeffs_asc)
    if negative:
        out = [c * (-1.0) ** j for j, c in enumerate(out)]
    return out


def _add_power(coeffs_asc, power: int, value: float):
    out = list(coeffs_asc)
    if len(out) <= power:
        out.extend([0.0] * (power + 1 - len(out)))
    out[power] += value
    return out


def _leading_tail_ok(coeffs_asc) -> bool:
    """True when the polynomial is eventually nonnegative on y -> +inf."""
    for c in reversed(coeffs_asc):
        if c != 0.0:
            return c > 0.0
    return True  # identically zero


def _branch_margins(branches, ygrid, extra_points=()):
    """Minimum over both sign branches of polynomial margins q(+-y)."""
    best = math.inf
    arg = 0.0
    tail = True
    for sign, coeffs_asc in branches:
        ys = np.concatenate([ygrid, np.asarray(extra_points, dtype=float)]) if extra_points else ygrid
        vals = _horner(list(reversed(coeffs_asc)), ys)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            arg = float(sign * ys[i])
        tail = tail and _leading_tail_ok(coeffs_asc)
    return best, arg, tail


def _abs_margin(envelope_fn, inner_fn, ygrid, signs=(1.0, -1.0)):
    """Minimum of envelope(y) - |inner(+-y)| over the scan grid."""
    best = math.inf
    arg = 0.0
    for sign in signs:
        s = sign * ygrid
        vals = envelope_fn(ygrid) - np.abs(inner_fn(s))
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            arg = float(s[i])
    return best, arg


def _f_poly_asc(f: NonlinearitySpec):
    return [0.0] + list(f.coefficients)


def _fprime_poly_asc(f: NonlinearitySpec):
    return [j * b for j, b in enumerate(f.coefficients, start=1)]


def _fs_poly_asc(f: NonlinearitySpec):
    # coefficients of f(s) * s
    return [0.0, 0.0] + list(f.coefficients)


def _tail_sign_ok_abs(inner_asc, envelope_power, envelope_coeff) -> bool:
    """Tail check for envelope(y) - |inner(+-y)| via asymptotic sign of inner."""
    deg = 0
    lead = 0.0
    for j, c in enumerate(inner_asc):
        if c != 0.0:
            deg, lead = j, c
    # |inner| ~ |lead| y^deg for large y; compare against envelope term
    if deg < envelope_power:
        return envelope_coeff > 0
    if deg == envelope_power:
        return envelope_coeff >= abs(lead)
    return False


def certify_conditions(
    f: NonlinearitySpec,
    c: DissipativityConstants,
    scan: Optional[ScanSpec] = None,
) -> CertificationReport:
    """Scan-certify (f1), (f2), (f3) and the compatibility bound (2.4).

    Pass means every margin is >= -1e-12 on the scan grid and the leading
    coefficient comparison certifies the tail beyond the scan radius.
    """
    if abs(c.p - f.p) > 0:
        raise ValueError(f"constants are for p={c.p} but nonlinearity has p={f.p}")
    scan = scan or ScanSpec()
    ygrid = scan.half_grid()
    p = c.p
    checks = []
    p_int = float(p).is_integer()

    if p_int:
        pi = int(p)
        fp = _fprime_poly_asc(f)
        fs = _fs_poly_asc(f)
        # (f1): f'(s) - kappa |s|^(p-2) + l, folded per branch
        branches = []
        for neg in (False, True):
            q = _poly_asc_to_branch(fp, neg)
            q = _add_power(q, pi - 2, -c.kappa)
            q = _add_power(q, 0, c.l)
            branches.append((-1.0 if neg else 1.0, q))
        m, a, t = _branch_margins(branches, ygrid)
        checks.append(ConditionCheck("f1", m, a, m >= -MARGIN_TOL, t))
        # (f2): f(s)s - alpha |s|^p + beta
        branches = []
        for neg in (False, True):
            q = _poly_asc_to_branch(fs, neg)
            q = _add_power(q, pi, -c.alpha)
            q = _add_power(q, 0, c.beta)
            branches.append((-1.0 if neg else 1.0, q))
        m, a, t = _branch_margins(branches, ygrid)
        checks.append(ConditionCheck("f2", m, a, m >= -MARGIN_TOL, t))
    else:
        best, arg = math.inf, 0.0
        for sign in (1.0, -1.0):
            s = sign * ygrid
            vals = f.evaluate_derivative(s) - c.kappa * ygrid ** (p - 2) + c.l
            i = int(np.argmin(vals))
            if vals[i] < best:
                best, arg = float(vals[i]), float(s[i])
        checks.append(
            ConditionCheck("f1", best, arg, best >= -MARGIN_TOL, f.degree - 1 >= p - 2)
        )
        best, arg = math.inf, 0.0
        for sign in (1.0, -1.0):
            s = sign * ygrid
            vals = f.evaluate(s) * s - c.alpha * ygrid**p + c.beta
            i = int(np.argmin(vals))
            if vals[i] < best:
                best, arg = float(vals[i]), float(s[i])
        checks.append(
            ConditionCheck("f2", best, arg, best >= -MARGIN_TOL, f.degree + 1 >= p)
        )

    # (f3): sigma |s|^(p-1) + sigma - |f(s)|; the minimum sits at moderate s
    m, a = _abs_margin(
        lambda y: c.sigma * y ** (p - 1) + c.sigma,
        lambda s: f.evaluate(s),
        ygrid,
    )
    tail = _tail_sign_ok_abs(
        _f_poly_asc(f), int(p - 1) if p_int else f.degree, c.sigma
    )
    checks.append(ConditionCheck("f3", m, a, m >= -MARGIN_TOL, tail))

    # (2.4): kappa/(p-1) - alpha >= 0, plain arithmetic
    m24 = c.kappa / (p - 1.0) - c.alpha
    checks.append(ConditionCheck("2.4", m24, 0.0, m24 >= -MARGIN_TOL, True))

    if scan.radius < scan.recommended_radius(f):
        note = (
            f"scan radius {scan.radius} below dominance heuristic "
            f"{scan.recommended_radius(f):.3g}"
        )
        for ch in checks:
            ch.note = note

    passed = all(ch.passed and ch.tail_ok for ch in checks)
    return CertificationReport(checks, passed, MARGIN_TOL, scan.radius, scan.step)


def monotonicity_constant_oracle(p: float, samples: int = 200000, seed: int = 0):
    """Estimate the pair constants of phi(s) = |s|^(p-2) s by dense sampling.

    c4 is the infimum of (phi(a) - phi(b))(a - b) / |a - b|^p and c1 the
    supremum of |phi(a) - phi(b)| / ((|a| + |b|)^(p-2) |a - b|).  Both ratios
    are invariant under (a, b) -> (t a, t b) for t > 0, so an angular grid
    over unit directions carries the structure; log-spaced and random pairs
    are added as a safeguard.  The returned c4 is shrunk and c1 inflated by
    1% so downstream inequalities hold with margin.
    """
    if not (math.isfinite(p) and p > 2):
        raise ValueError(f"p must be > 2, got {p}")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)

    n_ang = max(4096, samples // 2)
    theta = np.linspace(0.0, 2.0 * np.pi, n_ang, endpoint=False)
    a = np.cos(theta)
    b = np.sin(theta)

    n_rand = max(samples - n_ang, 1024)
    mag = 10.0 ** rng.uniform(-3, 3, size=(2, n_rand))
    sgn = rng.choice([-1.0, 1.0], size=(2, n_rand))
    a = np.concatenate([a, sgn[0] * mag[0]])
    b = np.concatenate([b, sgn[1] * mag[1]])

    grid = 10.0 ** np.linspace(-3, 3, 25)
    grid = np.concatenate([grid, -grid, [0.0]])
    ga, gb = np.meshgrid(grid, grid)
    a = np.concatenate([a, ga.ravel()])
    b = np.concatenate([b, gb.ravel()])

    diff = a - b
    keep = np.abs(diff) > 1e-12 * (np.abs(a) + np.abs(b) + 1e-300)
    a, b, diff = a[keep], b[keep], diff[keep]

    phi_a = np.abs(a) ** (p - 2) * a
    phi_b = np.abs(b) ** (p - 2) * b
    num = phi_a - phi_b
    c4_ratio = num * diff / np.abs(diff) ** p
    c1_ratio = np.abs(num) / ((np.abs(a) + np.abs(b)) ** (p - 2) * np.abs(diff))
    good = np.isfinite(c4_ratio) & np.isfinite(c1_ratio)
    c4 = float(np.min(c4_ratio[good])) * 0.99
    c1 = float(np.max(c1_ratio[good])) * 1.01
    return c1, c4


@dataclasses.dataclass(frozen=True)
class Decomposition:
    """Splitting f = f1 + f2 with f1(s) = f1_scale |s|^(p-2) s - f1_shift.

    alpha1 and sigma1 control the pair inequalities of f1,

        (f1(s1) - f1(s2))(s1 - s2) >= alpha1 |s1 - s2|^p
        |f1(s1) - f1(s2)| <= sigma1 |s1 - s2| (1 + |s1|^(p-2) + |s2|^(p-2)),

    while (kappa2, l2, alpha2, beta2, sigma2, sigma2_const) are the
    structural constants inherited by the remainder f2.
    """

    f: NonlinearitySpec
    p: float
    f1_scale: float
    f1_shift: float
    alpha1: float
    sigma1: float
    kappa2: float
    l2: float
    alpha2: float
    beta2: float
    sigma2: float
    sigma2_const: float
    c1: float
    c4: float

    def f1(self, s):
        s = np.asarray(s, dtype=float)
        return self.f1_scale * np.abs(s) ** (self.p - 2) * s - self.f1_shift

    def f2(self, s):
        return self.f.evaluate(s) - self.f1(s)

    def monotonicity_margin(self, s1, s2):
        """(f1(s1) - f1(s2))(s1 - s2) - alpha1 |s1 - s2|^p, should be >= 0."""
        d = np.asarray(s1, dtype=float) - np.asarray(s2, dtype=float)
        return (self.f1(s1) - self.f1(s2)) * d - self.alpha1 * np.abs(d) ** self.p

    def growth_margin(self, s1, s2):
        """sigma1 |d| (1 + |s1|^(p-2) + |s2|^(p-2)) - |f1(s1) - f1(s2)| >= 0."""
        s1 = np.asarray(s1, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        d = np.abs(s1 - s2)
        env = self.sigma1 * d * (1.0 + np.abs(s1) ** (self.p - 2) + np.abs(s2) ** (self.p - 2))
        return env - np.abs(self.f1(s1) - self.f1(s2))

    def to_dict(self):
        return {
            "p": self.p,
            "f1_scale": self.f1_scale,
            "f1_shift": self.f1_shift,
            "alpha1": self.alpha1,
            "sigma1": self.sigma1,
            "kappa2": self.kappa2,
            "l2": self.l2,
            "alpha2": self.alpha2,
            "beta2": self.beta2,
            "sigma2": self.sigma2,
            "sigma2_const": self.sigma2_const,
            "c1": self.c1,
            "c4": self.c4,
        }


def decompose(
    f: NonlinearitySpec,
    c: DissipativityConstants,
    scan: Optional[ScanSpec] = None,
    oracle_samples: int = 200000,
    oracle_seed: int = 0,
) -> Decomposition:
    """Split f into a monotone power part f1 and a remainder f2.

    The constants follow the splitting construction: kappa2 = kappa -
    (alpha/2)(p-1), alpha2 = alpha/4, l2 = l, sigma2 = sigma + alpha/2 with
    additive constant 2 sigma, and beta2 = beta + max_s (f1(s)s -
    (3 alpha/4)|s|^p), the maximum taken over the scan grid augmented with
    the analytic stationary point.  alpha1 and sigma1 come from the pair
    constants of |s|^(p-2)s: alpha1 = (alpha/2) c4, and sigma1 = (alpha/2)
    c1 2^max(p-3, 0), the last factor converting the (|s1|+|s2|)^(p-2)
    envelope into the 1 + |s1|^(p-2) + |s2|^(p-2) form.
    """
    if abs(c.p - f.p) > 0:
        raise ValueError(f"constants are for p={c.p} but nonlinearity has p={f.p}")
    p = c.p
    if c.alpha > c.kappa / (p - 1.0):
        raise ValueError("constants violate alpha <= kappa/(p-1); certify first")
    scan = scan or ScanSpec()

    c1, c4 = monotonicity_constant_oracle(p, samples=oracle_samples, seed=oracle_seed)
    alpha1 = 0.5 * c.alpha * c4
    sigma1 = 0.5 * c.alpha * c1 * 2.0 ** max(p - 3.0, 0.0)

    # beta2 = beta + sup_s [f1(s) s - (3 alpha / 4)|s|^p]; the bracket equals
    # sigma |s| - (alpha/4)|s|^p on the maximizing sign, stationary at
    # y* = (4 sigma / (alpha p))^(1/(p-1)).
    y = scan.half_grid()
    y_star = (4.0 * c.sigma / (c.alpha * p)) ** (1.0 / (p - 1.0))
    y = np.concatenate([y, [y_star]])
    bracket = c.sigma * y - 0.25 * c.alpha * y**p
    shift = float(np.max(bracket))
    beta2 = c.beta + max(shift, 0.0)

    return Decomposition(
        f=f,
        p=p,
        f1_scale=0.5 * c.alpha,
        f1_shift=c.sigma,
        alpha1=alpha1,
        sigma1=sigma1,
        kappa2=c.kappa - 0.5 * c.alpha * (p - 1.0),
        l2=c.l,
        alpha2=0.25 * c.alpha,
        beta2=beta2,
        sigma2=c.sigma + 0.5 * c.alpha,
        sigma2_const=2.0 * c.sigma,
        c1=c1,
        c4=c4,
    )


def certify_decomposition(
    d: Decomposition,
    scan: Optional[ScanSpec] = None,
) -> CertificationReport:
    """Scan-certify that f2 = f - f1 satisfies (f21), (f22), (f23), (f24)."""
    scan = scan or ScanSpec()
    ygrid = scan.half_grid()
    f = d.f
    p = d.p
    checks = []
    p_int = float(p).is_integer()

    if p_int:
        pi = int(p)
        fp = _fprime_poly_asc(f)
        fs = _fs_poly_asc(f)
        # (f21): f2'(s) - kappa2 |s|^(p-2) + l2 where f2' = f' - scale(p-1)|s|^(p-2)
        coeff = d.f1_scale * (p - 1.0) + d.kappa2
        branches = []
        for neg in (False, True):
            q = _poly_asc_to_branch(fp, neg)
            q = _add_power(q, pi - 2, -coeff)
            q = _add_power(q, 0, d.l2)
            branches.append((-1.0 if neg else 1.0, q))
        m, a, t = _branch_margins(branches, ygrid)
        checks.append(ConditionCheck("f21", m, a, m >= -MARGIN_TOL, t))
        # (f22): f2(s)s - alpha2 |s|^p + beta2 with f2(s)s = f(s)s - scale|s|^p + shift*s
        branches = []
        for neg in (False, True):
            q = _poly_asc_to_branch(fs, neg)
            q = _add_power(q, pi, -(d.f1_scale + d.alpha2))
            q = _add_power(q, 1, d.f1_shift * (-1.0 if neg else 1.0))
            q = _add_power(q, 0, d.beta2)
            branches.append((-1.0 if neg else 1.0, q))
        m, a, t = _branch_margins(branches, ygrid)
        checks.append(ConditionCheck("f22", m, a, m >= -MARGIN_TOL, t))
    else:
        best, arg = math.inf, 0.0
        for sign in (1.0, -1.0):
            s = sign * ygrid
            f2p = f.evaluate_derivative(s) - d.f1_scale * (p - 1.0) * ygrid ** (p - 2)
            vals = f2p - d.kappa2 * ygrid ** (p - 2) + d.l2
            i = int(np.argmin(vals))
            if vals[i] < best:
                best, arg = float(vals[i]), float(s[i])
        checks.append(ConditionCheck("f21", best, arg, best >= -MARGIN_TOL, True))
        best, arg = math.inf, 0.0
        for sign in (1.0, -1.0):
            s = sign * ygrid
            vals = d.f2(s) * s - d.alpha2 * ygrid**p + d.beta2
            i = int(np.argmin(vals))
            if vals[i] < best:
                best, arg = float(vals[i]), float(s[i])
        checks.append(ConditionCheck("f22", best, arg, best >= -MARGIN_TOL, True))

    # (f23): sigma2 |s|^(p-1) + sigma2_const - |f2(s)|
    m, a = _abs_margin(
        lambda y: d.sigma2 * y ** (p - 1) + d.sigma2_const,
        lambda s: d.f2(s),
        ygrid,
    )
    # |f2| grows like max(|f| tail, scale y^(p-1)); compare leading orders
    tail = _tail_sign_ok_abs(
        _f_poly_asc(f),
        int(p - 1) if p_int else f.degree,
        d.sigma2 - d.f1_scale,
    )
    checks.append(ConditionCheck("f23", m, a, m >= -MARGIN_TOL, tail))

    m24 = d.kappa2 / (p - 1.0) - d.alpha2
    checks.append(ConditionCheck("f24", m24, 0.0, m24 >= -MARGIN_TOL, True))

    passed = all(ch.passed and ch.tail_ok for ch in checks)
    return CertificationReport(checks, passed, MARGIN_TOL, scan.radius, scan.step)


@dataclasses.dataclass
class ViolationReport:
    n_samples: int
    n_violations: int
    worst_margin: float
    worst_sample: tuple
    passed: bool

    def to_dict(self):
        return {
            "n_samples": self.n_samples,
            "n_violations": self.n_violations,
            "worst_margin": float(self.worst_margin),
            "worst_sample": [float(v) for v in self.worst_sample],
            "passed": bool(self.passed),
        }


def check_corollary(f: NonlinearitySpec, d: Decomposition, s1, s2, r) -> ViolationReport:
    """Check the weighted pair coercivity of the full nonlinearity f.

    For every sampled triple (s1, s2, r) with r >= 0,

        (f(s1) - f(s2))(s1 - s2)|s1 - s2|^r
            >= alpha1 |s1 - s2|^(p + r) - l2 |s1 - s2|^(r + 2).

    The difference f(s1) - f(s2) is evaluated cancellation-free.  A sample
    counts as a violation when the margin drops below a relative rounding
    allowance; exact ties pass.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("exponent r must be nonnegative")
    delta = s1 - s2
    ad = np.abs(delta)
    lhs = f.exact_difference(s2, delta) * delta * ad**r
    rhs = d.alpha1 * ad ** (d.p + r) - d.l2 * ad ** (r + 2.0)
    margin = lhs - rhs
    tol = 1e-12 * (np.abs(lhs) + np.abs(rhs) + 1.0)
    bad = margin < -tol
    worst = int(np.argmin(margin - (-tol)))
    return ViolationReport(
        n_samples=int(margin.size),
        n_violations=int(np.count_nonzero(bad)),
        worst_margin=float(margin.flat[worst]),
        worst_sample=(
            float(s1.flat[worst % s1.size] if s1.size else 0.0),
            float(s2.flat[worst % s2.size] if s2.size else 0.0),
            float(r.flat[worst % r.size] if r.size else 0.0),
        ),
        passed=not bool(np.any(bad)),
    )


def certify_f_add(
    f: NonlinearitySpec,
    k: LipschitzGrowthConstants,
    scan: Optional[ScanSpec] = None,
) -> CertificationReport:
    """Scan-certify the derivative growth bound |f'(s)| <= kappa0|s|^(p-2) + l0."""
    scan = scan or ScanSpec()
    ygrid = scan.half_grid()
    p = f.p
    m, a = _abs_margin(
        lambda y: k.kappa0 * y ** (p - 2) + k.l0,
        lambda s: f.evaluate_derivative(s),
        ygrid,
    )
    p_int = float(p).is_integer()
    tail = _tail_sign_ok_abs(
        _fprime_poly_asc(f), int(p - 2) if p_int else f.degree - 1, k.kappa0
    )
    checks = [ConditionCheck("f_add", m, a, m >= -MARGIN_TOL, tail)]
    passed = checks[0].passed and checks[0].tail_ok
    return CertificationReport(checks, passed, MARGIN_TOL, scan.radius, scan.step)
