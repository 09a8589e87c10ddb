"""Quantitative solution estimates: exponent ladders, moment bounds, smoothing.

The integration-in-time bounds verified here all revolve around one exponent
ladder.  Starting from a_1 = b_1 = 1, the recursion

    a_{k+1} = a_k + (p - 2) / p
    b_{k+1} = a_k * b_k / a_{k+1} + 2 / (p * a_{k+1})

drives the Lebesgue index p*a_k upward by p-2 per rung while the time weight
t^{b_k} keeps each rung integrable down to t = 0.  The products obey the
closed form p * a_k * b_k = p + 2(k - 1), which is asserted (not assumed) by
the table constructor.

Measured quantities:

* verify_lemma23 -- for solutions starting in a bounded L2 set, the moment
  ||u(t)||_{p a_k}^{p a_k} stays bounded on [eps, T] by a constant depending
  only on the L2 radius, eps, and the forcing moment
  G_k = ||g||_{q_k}^{q_k}, q_k = p*a_{k+1}/(p-1).
* verify_ak_bk -- for the difference of two solutions, the weighted moment
  t^{1 + b_k p a_k} ||diff(t)||_{p a_k}^{p a_k} and the time integral of
  s^{b_{k+1} p a_{k+1}} ||diff(s)||_{p a_{k+1}}^{p a_{k+1}} are both
  controlled by ||diff(0)||_2^2.
* smoothing_constant -- the end-of-unit-interval quotient
  ||diff(1)||_gamma^gamma / ||diff(0)||_2^2 over an ensemble of pairs.
* h1_smoothing_fit -- a two-term envelope
  ||grad diff(1)||^2 <= C_R ||diff(0)||^(2/(p-1)) + C ||diff(0)||^2
  fitted by minimax calibration over an ensemble.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import linregress

from rdlab.domain import (
    DomainSpec,
    Field,
    h1_seminorm_values,
    lebesgue_norm_values,
)
from rdlab.nonlinearity import DissipativityConstants
from rdlab.solver import PairTrajectory, ProblemSpec, SolverConfig, Trajectory, integrate, integrate_pair


# ---------------------------------------------------------------------------
# exponent ladder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentTable:
    """The (a_k, b_k) ladder for a given p, indexed k = 1 .. k_max."""

    p: float
    a: np.ndarray
    b: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.a)

    def pa(self, k: int) -> float:
        """The Lebesgue exponent p * a_k of rung k (1-based)."""
        return self.p * self.a[k - 1]

    def weight(self, k: int) -> float:
        """The time-weight exponent b_k of rung k (1-based)."""
        return float(self.b[k - 1])

    def product_residuals(self) -> np.ndarray:
        """|p a_k b_k - (p + 2(k-1))| for every rung; all should vanish."""
        k = np.arange(1, self.k_max + 1)
        return np.abs(self.p * self.a * self.b - (self.p + 2.0 * (k - 1)))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "a": [float(v) for v in self.a],
            "b": [float(v) for v in self.b],
            "pa": [float(self.p * v) for v in self.a],
            "max_product_residual": float(self.product_residuals().max()),
        }


def exponent_table(p: float, k_max: int = 16) -> ExponentTable:
    """Run the ladder recursion and check its closed-form product identity."""
    if p <= 2:
        raise ValueError(f"exponent ladder requires p > 2, got {p}")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    a = np.empty(k_max)
    b = np.empty(k_max)
    a[0] = 1.0
    b[0] = 1.0
    for k in range(1, k_max):
        a[k] = a[k - 1] + (p - 2.0) / p
        b[k] = (a[k - 1] * b[k - 1]) / a[k] + 2.0 / (p * a[k])
    table = ExponentTable(p=p, a=a, b=b)
    resid = table.product_residuals().max()
    if resid > 1e-9:
        raise AssertionError(f"ladder product identity violated: residual {resid}")
    return table


def second_rung_closed_form(p: float):
    """The k=2 ladder entries in closed form: ((2p-2)/p, (p+2)/(2p-2))."""
    return (2.0 * p - 2.0) / p, (p + 2.0) / (2.0 * p - 2.0)


def h1_weight_exponent(p: float) -> float:
    """Time-weight exponent r = (p+3)/(2p-2) entering the gradient bound.

    It is pinned to the second ladder rung through
    2 * (1 + p a_2 b_2) / (p a_2) = 2 r.
    """
    return (p + 3.0) / (2.0 * p - 2.0)


# ---------------------------------------------------------------------------
# moment bound for solutions (bounded L2 data)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentBoundReport:
    """Sup of the L^{pa_k} moment quotient over a solution family."""

    p: float
    eps: float
    t_end: float
    l2_radius: float
    times: np.ndarray
    ks: tuple
    exponents: dict          # k -> p * a_k
    forcing_moments: dict    # k -> G_k
    quotients: dict          # k -> (n_members, n_times) array
    moments: dict            # k -> (n_members, n_times) raw ||u||_{pa_k}^{pa_k}
    sup_per_member: dict     # k -> (n_members,) array
    sup_quotient: dict       # k -> float
    finite: bool

    def moment_at(self, k: int, t: float) -> np.ndarray:
        """Per-member ||u(t)||_{pa_k}^{pa_k} at the recorded time nearest t."""
        idx = int(np.argmin(np.abs(self.times - t)))
        return self.moments[k][:, idx]

    def variation_factor(self, k: int) -> float:
        """max/min of the per-member sup quotients at rung k."""
        per = self.sup_per_member[k]
        lo = per.min()
        if lo == 0:
            return math.inf
        return float(per.max() / lo)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "eps": self.eps,
            "t_end": self.t_end,
            "l2_radius": self.l2_radius,
            "ks": list(self.ks),
            "exponents": {str(k): self.exponents[k] for k in self.ks},
            "forcing_moments": {str(k): self.forcing_moments[k] for k in self.ks},
            "sup_quotient": {str(k): self.sup_quotient[k] for k in self.ks},
            "sup_per_member": {
                str(k): [float(v) for v in self.sup_per_member[k]] for k in self.ks
            },
            "variation_factor": {str(k): self.variation_factor(k) for k in self.ks},
            "finite": self.finite,
        }


def verify_lemma23(
    problem: ProblemSpec,
    constants: DissipativityConstants,
    eps: float,
    family: Sequence[Field],
    k_max: int = 3,
    cfg: Optional[SolverConfig] = None,
) -> MomentBoundReport:
    """Measure sup_{t in [eps, T]} of the moment quotient over a family.

    The quotient at rung k is

        ||u(t)||_{pa_k}^{pa_k} / (exp(-lam t) ||u0||_2^2 + G_k + 1)

    with G_k = ||g||_{pa_{k+1}/(p-1)}^{pa_{k+1}/(p-1)}.  The bound is an
    instance-check: the report carries the measured sup so callers can both
    assert finiteness and compare families sharing the same L2 radius.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not family:
        raise ValueError("family must be nonempty")
    if cfg is None:
        cfg = SolverConfig(dt=1e-4, t_end=2.0, scheme="imex_cn_ab2", record_stride=100)
    if cfg.t_end <= eps:
        raise ValueError("integration horizon must exceed eps")
    p = constants.p
    table = exponent_table(p, k_max + 1)
    dom = problem.domain
    u0 = np.stack([f.values for f in family])
    l2_0 = lebesgue_norm_values(dom, u0, 2.0)
    radius = float(l2_0.max())

    g_vals = problem.g_values()
    forcing = {}
    for k in range(1, k_max + 1):
        q = table.pa(k + 1) / (p - 1.0)
        forcing[k] = float(lebesgue_norm_values(dom, g_vals, q) ** q)

    times, records = integrate(problem, u0, cfg)
    times = np.asarray(times)

    quotients = {}
    moments = {}
    sup_member = {}
    sup_total = {}
    exps = {}
    decay = np.exp(-problem.lam * times)[None, :] * (l2_0**2)[:, None]
    mask = times >= eps - 1e-12
    finite = True
    for k in range(1, k_max + 1):
        pa_k = table.pa(k)
        exps[k] = pa_k
        # records: (n_times, n_members, *shape) -> norms (n_times, n_members)
        norms = lebesgue_norm_values(dom, records, pa_k) ** pa_k
        moments[k] = norms.T
        q = norms.T / (decay + forcing[k] + 1.0)
        quotients[k] = q
        windowed = q[:, mask]
        sup_member[k] = windowed.max(axis=1)
        sup_total[k] = float(windowed.max())
        finite = finite and bool(np.isfinite(windowed).all())

    return MomentBoundReport(
        p=p,
        eps=eps,
        t_end=cfg.t_end,
        l2_radius=radius,
        times=times,
        ks=tuple(range(1, k_max + 1)),
        exponents=exps,
        forcing_moments=forcing,
        quotients=quotients,
        moments=moments,
        sup_per_member=sup_member,
        sup_quotient=sup_total,
        finite=finite,
    )


# ---------------------------------------------------------------------------
# weighted moment bounds for solution differences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedDifferenceReport:
    """Weighted sup / integral quotients for a difference trajectory."""

    p: float
    t_end: float
    diff0_l2_sq: float
    ks_sup: tuple
    ks_integral: tuple
    sup_quotient: dict       # k -> sup_t t^(1 + b_k pa_k) ||d||_{pa_k}^{pa_k} / ||d0||^2
    integral_quotient: dict  # k -> int_0^T s^(b_{k+1} pa_{k+1}) ||d||^{pa_{k+1}} ds / ||d0||^2
    sup_series: dict         # k -> (n_times,) weighted series (for plots)
    times: np.ndarray
    finite: bool

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "t_end": self.t_end,
            "diff0_l2_sq": self.diff0_l2_sq,
            "sup_quotient": {str(k): self.sup_quotient[k] for k in self.ks_sup},
            "integral_quotient": {
                str(k): self.integral_quotient[k] for k in self.ks_integral
            },
            "finite": self.finite,
        }


def verify_ak_bk(pair: PairTrajectory, table: ExponentTable, t_end: Optional[float] = None) -> WeightedDifferenceReport:
    """Measure the two weighted quotient families on a difference trajectory.

    Rung k of the sup family weights the L^{pa_k} moment by t^(1 + b_k pa_k);
    rung k of the integral family integrates the L^{pa_{k+1}} moment weighted
    by s^(b_{k+1} pa_{k+1}) (trapezoid over the recorded times, which should
    be graded toward t = 0).  Both are normalized by ||diff(0)||_2^2.
    """
    diff = pair.diff
    dom = diff.domain
    times = np.asarray(diff.times)
    if t_end is None:
        t_end = float(times[-1])
    mask = times <= t_end + 1e-12
    times = times[mask]
    states = diff.values[mask]

    d0 = float(lebesgue_norm_values(dom, states[0], 2.0) ** 2)
    if d0 == 0:
        raise ValueError("difference trajectory starts at zero; quotients undefined")

    k_sup = tuple(range(1, table.k_max + 1))
    k_int = tuple(range(1, table.k_max))
    sup_q = {}
    int_q = {}
    series = {}
    finite = True
    moments = {}
    for k in range(1, table.k_max + 1):
        pa_k = table.pa(k)
        moments[k] = lebesgue_norm_values(dom, states, pa_k) ** pa_k

    for k in k_sup:
        e = 1.0 + table.weight(k) * table.pa(k)
        w = np.zeros_like(times)
        pos = times > 0
        w[pos] = times[pos] ** e
        s = w * moments[k] / d0
        series[k] = s
        sup_q[k] = float(s.max())
        finite = finite and bool(np.isfinite(s).all())

    for k in k_int:
        e = table.weight(k + 1) * table.pa(k + 1)
        w = np.zeros_like(times)
        pos = times > 0
        w[pos] = times[pos] ** e
        integrand = w * moments[k + 1]
        int_q[k] = float(np.trapezoid(integrand, times) / d0)
        finite = finite and bool(np.isfinite(integrand).all())

    return WeightedDifferenceReport(
        p=table.p,
        t_end=t_end,
        diff0_l2_sq=d0,
        ks_sup=k_sup,
        ks_integral=k_int,
        sup_quotient=sup_q,
        integral_quotient=int_q,
        sup_series=series,
        times=times,
        finite=finite,
    )


# ---------------------------------------------------------------------------
# end-of-interval smoothing quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothingReport:
    """c_gamma = sup ||diff(1)||_gamma^gamma / ||diff(0)||_2^2 over pairs."""

    gamma: float
    n_pairs: int
    c_gamma: float
    slope: float
    slope_stderr: float
    r_squared: float
    log_x: np.ndarray   # log ||diff(0)||_2^2
    log_y: np.ndarray   # log ||diff(1)||_gamma^gamma
    argmax_index: int

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "n_pairs": self.n_pairs,
            "c_gamma": self.c_gamma,
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "r_squared": self.r_squared,
            "argmax_index": self.argmax_index,
        }


def _pair_finals(
    problem: ProblemSpec,
    pairs: Sequence[tuple],
    cfg: SolverConfig,
):
    """Evolve an ensemble of (base, diff) pairs; return initial/final diffs."""
    if not pairs:
        raise ValueError("need at least one pair")
    dom = problem.domain
    base0 = np.stack([b.values for b, _ in pairs])
    diff0 = np.stack([d.values for _, d in pairs])
    final_cfg = SolverConfig(
        dt=cfg.dt, t_end=cfg.t_end, scheme=cfg.scheme, record_times=(0.0, cfg.t_end)
    )
    _, _, diff_recs = integrate_pair(problem, base0, diff0, final_cfg)
    return diff0, diff_recs[-1]


def smoothing_report_from_states(
    dom: DomainSpec, gamma: float, diff0: np.ndarray, diff1: np.ndarray
) -> SmoothingReport:
    """Build the smoothing quotient report from initial/final difference states."""
    if gamma < 2:
        raise ValueError("smoothing quotients are measured for gamma >= 2")
    x = lebesgue_norm_values(dom, diff0, 2.0) ** 2
    y = lebesgue_norm_values(dom, diff1, gamma) ** gamma
    if np.any(x == 0):
        raise ValueError("ensemble contains a zero initial difference")
    quot = y / x
    idx = int(np.argmax(quot))
    lx = np.log(x)
    ly = np.log(np.maximum(y, 1e-300))
    if len(x) >= 3 and np.ptp(lx) > 0:
        fit = linregress(lx, ly)
        slope, stderr, r2 = float(fit.slope), float(fit.stderr), float(fit.rvalue**2)
    else:
        slope, stderr, r2 = math.nan, math.nan, math.nan
    return SmoothingReport(
        gamma=gamma,
        n_pairs=len(x),
        c_gamma=float(quot[idx]),
        slope=slope,
        slope_stderr=stderr,
        r_squared=r2,
        log_x=lx,
        log_y=ly,
        argmax_index=idx,
    )


def smoothing_constant(
    gamma: float,
    pairs: Sequence[tuple],
    problem: ProblemSpec,
    cfg: Optional[SolverConfig] = None,
) -> SmoothingReport:
    """Evolve pairs over a unit interval and report the worst L^gamma quotient.

    pairs is a sequence of (base_initial, difference_initial) Field tuples;
    the difference trajectory is computed cancellation-free, so quotients
    remain meaningful for ||diff(0)|| down to roundoff scale.
    """
    if cfg is None:
        cfg = SolverConfig(dt=1e-4, t_end=1.0, scheme="imex_cn_ab2")
    diff0, diff1 = _pair_finals(problem, pairs, cfg)
    return smoothing_report_from_states(problem.domain, gamma, diff0, diff1)


# ---------------------------------------------------------------------------
# gradient smoothing envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class H1SmoothingReport:
    """Two-term envelope for the end-of-interval gradient of a difference."""

    p: float
    n_pairs: int
    c_r: float
    c: float
    rho: float
    max_ratio: float          # max_i v_i / envelope_i  (== 1 at the binding sample)
    min_ratio: float          # tightness of the envelope across the ensemble
    slope: float              # d log ||grad diff(1)|| / d log ||diff(0)||
    slope_stderr: float
    small_data_exponent: float  # 1 / (p - 1)
    unit_ball_constant: float   # sqrt(c_r + c)
    unit_ball_ok: bool
    log_delta: np.ndarray
    log_grad: np.ndarray

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n_pairs": self.n_pairs,
            "c_r": self.c_r,
            "c": self.c,
            "rho": self.rho,
            "max_ratio": self.max_ratio,
            "min_ratio": self.min_ratio,
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "small_data_exponent": self.small_data_exponent,
            "unit_ball_constant": self.unit_ball_constant,
            "unit_ball_ok": self.unit_ball_ok,
        }


def _envelope_scale(v: np.ndarray, x: np.ndarray, y: np.ndarray, rho: float) -> float:
    """Smallest tau with v <= tau * (x + rho * y) pointwise."""
    return float(np.max(v / (x + rho * y)))


def h1_smoothing_fit(
    pairs: Sequence[tuple],
    problem: ProblemSpec,
    p: float,
    cfg: Optional[SolverConfig] = None,
    f_add_certified: bool = False,
) -> H1SmoothingReport:
    """Calibrate ||grad diff(1)||^2 <= C_R d^(2/(p-1)) + C d^2, d = ||diff(0)||_2.

    The gradient estimate additionally requires the derivative-growth
    envelope |f'| <= kappa0 |s|^(p-2) + l0; callers must certify it first
    and pass f_add_certified=True.

    Among all dominating two-term envelopes, the one reported minimizes the
    worst-case looseness: with tau(rho) the smallest scale making
    tau * (d^(2/(p-1)) + rho d^2) dominate, golden-section search over
    log rho maximizes the minimum ratio measured/envelope.  C_R = tau,
    C = tau * rho.
    """
    if not f_add_certified:
        raise ValueError(
            "gradient smoothing requires the derivative-growth envelope; "
            "certify it and pass f_add_certified=True"
        )
    if p <= 2:
        raise ValueError("p must exceed 2")
    if cfg is None:
        cfg = SolverConfig(dt=1e-4, t_end=1.0, scheme="imex_cn_ab2")
    dom = problem.domain
    diff0, diff1 = _pair_finals(problem, pairs, cfg)
    delta = lebesgue_norm_values(dom, diff0, 2.0)
    if np.any(delta == 0):
        raise ValueError("ensemble contains a zero initial difference")
    v = h1_seminorm_values(dom, diff1) ** 2
    x = delta ** (2.0 / (p - 1.0))
    y = delta**2

    def tightness(log_rho: float) -> float:
        rho = math.exp(log_rho)
        tau = _envelope_scale(v, x, y, rho)
        return float(np.min(v / (tau * (x + rho * y))))

    lo, hi = math.log(1e-8), math.log(1e8)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c1 = hi - invphi * (hi - lo)
    c2 = lo + invphi * (hi - lo)
    f1, f2 = tightness(c1), tightness(c2)
    for _ in range(120):
        if f1 < f2:
            lo, c1, f1 = c1, c2, f2
            c2 = lo + invphi * (hi - lo)
            f2 = tightness(c2)
        else:
            hi, c2, f2 = c2, c1, f1
            c1 = hi - invphi * (hi - lo)
            f1 = tightness(c1)
    log_rho = c1 if f1 >= f2 else c2
    rho = math.exp(log_rho)
    tau = _envelope_scale(v, x, y, rho)
    ratios = v / (tau * (x + rho * y))

    log_delta = np.log(delta)
    log_grad = 0.5 * np.log(np.maximum(v, 1e-300))
    if len(delta) >= 3 and np.ptp(log_delta) > 0:
        fit = linregress(log_delta, log_grad)
        slope, stderr = float(fit.slope), float(fit.stderr)
    else:
        slope, stderr = math.nan, math.nan

    c_r = tau
    c = tau * rho
    cu = math.sqrt(c_r + c)
    small = delta <= 1.0
    unit_ok = bool(
        np.all(
            np.sqrt(v[small])
            <= cu * delta[small] ** (1.0 / (p - 1.0)) * (1.0 + 1e-9)
        )
    )
    if ratios.max() > 1.0 + 1e-9:
        warnings.warn("fitted envelope fails to dominate; numerical issue", RuntimeWarning)
    return H1SmoothingReport(
        p=p,
        n_pairs=len(delta),
        c_r=c_r,
        c=c,
        rho=rho,
        max_ratio=float(ratios.max()),
        min_ratio=float(ratios.min()),
        slope=slope,
        slope_stderr=stderr,
        small_data_exponent=1.0 / (p - 1.0),
        unit_ball_constant=cu,
        unit_ball_ok=unit_ok,
        log_delta=log_delta,
        log_grad=log_grad,
    )
