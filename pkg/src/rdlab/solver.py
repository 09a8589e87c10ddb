"""IMEX sine-spectral time integration of the dissipative model problem.

The equation advanced here is

    u_t + lambda*u - Laplace(u) + f(u) = g,    u|_boundary = 0,

with the linear part handled implicitly in sine-coefficient space (where it
is diagonal) and the nonlinearity explicitly.  Two schemes are provided:

* ``imex_euler``: backward Euler on lambda - Laplace, forward Euler on f,

      (1 + dt*(lambda + mu_k)) uhat'_k = (u + dt*(g - f(u)))^_k

* ``imex_cn_ab2``: Crank-Nicolson on the linear part, second-order
  Adams-Bashforth on the nonlinear part, bootstrapped by one
  Crank-Nicolson/forward-Euler step.  On a linear problem (f absent) this
  scheme is exactly Crank-Nicolson.

Besides single trajectories the module co-evolves pairs (u2, ubar): u2
solves the equation itself while ubar = u1 - u2 solves the difference
equation

    ubar_t + lambda*ubar - Laplace(ubar) + f(u2 + ubar) - f(u2) = 0.

The increment f(u2 + ubar) - f(u2) is evaluated with the cancellation-free
binomial expansion of the nonlinearity, so difference trajectories retain
full relative precision down to ||ubar|| of order 1e-10.
"""

from __future__ import annotations

import dataclasses
import struct
import warnings
from typing import Iterable, Optional, Sequence

import numpy as np

from rdlab.domain import (
    DomainSpec,
    Field,
    dst_forward,
    dst_inverse,
    h1_seminorm_values,
    laplacian_eigenvalues,
    lebesgue_norm_values,
)
from rdlab.nonlinearity import DissipativityConstants, NonlinearitySpec

SCHEMES = ("imex_euler", "imex_cn_ab2")


class BlowUpError(RuntimeError):
    """Raised when the integration produces non-finite values."""

    def __init__(self, time: float, message: str = ""):
        self.time = float(time)
        super().__init__(message or f"solution blew up at t = {time:.6g}")


@dataclasses.dataclass(frozen=True)
class ProblemSpec:
    """Domain, damping coefficient, nonlinearity, and forcing of one problem."""

    domain: DomainSpec
    lam: float
    f: Optional[NonlinearitySpec]
    g: Optional[Field] = None

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.g is not None and self.g.domain != self.domain:
            raise ValueError("forcing g lives on a different domain")

    def g_values(self) -> np.ndarray:
        if self.g is None:
            return np.zeros(self.domain.shape)
        return self.g.values


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    scheme: str = "imex_cn_ab2"
    record_stride: int = 1
    record_times: Optional[tuple] = None

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (np.isfinite(self.t_end) and self.t_end >= self.dt):
            raise ValueError(f"t_end must be at least dt, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))

    def record_steps(self) -> np.ndarray:
        n = self.n_steps
        if self.record_times is not None:
            steps = {int(round(t / self.dt)) for t in self.record_times}
            steps = {min(max(s, 0), n) for s in steps}
            steps |= {0, n}
        else:
            steps = set(range(0, n + 1, self.record_stride)) | {0, n}
        return np.array(sorted(steps), dtype=int)


def graded_record_steps(dt: float, t_end: float) -> tuple:
    """Recording times refined toward t = 0.

    Every step is kept while t <= 0.01, then spacing max(dt, 1e-3) up to
    t = 0.1, then spacing 0.01.  Suitable for weighted-supremum and
    integral estimates whose integrands live near the initial time.
    """
    n = max(1, int(round(t_end / dt)))
    steps = set(range(0, min(n, int(round(0.01 / dt))) + 1))
    mid = max(1, int(round(1e-3 / dt)))
    steps |= set(range(0, min(n, int(round(0.1 / dt))) + 1, mid))
    coarse = max(1, int(round(0.01 / dt)))
    steps |= set(range(0, n + 1, coarse))
    steps.add(n)
    return tuple(dt * s for s in sorted(steps))


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """Recorded states of one run; times[0] = 0 and the final time is kept."""

    domain: DomainSpec
    times: np.ndarray
    values: np.ndarray  # shape (len(times),) + domain.shape

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> Field:
        return Field(self.domain, self.values[i])

    def final(self) -> Field:
        return self.state(len(self.times) - 1)

    def l2_series(self) -> np.ndarray:
        return lebesgue_norm_values(self.domain, self.values, 2.0)

    def lp_series(self, gamma: float) -> np.ndarray:
        return lebesgue_norm_values(self.domain, self.values, gamma)

    def h1_series(self) -> np.ndarray:
        return h1_seminorm_values(self.domain, self.values)


@dataclasses.dataclass(frozen=True)
class PairTrajectory:
    """Base trajectory u2 and difference trajectory ubar on shared times."""

    base: Trajectory
    diff: Trajectory

    @property
    def times(self) -> np.ndarray:
        return self.base.times


def _check_finite(arr: np.ndarray, t: float):
    if not np.all(np.isfinite(arr)):
        raise BlowUpError(t)


def _stability_guard(f: Optional[NonlinearitySpec], u0: np.ndarray, dt: float):
    if f is None:
        return
    fp = np.max(np.abs(f.evaluate_derivative(u0)))
    if dt * fp > 0.5:
        warnings.warn(
            f"explicit nonlinear step dt*max|f'(u0)| = {dt * fp:.3g} exceeds 0.5; "
            "the integration may be inaccurate or unstable",
            RuntimeWarning,
            stacklevel=3,
        )


def integrate(
    problem: ProblemSpec,
    u0: np.ndarray,
    cfg: SolverConfig,
    guard: bool = True,
):
    """Advance a batch of initial states; leading axes of u0 are the batch.

    Returns (times, records) where records has shape
    (n_records,) + batch_shape + grid_shape.
    """
    dom = problem.domain
    dt = cfg.dt
    n = cfg.n_steps
    rec_steps = cfg.record_steps()
    mu = laplacian_eigenvalues(dom)
    lam = problem.lam
    f = problem.f
    g = problem.g_values()

    u = np.array(u0, dtype=float)
    if guard:
        _stability_guard(f, u, dt)
    records = np.empty((len(rec_steps),) + u.shape)
    rec_pos = {int(s): i for i, s in enumerate(rec_steps)}

    def nonlinear(u_phys):
        if f is None:
            return g - np.zeros_like(u_phys)
        return g - f.evaluate(u_phys)

    if cfg.scheme == "imex_euler":
        denom = 1.0 / (1.0 + dt * (lam + mu))
        for k in range(n):
            if k in rec_pos:
                records[rec_pos[k]] = u
            w = u + dt * nonlinear(u)
            u = dst_inverse(dom, dst_forward(dom, w) * denom)
            _check_finite(u, (k + 1) * dt)
    else:
        half = 0.5 * dt * (lam + mu)
        expl = 1.0 - half
        impl = 1.0 / (1.0 + half)
        uhat = dst_forward(dom, u)
        nhat_prev = None
        for k in range(n):
            u_phys = dst_inverse(dom, uhat)
            if k in rec_pos:
                records[rec_pos[k]] = u_phys
            nhat = dst_forward(dom, nonlinear(u_phys))
            if nhat_prev is None:
                uhat = (expl * uhat + dt * nhat) * impl
            else:
                uhat = (expl * uhat + dt * (1.5 * nhat - 0.5 * nhat_prev)) * impl
            nhat_prev = nhat
            _check_finite(uhat, (k + 1) * dt)
        u = dst_inverse(dom, uhat)

    if n in rec_pos:
        records[rec_pos[n]] = u
    return dt * rec_steps, records


def integrate_pair(
    problem: ProblemSpec,
    u20: np.ndarray,
    ubar0: np.ndarray,
    cfg: SolverConfig,
    guard: bool = True,
):
    """Co-evolve base states and difference states (batched).

    Returns (times, base_records, diff_records).
    """
    if problem.f is None:
        raise ValueError("pair evolution requires a nonlinearity; use integrate")
    dom = problem.domain
    dt = cfg.dt
    n = cfg.n_steps
    rec_steps = cfg.record_steps()
    mu = laplacian_eigenvalues(dom)
    lam = problem.lam
    f = problem.f
    g = problem.g_values()

    u2 = np.array(u20, dtype=float)
    ub = np.array(ubar0, dtype=float)
    if u2.shape != ub.shape:
        u2, ub = np.broadcast_arrays(u2, ub)
        u2, ub = u2.copy(), ub.copy()
    if guard:
        _stability_guard(f, u2 + ub, dt)

    base_rec = np.empty((len(rec_steps),) + u2.shape)
    diff_rec = np.empty((len(rec_steps),) + ub.shape)
    rec_pos = {int(s): i for i, s in enumerate(rec_steps)}

    if cfg.scheme == "imex_euler":
        denom = 1.0 / (1.0 + dt * (lam + mu))
        for k in range(n):
            if k in rec_pos:
                base_rec[rec_pos[k]] = u2
                diff_rec[rec_pos[k]] = ub
            w2 = u2 + dt * (g - f.evaluate(u2))
            wb = ub - dt * f.exact_difference(u2, ub)
            u2 = dst_inverse(dom, dst_forward(dom, w2) * denom)
            ub = dst_inverse(dom, dst_forward(dom, wb) * denom)
            _check_finite(u2, (k + 1) * dt)
            _check_finite(ub, (k + 1) * dt)
    else:
        half = 0.5 * dt * (lam + mu)
        expl = 1.0 - half
        impl = 1.0 / (1.0 + half)
        u2hat = dst_forward(dom, u2)
        ubhat = dst_forward(dom, ub)
        n2_prev = None
        nb_prev = None
        for k in range(n):
            u2_phys = dst_inverse(dom, u2hat)
            ub_phys = dst_inverse(dom, ubhat)
            if k in rec_pos:
                base_rec[rec_pos[k]] = u2_phys
                diff_rec[rec_pos[k]] = ub_phys
            n2 = dst_forward(dom, g - f.evaluate(u2_phys))
            nb = dst_forward(dom, -f.exact_difference(u2_phys, ub_phys))
            if n2_prev is None:
                u2hat = (expl * u2hat + dt * n2) * impl
                ubhat = (expl * ubhat + dt * nb) * impl
            else:
                u2hat = (expl * u2hat + dt * (1.5 * n2 - 0.5 * n2_prev)) * impl
                ubhat = (expl * ubhat + dt * (1.5 * nb - 0.5 * nb_prev)) * impl
            n2_prev, nb_prev = n2, nb
            _check_finite(u2hat, (k + 1) * dt)
            _check_finite(ubhat, (k + 1) * dt)
        u2 = dst_inverse(dom, u2hat)
        ub = dst_inverse(dom, ubhat)

    if n in rec_pos:
        base_rec[rec_pos[n]] = u2
        diff_rec[rec_pos[n]] = ub
    return dt * rec_steps, base_rec, diff_rec


def step(u: Field, problem: ProblemSpec, dt: float, scheme: str = "imex_euler") -> Field:
    """Advance a single state by one time step."""
    cfg = SolverConfig(dt=dt, t_end=dt, scheme=scheme, record_stride=1)
    _, records = integrate(problem, u.values, cfg, guard=False)
    return Field(problem.domain, records[-1])


def solve(u0: Field, problem: ProblemSpec, cfg: SolverConfig) -> Trajectory:
    if u0.domain != problem.domain:
        raise ValueError("initial state lives on a different domain")
    times, records = integrate(problem, u0.values, cfg)
    return Trajectory(problem.domain, times, records)


def solve_pair(u20: Field, ubar0: Field, problem: ProblemSpec, cfg: SolverConfig) -> PairTrajectory:
    if u20.domain != problem.domain or ubar0.domain != problem.domain:
        raise ValueError("initial states live on a different domain")
    times, base, diff = integrate_pair(problem, u20.values, ubar0.values, cfg)
    return PairTrajectory(
        base=Trajectory(problem.domain, times, base),
        diff=Trajectory(problem.domain, times, diff),
    )


@dataclasses.dataclass
class EnergyReport:
    """Smallest constants closing the two differential energy inequalities.

    c_l2 is the least c with

        d/dt ||u||_2^2 + lambda ||u||_2^2 + ||u||_p^p <= c (||g||_2^2 + 1)

    along the recorded trajectory (forward differences over recording
    intervals, lower-order terms at the left endpoint), and c_lp the least c
    for the L^p energy layer

        d/dt ||u||_p^p + lambda ||u||_p^p + alpha ||u||_{2p-2}^{2p-2}
            <= c (||g||_2^2 + 1).

    reliable is False when the recording intervals are too coarse for the
    forward differences to be trusted (spacing above 0.01).
    """

    c_l2: float
    c_lp: float
    times: np.ndarray
    residual_l2: np.ndarray
    residual_lp: np.ndarray
    g_norm_sq: float
    reliable: bool

    def to_dict(self):
        return {
            "c_l2": float(self.c_l2),
            "c_lp": float(self.c_lp),
            "g_norm_sq": float(self.g_norm_sq),
            "reliable": bool(self.reliable),
        }


def energy_monitor(tr: Trajectory, problem: ProblemSpec, c: DissipativityConstants) -> EnergyReport:
    if len(tr) < 2:
        raise ValueError("need at least two recorded states")
    dom = tr.domain
    p = c.p
    dts = np.diff(tr.times)
    reliable = bool(np.max(dts) <= 0.01 + 1e-12)

    g_sq = float(lebesgue_norm_values(dom, problem.g_values(), 2.0) ** 2)
    weight = g_sq + 1.0

    l2sq = tr.l2_series() ** 2
    lpp = tr.lp_series(p) ** p
    l2pow = tr.lp_series(2.0 * p - 2.0) ** (2.0 * p - 2.0)

    res_l2 = (l2sq[1:] - l2sq[:-1]) / dts + problem.lam * l2sq[:-1] + lpp[:-1]
    res_lp = (lpp[1:] - lpp[:-1]) / dts + problem.lam * lpp[:-1] + c.alpha * l2pow[:-1]

    c_l2 = float(np.max(np.maximum(res_l2, 0.0)) / weight)
    c_lp = float(np.max(np.maximum(res_lp, 0.0)) / weight)
    return EnergyReport(
        c_l2=c_l2,
        c_lp=c_lp,
        times=tr.times[:-1],
        residual_l2=np.maximum(res_l2, 0.0) / weight,
        residual_lp=np.maximum(res_lp, 0.0) / weight,
        g_norm_sq=g_sq,
        reliable=reliable,
    )


@dataclasses.dataclass(frozen=True)
class GronwallReport:
    """Worst ratio of ||diff(t)||^2 to its exponential envelope over pairs."""

    mu: float
    tol_factor: float
    times: np.ndarray
    max_ratio_series: np.ndarray   # per time, max over pairs
    worst_ratio: float
    worst_pair: int
    worst_time: float
    passed: bool

    def to_dict(self):
        return {
            "mu": float(self.mu),
            "tol_factor": float(self.tol_factor),
            "worst_ratio": float(self.worst_ratio),
            "worst_pair": int(self.worst_pair),
            "worst_time": float(self.worst_time),
            "passed": bool(self.passed),
        }


def gronwall_check(
    problem: ProblemSpec,
    base0: np.ndarray,
    diff0: np.ndarray,
    mu: float,
    cfg: SolverConfig,
    tol_factor: float = 1e-6,
) -> GronwallReport:
    """Verify ||diff(t)||_2^2 <= exp(mu t) ||diff(0)||_2^2 (1 + tol_factor).

    base0 and diff0 stack the pair initial data along the leading axis; the
    envelope is checked at every recorded time of the batched pair run.
    """
    dom = problem.domain
    times, _, diff_recs = integrate_pair(problem, base0, diff0, cfg)
    times = np.asarray(times)
    d_sq = lebesgue_norm_values(dom, diff_recs, 2.0) ** 2  # (n_times, n_pairs)
    d0_sq = d_sq[0]
    if np.any(d0_sq == 0):
        raise ValueError("ensemble contains a zero initial difference")
    ratios = d_sq / (np.exp(mu * times)[:, None] * d0_sq[None, :])
    flat = int(np.argmax(ratios))
    it, ip = np.unravel_index(flat, ratios.shape)
    worst = float(ratios[it, ip])
    return GronwallReport(
        mu=mu,
        tol_factor=tol_factor,
        times=times,
        max_ratio_series=ratios.max(axis=1),
        worst_ratio=worst,
        worst_pair=int(ip),
        worst_time=float(times[it]),
        passed=bool(worst <= 1.0 + tol_factor),
    )


def export_norm_series(tr: Trajectory, p: float, path):
    """Write t, ||u||_2, ||u||_p, ||grad u|| as CSV with LF line endings."""
    import csv

    l2 = tr.l2_series()
    lp = tr.lp_series(p)
    h1 = tr.h1_series()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "l2_norm", "lp_norm", "h1_seminorm"])
        for i, t in enumerate(tr.times):
            w.writerow([repr(float(t)), repr(float(l2[i])), repr(float(lp[i])), repr(float(h1[i]))])


_HEADER = struct.Struct("<iidq")  # N, M, L, count (little-endian)


def dump_states(path, dom: DomainSpec, states: np.ndarray):
    """Binary state dump: int32 N, int32 M, float64 L, int64 count, then
    count * M^N little-endian float64 values in C order."""
    states = np.asarray(states, dtype=float)
    if states.ndim == dom.dimension:
        states = states[None]
    count = states.shape[0]
    flat = states.reshape(count, dom.size)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(dom.dimension, dom.points_per_axis, dom.side_length, count))
        fh.write(np.ascontiguousarray(flat, dtype="<f8").tobytes())


def load_states(path):
    """Inverse of dump_states; returns (DomainSpec, states array)."""
    with open(path, "rb") as fh:
        n_dim, m, side, count = _HEADER.unpack(fh.read(_HEADER.size))
        dom = DomainSpec(dimension=n_dim, side_length=side, points_per_axis=m)
        data = np.frombuffer(fh.read(count * dom.size * 8), dtype="<f8")
    return dom, data.reshape((count,) + dom.shape).copy()
