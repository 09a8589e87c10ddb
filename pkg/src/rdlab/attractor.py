"""Long-time dynamics toolkit: cloud sampling, epsilon-nets, dimensions.

The global attractor is probed empirically: an ensemble of initial states is
evolved past a spin-up time and sampled along its tail to form a point cloud;
equilibria are located by a damped spectral fixed-point iteration and can be
appended to the cloud.  On clouds we build greedy epsilon-nets (with an
exhaustive covering verification), transport nets through the time-1 solution
map to produce coverings in stronger norms, and estimate correlation
dimensions by a fixed-mass log-log fit.

Distances come in three flavors, selected by a Norm tag: Lebesgue L^gamma
(gamma >= 1), including L2, and the H1 seminorm.  H1-based measurements are
gated behind f_add_certified=True because their validity rests on the
derivative-growth envelope |f'(s)| <= kappa0 |s|^(p-2) + l0.
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
    dst_forward,
    dst_inverse,
    laplacian_eigenvalues,
    lebesgue_norm_values,
)
from rdlab.profiles import eigenmode_mixture
from rdlab.solver import ProblemSpec, SolverConfig, Trajectory, integrate


# ---------------------------------------------------------------------------
# norm tags and pairwise distances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Norm:
    """Tag selecting the metric used for distances between states."""

    kind: str
    gamma: float = 2.0

    def __post_init__(self):
        if self.kind not in ("lp", "h1"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "lp" and self.gamma < 1:
            raise ValueError("Lebesgue exponent must be >= 1")

    @classmethod
    def lp(cls, gamma: float) -> "Norm":
        return cls(kind="lp", gamma=float(gamma))

    @classmethod
    def h1(cls) -> "Norm":
        return cls(kind="h1")

    @property
    def label(self) -> str:
        if self.kind == "h1":
            return "h1"
        return f"l{self.gamma:g}"

    @property
    def requires_envelope(self) -> bool:
        return self.kind == "h1"


def _euclid_embedding(dom: DomainSpec, states: np.ndarray, norm: Norm) -> np.ndarray:
    """Flatten states to vectors whose Euclidean distance equals the norm."""
    n = states.shape[0]
    if norm.kind == "h1":
        coeff = dst_forward(dom, states)
        mu = laplacian_eigenvalues(dom)
        scale = np.sqrt(dom.coefficient_weight * mu)
        return (coeff * scale).reshape(n, -1)
    # L2: quadrature weight h^N per grid point
    return states.reshape(n, -1) * math.sqrt(dom.cell_volume)


def _euclid_pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.clip(sq, 0.0, None, out=sq)
    return np.sqrt(sq)


def _abs_power(x: np.ndarray, gamma: float) -> np.ndarray:
    ax = np.abs(x)
    if gamma == 2.0:
        return ax * ax
    if gamma == int(gamma) and 1 <= gamma <= 8:
        out = ax.copy()
        for _ in range(int(gamma) - 1):
            out *= ax
        return out
    return ax**gamma

def _blocked_power_sums(
    fa: np.ndarray, fb: np.ndarray, gamma: float, block_elems: int
) -> np.ndarray:
    """sum_m |fa[i,m] - fb[j,m]|^gamma computed in row blocks."""
    rows = max(1, block_elems // max(1, fb.shape[0] * fa.shape[1]))
    out = np.empty((fa.shape[0], fb.shape[0]))
    for start in range(0, fa.shape[0], rows):
        stop = min(start + rows, fa.shape[0])
        diff = fa[start:stop, None, :] - fb[None, :, :]
        out[start:stop] = _abs_power(diff, gamma).sum(axis=2)
    return out


def pairwise_distances(
    dom: DomainSpec,
    a: np.ndarray,
    b: Optional[np.ndarray] = None,
    norm: Norm = Norm.lp(2.0),
    block_elems: int = 1 << 24,
    method: str = "auto",
) -> np.ndarray:
    """Distance matrix between two stacks of states (rows of a vs rows of b).

    With method="auto", L2 and H1 go through a Gram-matrix evaluation (fast,
    but its cancellation noise scales with the state norms rather than the
    distances); method="direct" subtracts states pairwise in row blocks,
    keeping the relative error of every distance near machine epsilon even
    for nearby states.  Other Lebesgue exponents are always computed
    directly.
    """
    if method not in ("auto", "direct"):
        raise ValueError("method must be 'auto' or 'direct'")
    sym = b is None
    if sym:
        b = a
    if norm.kind == "h1" or (norm.kind == "lp" and norm.gamma == 2.0):
        ea = _euclid_embedding(dom, a, norm)
        eb = ea if sym else _euclid_embedding(dom, b, norm)
        if method == "direct":
            d = np.sqrt(_blocked_power_sums(ea, eb, 2.0, block_elems))
        else:
            d = _euclid_pairwise(ea, eb)
    else:
        fa = a.reshape(a.shape[0], -1)
        fb = b.reshape(b.shape[0], -1)
        d = (dom.cell_volume * _blocked_power_sums(fa, fb, norm.gamma, block_elems)) ** (
            1.0 / norm.gamma
        )
    if sym:
        np.fill_diagonal(d, 0.0)
    return d


# ---------------------------------------------------------------------------
# point clouds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointCloud:
    """A stack of states on a common domain, with sampling metadata."""

    domain: DomainSpec
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != self.domain.dimension + 1:
            raise ValueError(
                f"expected stacked states of shape (n, {self.domain.shape}), "
                f"got {vals.shape}"
            )
        if vals.shape[1:] != self.domain.shape:
            raise ValueError(f"state shape {vals.shape[1:]} != domain {self.domain.shape}")
        if not np.isfinite(vals).all():
            raise ValueError("cloud contains non-finite values")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]

    def state(self, i: int) -> Field:
        return Field(self.domain, self.values[i])

    @classmethod
    def from_fields(cls, fields: Sequence[Field], meta: Optional[dict] = None) -> "PointCloud":
        if not fields:
            raise ValueError("need at least one field")
        dom = fields[0].domain
        for f in fields:
            if f.domain != dom:
                raise ValueError("fields live on different domains")
        return cls(dom, np.stack([f.values for f in fields]), dict(meta or {}))

    def with_extra(self, fields: Sequence[Field]) -> "PointCloud":
        extra = np.stack([f.values for f in fields])
        return PointCloud(self.domain, np.concatenate([self.values, extra]), dict(self.meta))

    def subsample(self, step: int) -> "PointCloud":
        return PointCloud(self.domain, self.values[::step], dict(self.meta))

    def translated(self, z: Field) -> "PointCloud":
        """The cloud shifted by -z (distances to z become norms of members)."""
        if z.domain != self.domain:
            raise ValueError("translation state lives on a different domain")
        meta = dict(self.meta)
        meta["translated"] = True
        return PointCloud(self.domain, self.values - z.values, meta)


def sample_attractor(
    problem: ProblemSpec,
    ensemble_size: int = 24,
    t_spin: float = 2.0,
    n_samples: int = 40,
    delta_sample: float = 0.025,
    seed: int = 0,
    cfg: Optional[SolverConfig] = None,
    amplitudes: Optional[Sequence[float]] = None,
    stab_tol: float = 1e-3,
) -> PointCloud:
    """Sample the long-time state distribution into a point cloud.

    An ensemble of random low-mode mixtures with log-spaced amplitudes (so
    that both near-zero seeds, which traverse slow invariant structures, and
    order-one seeds are represented) is evolved for t_spin, then sampled
    every delta_sample for n_samples snapshots per member.

    Spin-up stabilization is checked by comparing each member at t_spin with
    its state one sampling interval earlier; the largest L2 drift is stored
    in meta["max_drift"] and a RuntimeWarning is raised when it exceeds
    stab_tol.  Slowly traveling members are expected when the dynamics has
    non-trivial invariant sets; the warning flags that the cloud contains
    transient arcs rather than equilibria alone.
    """
    if ensemble_size < 1 or n_samples < 1:
        raise ValueError("ensemble_size and n_samples must be positive")
    dom = problem.domain
    rng = np.random.default_rng(seed)
    if amplitudes is None:
        amplitudes = np.logspace(-8, 0, ensemble_size)
    else:
        amplitudes = np.asarray(list(amplitudes), dtype=float)
        if len(amplitudes) != ensemble_size:
            raise ValueError("need one amplitude per ensemble member")
    u0 = np.stack(
        [a * eigenmode_mixture(dom, rng, n_modes=10).values for a in amplitudes]
    )
    t_check = max(t_spin - delta_sample, 0.5 * t_spin)
    sample_times = [t_spin + j * delta_sample for j in range(n_samples)]
    if cfg is None:
        cfg = SolverConfig(dt=1e-4, t_end=sample_times[-1], scheme="imex_cn_ab2")
    rec_cfg = SolverConfig(
        dt=cfg.dt,
        t_end=sample_times[-1],
        scheme=cfg.scheme,
        record_times=tuple([t_check] + sample_times),
    )
    times, records = integrate(problem, u0, rec_cfg)
    # records: (n_rec, ensemble, *shape); locate the check/sample indices
    times = np.asarray(times)
    idx_check = int(np.argmin(np.abs(times - t_check)))
    idx_first = int(np.argmin(np.abs(times - t_spin)))
    drift = lebesgue_norm_values(dom, records[idx_first] - records[idx_check], 2.0)
    max_drift = float(drift.max())
    stabilized = max_drift <= stab_tol
    if not stabilized:
        warnings.warn(
            f"spin-up drift {max_drift:.3e} exceeds {stab_tol:.1e}; "
            "cloud includes still-moving members",
            RuntimeWarning,
        )
    snaps = records[idx_first:]
    cloud_vals = snaps.reshape(-1, *dom.shape)
    meta = {
        "seed": seed,
        "ensemble_size": ensemble_size,
        "t_spin": t_spin,
        "delta_sample": delta_sample,
        "n_samples": int(snaps.shape[0]),
        "max_drift": max_drift,
        "stabilized": stabilized,
        "stab_tol": stab_tol,
        "amplitudes": [float(a) for a in amplitudes],
    }
    return PointCloud(dom, cloud_vals, meta)


def find_equilibrium(
    problem: ProblemSpec,
    seed_field: Field,
    damping: float = 0.3,
    tol: float = 1e-9,
    max_iter: int = 20000,
) -> Field:
    """Locate a steady state of lam*u - Lap(u) + f(u) = g by damped iteration.

    The update is phi <- (1-w) phi + w (lam - Lap)^{-1} (g - f(phi)), solved
    spectrally; convergence is declared when the L2 residual of the steady
    equation drops below tol.  The achievable residual floor scales like
    mu_max * machine epsilon * ||phi|| (mu_max the largest eigenvalue), about
    3e-10 at M = 255; tolerances below that cannot converge.
    """
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    dom = problem.domain
    if seed_field.domain != dom:
        raise ValueError("seed lives on a different domain")
    mu = laplacian_eigenvalues(dom)
    denom = problem.lam + mu
    g_vals = problem.g_values()
    phi = seed_field.values.copy()
    f = problem.f
    for _ in range(max_iter):
        rhs = g_vals - (f.evaluate(phi) if f is not None else 0.0)
        target = dst_forward(dom, rhs) / denom
        phi_hat = dst_forward(dom, phi)
        resid_vals = dst_inverse(dom, denom * phi_hat) - rhs
        resid = float(lebesgue_norm_values(dom, resid_vals, 2.0))
        if resid <= tol:
            return Field(dom, phi)
        phi_hat = (1.0 - damping) * phi_hat + damping * target
        phi = dst_inverse(dom, phi_hat)
    raise RuntimeError(
        f"equilibrium iteration did not reach tol={tol:g} in {max_iter} steps "
        f"(residual {resid:.3e})"
    )


# ---------------------------------------------------------------------------
# attraction distance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttractionReport:
    """Hausdorff-style distance from an evolving bundle to a fixed cloud."""

    norm_label: str
    times: np.ndarray
    distances: np.ndarray      # max over bundle of min over cloud, per time
    final_distance: float
    monotone_from: float       # earliest time after which the series never rises

    def to_dict(self) -> dict:
        return {
            "norm": self.norm_label,
            "times": [float(t) for t in self.times],
            "distances": [float(d) for d in self.distances],
            "final_distance": self.final_distance,
            "monotone_from": self.monotone_from,
        }


def attraction_distance(
    bundle: Sequence[Trajectory],
    cloud: PointCloud,
    norm: Norm = Norm.lp(2.0),
    f_add_certified: bool = False,
) -> AttractionReport:
    """Track sup over bundle members of the distance to the cloud over time."""
    if norm.requires_envelope and not f_add_certified:
        raise ValueError(
            "H1 distances require the derivative-growth envelope; "
            "certify it and pass f_add_certified=True"
        )
    if not bundle:
        raise ValueError("bundle must be nonempty")
    times = np.asarray(bundle[0].times)
    for tr in bundle:
        if tr.domain != cloud.domain:
            raise ValueError("bundle and cloud live on different domains")
        if len(tr.times) != len(times) or not np.allclose(tr.times, times):
            raise ValueError("bundle members must share recording times")
    dists = np.empty(len(times))
    for i in range(len(times)):
        states = np.stack([tr.values[i] for tr in bundle])
        d = pairwise_distances(cloud.domain, states, cloud.values, norm)
        dists[i] = d.min(axis=1).max()
    rising = np.nonzero(dists[1:] > dists[:-1] * (1.0 + 1e-9))[0]
    monotone_from = float(times[rising[-1] + 1]) if len(rising) else float(times[0])
    return AttractionReport(
        norm_label=norm.label,
        times=times,
        distances=dists,
        final_distance=float(dists[-1]),
        monotone_from=monotone_from,
    )


# ---------------------------------------------------------------------------
# epsilon-nets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpsilonNet:
    """A finite epsilon-covering of a point cloud, with verification data."""

    domain: DomainSpec
    values: np.ndarray         # (m, *shape) net points (members of the cloud)
    indices: tuple             # positions of the net points inside the cloud
    eps: float
    norm_label: str
    covering_radius: float     # max over cloud of min distance to the net
    verified: bool             # covering_radius < eps, checked exhaustively

    def __len__(self) -> int:
        return self.values.shape[0]

    def to_dict(self) -> dict:
        return {
            "size": len(self),
            "eps": self.eps,
            "norm": self.norm_label,
            "covering_radius": self.covering_radius,
            "verified": self.verified,
        }


def greedy_epsilon_net(cloud: PointCloud, eps: float, norm: Norm = Norm.lp(2.0)) -> EpsilonNet:
    """Farthest-point greedy net: add the worst-covered point until covered.

    The first net point is cloud member 0 (deterministic).  After the greedy
    loop the covering property is re-verified exhaustively over the whole
    cloud; `verified` reports that check, not the loop's exit condition.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if len(cloud) == 0:
        raise ValueError("cannot cover an empty cloud")
    d = pairwise_distances(cloud.domain, cloud.values, None, norm)
    indices = [0]
    mins = d[0].copy()
    while mins.max() >= eps:
        j = int(np.argmax(mins))
        indices.append(j)
        np.minimum(mins, d[j], out=mins)
    cover = float(d[indices].min(axis=0).max())
    return EpsilonNet(
        domain=cloud.domain,
        values=cloud.values[indices],
        indices=tuple(indices),
        eps=float(eps),
        norm_label=norm.label,
        covering_radius=cover,
        verified=bool(cover < eps),
    )


def farthest_point_subset(cloud: PointCloud, m: int, norm: Norm = Norm.lp(2.0)) -> PointCloud:
    """A well-spread m-point subset by farthest-point traversal (start 0).

    Useful before dimension estimation when the sampling protocol piles
    points up near slow regions: the subset has pairwise separations on the
    order of the cloud's extent divided by m, which keeps every fitted scale
    far above roundoff.
    """
    if m < 1:
        raise ValueError("subset size must be positive")
    if m >= len(cloud):
        return cloud
    d = pairwise_distances(cloud.domain, cloud.values, None, norm)
    indices = [0]
    mins = d[0].copy()
    for _ in range(m - 1):
        j = int(np.argmax(mins))
        indices.append(j)
        np.minimum(mins, d[j], out=mins)
    meta = dict(cloud.meta)
    meta["farthest_point_subset"] = m
    return PointCloud(cloud.domain, cloud.values[indices], meta)


@dataclass(frozen=True)
class TransportReport:
    """Covering quality of a net pushed through the time-1 solution map."""

    eps: float
    radius: float              # lip * eps**exponent, the claimed covering radius
    lip: float
    exponent: float
    norm_label: str
    n_cloud: int
    n_net: int
    coverage_fraction: float   # fraction of transported cloud within radius
    worst_cover_ratio: float   # max over cloud of (distance to net) / radius
    assigned_ratio_max: float  # max y-dist / x-dist**exponent over assignments
    passed: bool

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "radius": self.radius,
            "lip": self.lip,
            "exponent": self.exponent,
            "norm": self.norm_label,
            "n_cloud": self.n_cloud,
            "n_net": self.n_net,
            "coverage_fraction": self.coverage_fraction,
            "worst_cover_ratio": self.worst_cover_ratio,
            "assigned_ratio_max": self.assigned_ratio_max,
            "passed": self.passed,
        }


def apply_time_map(
    problem: ProblemSpec,
    states: np.ndarray,
    horizon: float = 1.0,
    cfg: Optional[SolverConfig] = None,
) -> np.ndarray:
    """Push a stack of states through the solution map over `horizon`."""
    if cfg is None:
        cfg = SolverConfig(dt=1e-4, t_end=horizon, scheme="imex_cn_ab2")
    run = SolverConfig(
        dt=cfg.dt, t_end=horizon, scheme=cfg.scheme, record_times=(horizon,)
    )
    _, records = integrate(problem, states, run)
    return records[-1]


def transport_net(
    cloud: PointCloud,
    net: EpsilonNet,
    problem: ProblemSpec,
    lip: float,
    exponent: float,
    norm_y: Norm,
    cfg: Optional[SolverConfig] = None,
    transported: Optional[np.ndarray] = None,
    f_add_certified: bool = False,
) -> TransportReport:
    """Check that the transported net covers the transported cloud.

    Every cloud member sits within net.eps of its nearest net point in the
    L2 metric; after one time unit the images should sit within
    lip * eps**exponent of the corresponding net images in the target norm.
    `transported` may carry precomputed time-1 images of the cloud (in cloud
    order) to avoid re-integrating.
    """
    if norm_y.requires_envelope and not f_add_certified:
        raise ValueError(
            "H1 transport requires the derivative-growth envelope; "
            "certify it and pass f_add_certified=True"
        )
    if not 0 < net.eps <= 1:
        raise ValueError("transport is formulated for net radii eps in (0, 1]")
    if transported is None:
        transported = apply_time_map(problem, cloud.values, 1.0, cfg)
    if transported.shape != cloud.values.shape:
        raise ValueError("transported states must match the cloud in shape")
    net_images = transported[list(net.indices)]
    radius = lip * net.eps**exponent

    d_y = pairwise_distances(cloud.domain, transported, net_images, norm_y)
    cover = d_y.min(axis=1)
    coverage = float(np.mean(cover <= radius * (1.0 + 1e-12)))
    worst = float(cover.max() / radius)

    d_x = pairwise_distances(cloud.domain, cloud.values, net.values, Norm.lp(2.0))
    assigned = np.argmin(d_x, axis=1)
    rows = np.arange(len(cloud))
    x = d_x[rows, assigned]
    y = d_y[rows, assigned]
    pos = x > 0
    assigned_ratio = float((y[pos] / x[pos] ** exponent).max()) if pos.any() else 0.0

    return TransportReport(
        eps=net.eps,
        radius=float(radius),
        lip=float(lip),
        exponent=float(exponent),
        norm_label=norm_y.label,
        n_cloud=len(cloud),
        n_net=len(net),
        coverage_fraction=coverage,
        worst_cover_ratio=worst,
        assigned_ratio_max=assigned_ratio,
        passed=bool(coverage == 1.0),
    )


# ---------------------------------------------------------------------------
# correlation dimension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DimensionEstimate:
    """Correlation-dimension fit C(eps) ~ eps^d on quantile-chosen scales."""

    norm_label: str
    dimension: float
    stderr: float
    band: float                # 1.96 * stderr
    r_squared: float
    n_points: int
    n_pairs: int
    n_scales: int
    degenerate: bool
    log_eps: np.ndarray
    log_c: np.ndarray

    def to_dict(self) -> dict:
        return {
            "norm": self.norm_label,
            "dimension": self.dimension,
            "stderr": self.stderr,
            "band": self.band,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "n_pairs": self.n_pairs,
            "n_scales": self.n_scales,
            "degenerate": self.degenerate,
        }


def correlation_dimension(
    cloud: PointCloud,
    norm: Norm = Norm.lp(2.0),
    n_scales: int = 16,
    level_hi: float = 0.05,
    min_pairs: int = 32,
    f_add_certified: bool = False,
) -> DimensionEstimate:
    """Estimate the correlation dimension of a cloud in the tagged metric.

    Scales are chosen by quantile levels of the pairwise-distance
    distribution (fixed-mass variant), which keeps every fitted point backed
    by at least min_pairs pairs.  Fewer than five distinct usable scales
    flags the estimate as degenerate; with fewer than two the dimension is
    reported as 0.
    """
    if norm.requires_envelope and not f_add_certified:
        raise ValueError(
            "H1 dimensions require the derivative-growth envelope; "
            "certify it and pass f_add_certified=True"
        )
    n = len(cloud)

    def degenerate_zero(n_pairs: int) -> DimensionEstimate:
        return DimensionEstimate(
            norm_label=norm.label,
            dimension=0.0,
            stderr=0.0,
            band=0.0,
            r_squared=math.nan,
            n_points=n,
            n_pairs=n_pairs,
            n_scales=0,
            degenerate=True,
            log_eps=np.empty(0),
            log_c=np.empty(0),
        )

    if n < 2:
        return degenerate_zero(0)
    d = pairwise_distances(cloud.domain, cloud.values, None, norm, method="direct")
    iu = np.triu_indices(n, k=1)
    dists = np.sort(d[iu])
    n_pairs = len(dists)
    if dists[-1] == 0:
        return degenerate_zero(n_pairs)

    level_lo = max(min_pairs / n_pairs, 1e-5)
    if level_lo >= level_hi:
        level_lo = 1.0 / n_pairs
    levels = np.geomspace(level_lo, min(level_hi, 1.0), n_scales)
    eps_list = []
    c_list = []
    for lev in levels:
        idx = min(max(int(math.ceil(lev * n_pairs)) - 1, 0), n_pairs - 1)
        eps = dists[idx]
        if eps <= 0:
            continue
        count = int(np.searchsorted(dists, eps, side="right"))
        if eps_list and eps == eps_list[-1]:
            continue
        eps_list.append(eps)
        c_list.append(count / n_pairs)

    if len(eps_list) < 2:
        return degenerate_zero(n_pairs)
    log_eps = np.log(np.asarray(eps_list))
    log_c = np.log(np.asarray(c_list))
    fit = linregress(log_eps, log_c)
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    return DimensionEstimate(
        norm_label=norm.label,
        dimension=float(fit.slope),
        stderr=stderr,
        band=1.96 * stderr,
        r_squared=float(fit.rvalue**2),
        n_points=n,
        n_pairs=n_pairs,
        n_scales=len(eps_list),
        degenerate=len(eps_list) < 5,
        log_eps=log_eps,
        log_c=log_c,
    )


@dataclass(frozen=True)
class DimensionBoundReport:
    """Cross-norm dimension comparisons against their theoretical factors."""

    estimates: dict            # label -> DimensionEstimate
    checks: tuple              # dicts: name, lhs, rhs, slack, passed
    passed: bool

    def to_dict(self) -> dict:
        return {
            "estimates": {k: v.to_dict() for k, v in self.estimates.items()},
            "checks": list(self.checks),
            "passed": self.passed,
        }


def dimension_bound_check(
    cloud: PointCloud,
    p: float,
    gammas: Sequence[float] = (),
    z0: Optional[Field] = None,
    f_add_certified: bool = False,
    n_scales: int = 16,
) -> DimensionBoundReport:
    """Compare measured dimensions across norms with their inflation factors.

    With d2 the L2 correlation dimension, the checks are
      dim_{L^p}  <= (p/2)  d2,
      dim_{L^g}  <= (g/2)  d2   on the cloud translated by z0 (if given),
      dim_{H1}   <= (p-1)  d2   (only when f_add_certified),
    each padded by the combined 95% fit bands plus a 1e-9 slack.
    """
    estimates = {}
    d2 = correlation_dimension(cloud, Norm.lp(2.0), n_scales=n_scales)
    estimates["l2"] = d2
    checks = []

    def add_check(name: str, est: DimensionEstimate, factor: float):
        estimates[name] = est
        slack = est.band + factor * d2.band + 1e-9
        rhs = factor * d2.dimension
        ok = est.degenerate or d2.degenerate or est.dimension <= rhs + slack
        checks.append(
            {
                "name": name,
                "measured": est.dimension,
                "factor": factor,
                "reference": d2.dimension,
                "bound": rhs,
                "slack": slack,
                "passed": bool(ok),
            }
        )

    add_check(
        f"l{p:g}",
        correlation_dimension(cloud, Norm.lp(p), n_scales=n_scales),
        p / 2.0,
    )
    for gamma in gammas:
        target = cloud.translated(z0) if z0 is not None else cloud
        add_check(
            f"l{gamma:g}_translated" if z0 is not None else f"l{gamma:g}",
            correlation_dimension(target, Norm.lp(gamma), n_scales=n_scales),
            gamma / 2.0,
        )
    if f_add_certified:
        add_check(
            "h1",
            correlation_dimension(cloud, Norm.h1(), f_add_certified=True, n_scales=n_scales),
            p - 1.0,
        )
    passed = all(c["passed"] for c in checks)
    return DimensionBoundReport(estimates=estimates, checks=tuple(checks), passed=passed)
