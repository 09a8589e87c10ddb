"""Measurement suites behind the CLI subcommands.

Each suite consumes a validated ExperimentConfig, draws every random input
up front from a generator seeded by [run] rng_seed, runs its experiment, and
returns a SuiteResult: a JSON-ready payload (plot series embedded), a list
of PASS/FAIL checks (failures carry their witness), and CSV sweeps keyed by
filename.  Wall-clock timing is the caller's business; nothing here reads
the clock, which keeps reports byte-deterministic.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from rdlab.attractor import (
    Norm,
    PointCloud,
    apply_time_map,
    attraction_distance,
    correlation_dimension,
    dimension_bound_check,
    farthest_point_subset,
    find_equilibrium,
    greedy_epsilon_net,
    pairwise_distances,
    sample_attractor,
    transport_net,
)
from rdlab.config import ConfigError, ExperimentConfig
from rdlab.domain import Field, dst_forward, dst_inverse, laplacian_eigenvalues, lebesgue_norm_values
from rdlab.estimates import (
    exponent_table,
    h1_smoothing_fit,
    smoothing_report_from_states,
    verify_ak_bk,
    verify_lemma23,
)
from rdlab.nonlinearity import ScanSpec, certify_conditions, certify_decomposition, certify_f_add, check_corollary, decompose, monotonicity_constant_oracle
from rdlab.profiles import (
    direction_bank,
    eigenmode_mixture,
    flattest_field,
    rough_field,
    spiked_plateau,
    spiky_field,
    spiky_power_range,
)
from rdlab.reporting import check, write_json
from rdlab.solver import (
    PairTrajectory,
    SolverConfig,
    Trajectory,
    dump_states,
    energy_monitor,
    graded_record_steps,
    gronwall_check,
    integrate,
    integrate_pair,
    step,
)


@dataclass
class SuiteResult:
    name: str
    payload: dict
    checks: list
    csvs: dict = field(default_factory=dict)   # filename -> (header, rows)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def _require_f(cfg: ExperimentConfig):
    if cfg.f is None:
        raise ConfigError(cfg.path, None, "this suite requires [problem] f_coefficients")
    return cfg.f


def _texture_stack(dom, rng, amplitudes, p_for_spikes: float = 4.0) -> np.ndarray:
    """One state per amplitude, cycling smooth / rough / concentrated shapes."""
    lo, hi = spiky_power_range(dom, p_for_spikes)
    spike_target = min(hi * 0.5, max(lo * 1.5, 10.0))
    out = []
    for i, amp in enumerate(amplitudes):
        kind = i % 3
        if kind == 0:
            f = eigenmode_mixture(dom, rng, n_modes=8, l2=amp)
        elif kind == 1:
            f = rough_field(dom, rng, l2=amp)
        else:
            f = spiky_field(dom, p_for_spikes, spike_target, l2=amp)
        out.append(f.values)
    return np.stack(out)


def _mixture_stack(dom, rng, n, l2, n_modes=8) -> np.ndarray:
    return np.stack([eigenmode_mixture(dom, rng, n_modes=n_modes, l2=l2).values for _ in range(n)])


def _steady_residual(problem, phi: Field) -> float:
    dom = problem.domain
    mu = laplacian_eigenvalues(dom)
    lin = dst_inverse(dom, (problem.lam + mu) * dst_forward(dom, phi.values))
    f_vals = problem.f.evaluate(phi.values) if problem.f is not None else 0.0
    resid = lin + f_vals - problem.g_values()
    return float(lebesgue_norm_values(dom, resid, 2.0))


# ---------------------------------------------------------------------------
# certify-nonlinearity
# ---------------------------------------------------------------------------


def run_certify(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    scan = cfg.scan or ScanSpec()
    rep = certify_conditions(f, cfg.constants, scan)
    checks = [
        check(
            f"condition_{c.name}",
            c.passed and c.tail_ok,
            margin=c.margin,
            argmin=c.argmin,
            tail_ok=c.tail_ok,
        )
        for c in rep.checks
    ]
    rows = [(c.name, c.margin, c.argmin, c.passed, c.tail_ok) for c in rep.checks]
    return SuiteResult(
        name="certify-nonlinearity",
        payload={"certification": rep.to_dict()},
        checks=checks,
        csvs={"certification.csv": (("condition", "margin", "argmin", "passed", "tail_ok"), rows)},
    )


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------


def run_decompose(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    c = cfg.constants
    scan = cfg.scan or ScanSpec()
    s = cfg.suite("decompose")
    d = decompose(f, c, scan, oracle_samples=s["oracle_samples"], oracle_seed=s["oracle_seed"])
    recert = certify_decomposition(d, scan)

    rng = np.random.default_rng(cfg.seed)
    n = s["corollary_samples"]
    bound = s["corollary_s_bound"]
    s1 = rng.uniform(-bound, bound, n)
    s2 = rng.uniform(-bound, bound, n)
    r = rng.uniform(0.0, s["corollary_r_max"], n)
    viol = check_corollary(f, d, s1, s2, r)

    checks = [
        check(
            f"condition_{chk.name}",
            chk.passed and chk.tail_ok,
            margin=chk.margin,
            argmin=chk.argmin,
        )
        for chk in recert.checks
    ]
    checks.append(
        check(
            "corollary_coercivity",
            viol.passed,
            n_samples=viol.n_samples,
            n_violations=viol.n_violations,
            worst_margin=viol.worst_margin,
            worst_sample=list(viol.worst_sample),
        )
    )

    oracle = {}
    if s["oracle_range_checks"]:
        ranges = {4.0: (0.245, 0.255), 3.0: (0.49, 0.51)}
        for p_probe, (lo, hi) in sorted(ranges.items()):
            c1_v, c4_v = monotonicity_constant_oracle(
                p_probe, samples=s["oracle_samples"], seed=s["oracle_seed"]
            )
            oracle[f"p{p_probe:g}"] = {"c1": c1_v, "c4": c4_v}
            checks.append(
                check(
                    f"oracle_c4_range_p{p_probe:g}",
                    lo <= c4_v <= hi,
                    c4=c4_v,
                    expected_low=lo,
                    expected_high=hi,
                )
            )

    d_dict = d.to_dict()
    rows = sorted((k, v) for k, v in d_dict.items() if isinstance(v, (int, float)))
    return SuiteResult(
        name="decompose",
        payload={
            "decomposition": d_dict,
            "recertification": recert.to_dict(),
            "corollary": viol.to_dict(),
            "oracle": oracle,
        },
        checks=checks,
        csvs={"decomposition.csv": (("constant", "value"), rows)},
    )


# ---------------------------------------------------------------------------
# solve (evolve / linear-oracle / gronwall)
# ---------------------------------------------------------------------------


def _run_linear_oracle(cfg: ExperimentConfig, s: dict) -> SuiteResult:
    if cfg.f is not None or cfg.g is not None:
        raise ConfigError(
            cfg.path, None, "linear-oracle mode requires f_coefficients and g_modes absent"
        )
    dom = cfg.domain
    problem = cfg.problem()
    mode = 1 if dom.dimension == 1 else (1, 1)
    u0 = Field.from_modes(dom, {mode: 1.0})
    mu1 = float(laplacian_eigenvalues(dom)[(0,) * dom.dimension])
    t_star = s["oracle_time"]

    def rel_error(dt_val: float) -> float:
        run = SolverConfig(dt=dt_val, t_end=t_star, scheme=cfg.scheme, record_times=(t_star,))
        times, recs = integrate(problem, u0.values, run)
        t_num = float(times[-1])
        exact = math.exp(-(cfg.lam + mu1) * t_num) * u0.values
        err = lebesgue_norm_values(dom, recs[-1] - exact, 2.0)
        return float(err / lebesgue_norm_values(dom, exact, 2.0))

    err_main = rel_error(cfg.dt)
    dts = sorted(s["order_dts"], reverse=True)
    errs = [rel_error(dt_val) for dt_val in dts]
    fit = linregress(np.log(dts), np.log(np.maximum(errs, 1e-300)))
    nominal = 2.0 if cfg.scheme == "imex_cn_ab2" else 1.0
    checks = [
        check("oracle_relative_error", err_main <= s["oracle_rtol"],
              error=err_main, dt=cfg.dt, tolerance=s["oracle_rtol"]),
        check("convergence_order", abs(fit.slope - nominal) <= s["order_slack"],
              observed=float(fit.slope), nominal=nominal, slack=s["order_slack"]),
    ]
    payload = {
        "mode": "linear-oracle",
        "decay_rate": cfg.lam + mu1,
        "error_at_dt": err_main,
        "dts": list(dts),
        "errors": errs,
        "order": float(fit.slope),
        "nominal_order": nominal,
    }
    rows = [(dt_val, e) for dt_val, e in zip(dts, errs)] + [(cfg.dt, err_main)]
    return SuiteResult("solve", payload, checks, {"convergence.csv": (("dt", "rel_error"), rows)})


def _run_gronwall(cfg: ExperimentConfig, s: dict) -> SuiteResult:
    f = _require_f(cfg)
    if cfg.constants is None:
        raise ConfigError(cfg.path, None, "gronwall mode requires [constants]")
    d = decompose(f, cfg.constants)
    mu = max(2.0 * (d.l2 - cfg.lam), 1.0)
    rng = np.random.default_rng(cfg.seed)
    n = s["n_pairs"]
    amps = np.geomspace(s["diff_lo"], s["diff_hi"], n)
    bases = _mixture_stack(cfg.domain, rng, n, s["base_l2"])
    diffs = _texture_stack(cfg.domain, rng, amps, p_for_spikes=f.p)
    run = cfg.solver_config()
    rep = gronwall_check(cfg.problem(), bases, diffs, mu, run, tol_factor=s["tol_factor"])
    checks = [
        check(
            "gronwall_envelope",
            rep.passed,
            worst_ratio=rep.worst_ratio,
            worst_pair=rep.worst_pair,
            worst_time=rep.worst_time,
            mu=mu,
            tol_factor=s["tol_factor"],
        )
    ]
    payload = {
        "mode": "gronwall",
        "mu": mu,
        "l2_constant": d.l2,
        "n_pairs": n,
        "amplitudes": amps,
        "times": rep.times,
        "max_ratio_series": rep.max_ratio_series,
        "report": rep.to_dict(),
    }
    rows = list(zip(rep.times, rep.max_ratio_series))
    return SuiteResult("solve", payload, checks, {"gronwall.csv": (("t", "max_ratio"), rows)})


def _run_evolve(cfg: ExperimentConfig, s: dict) -> SuiteResult:
    dom = cfg.domain
    u0 = Field.from_modes(dom, s["u0_modes"]) if s["u0_modes"] else Field.zeros(dom)
    run = cfg.solver_config(
        record_times=graded_record_steps(cfg.dt, cfg.t_end) if cfg.record_mode == "graded" else None
    )
    times, recs = integrate(cfg.problem(), u0.values, run)
    tr = Trajectory(dom, times, recs)
    p = cfg.f.p if cfg.f is not None else 2.0
    l2 = tr.l2_series()
    lp = tr.lp_series(p)
    h1 = tr.h1_series()
    checks = [check("trajectory_finite", bool(np.isfinite(recs).all()), t_end=cfg.t_end)]
    payload = {
        "mode": "evolve",
        "p": p,
        "times": tr.times,
        "l2_series": l2,
        "lp_series": lp,
        "h1_series": h1,
    }
    rows = list(zip(tr.times, l2, lp, h1))
    return SuiteResult(
        "solve", payload, checks, {"norms.csv": (("t", "l2_norm", "lp_norm", "h1_seminorm"), rows)}
    )


def run_solve(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    s = cfg.suite("solve")
    if s["mode"] == "linear-oracle":
        return _run_linear_oracle(cfg, s)
    if s["mode"] == "gronwall":
        return _run_gronwall(cfg, s)
    return _run_evolve(cfg, s)


# ---------------------------------------------------------------------------
# energy-monitor
# ---------------------------------------------------------------------------


def run_energy(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    c = cfg.constants
    s = cfg.suite("energy-monitor")
    rng = np.random.default_rng(cfg.seed)
    n = s["n_runs"]
    norms = s["u0_l2_max"] * rng.random(n)
    u0s = _texture_stack(cfg.domain, rng, np.maximum(norms, 1e-6), p_for_spikes=f.p)
    stride = max(1, int(round(0.01 / cfg.dt)))
    run = cfg.solver_config(record_stride=stride)
    problem = cfg.problem()
    times, recs = integrate(problem, u0s, run)

    c_l2 = np.empty(n)
    c_lp = np.empty(n)
    reliable = True
    for i in range(n):
        rep = energy_monitor(Trajectory(cfg.domain, times, recs[:, i]), problem, c)
        c_l2[i] = rep.c_l2
        c_lp[i] = rep.c_lp
        reliable = reliable and rep.reliable
    i2 = int(np.argmax(c_l2))
    ip = int(np.argmax(c_lp))
    checks = [
        check("l2_energy_certificate", bool(np.isfinite(c_l2).all()),
              c_star=float(c_l2[i2]), worst_run=i2, worst_u0_l2=float(norms[i2])),
        check("lp_energy_certificate", bool(np.isfinite(c_lp).all()),
              c_star=float(c_lp[ip]), worst_run=ip, worst_u0_l2=float(norms[ip])),
        check("recording_reliable", reliable, max_spacing=float(np.max(np.diff(times)))),
    ]
    payload = {
        "n_runs": n,
        "u0_l2": norms,
        "c_l2": c_l2,
        "c_lp": c_lp,
        "c_star_l2": float(c_l2[i2]),
        "c_star_lp": float(c_lp[ip]),
    }
    rows = [(i, norms[i], c_l2[i], c_lp[i]) for i in range(n)]
    return SuiteResult(
        "energy-monitor", payload, checks, {"energy.csv": (("run", "u0_l2", "c_l2", "c_lp"), rows)}
    )


# ---------------------------------------------------------------------------
# lp-bound
# ---------------------------------------------------------------------------


def run_lp_bound(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    c = cfg.constants
    s = cfg.suite("lp-bound")
    dom = cfg.domain
    p = c.p
    targets = s["power_targets"]
    family = []
    labels = []
    for t in targets:
        if t == "min":
            family.append(flattest_field(dom))
            labels.append("min")
        else:
            family.append(spiked_plateau(dom, p, float(t)))
            labels.append(f"{t:g}")
    run = cfg.solver_config()
    rep = verify_lemma23(cfg.problem(), c, s["eps"], family, s["k_max"], run)

    norm_eps = rep.moment_at(1, s["eps"]) ** (1.0 / rep.exponents[1])
    factor = float(norm_eps.max() / norm_eps.min())
    checks = [
        check(
            "family_collapse_factor",
            factor <= s["factor_bound"],
            factor=factor,
            bound=s["factor_bound"],
            norms_at_eps=norm_eps,
        )
    ]
    for k in rep.ks:
        checks.append(
            check(
                f"moment_quotient_finite_k{k}",
                bool(np.isfinite(rep.sup_quotient[k])),
                sup=rep.sup_quotient[k],
                exponent=rep.exponents[k],
                forcing_moment=rep.forcing_moments[k],
            )
        )
    payload = {
        "targets": labels,
        "eps": s["eps"],
        "report": rep.to_dict(),
        "times": rep.times,
        "moment_series_k1": rep.moments[1],
        "norms_at_eps": norm_eps,
    }
    rows = []
    for i, lab in enumerate(labels):
        u0_pow = float(rep.moments[1][i, 0])
        row = [i, lab, u0_pow, float(norm_eps[i])]
        row += [float(rep.sup_per_member[k][i]) for k in rep.ks]
        rows.append(tuple(row))
    header = ("member", "target", "u0_power", "norm_at_eps") + tuple(
        f"sup_q_k{k}" for k in rep.ks
    )
    series_rows = []
    for i, lab in enumerate(labels):
        for j, t in enumerate(rep.times):
            series_rows.append((i, float(t), float(rep.moments[1][i, j])))
    return SuiteResult(
        "lp-bound",
        payload,
        checks,
        {
            "lp_family.csv": (header, rows),
            "lp_series.csv": (("member", "t", "moment_k1"), series_rows),
        },
    )


# ---------------------------------------------------------------------------
# smoothing
# ---------------------------------------------------------------------------


def _pair_ensemble(cfg: ExperimentConfig, s: dict, rng) -> tuple:
    n = s["n_pairs"]
    amps = np.geomspace(s["diff_lo"], s["diff_hi"], n)
    bases = _mixture_stack(cfg.domain, rng, n, s["base_l2"])
    p = cfg.f.p if cfg.f is not None else 4.0
    diffs = _texture_stack(cfg.domain, rng, amps, p_for_spikes=p)
    return bases, diffs


def run_smoothing(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    c = cfg.constants
    s = cfg.suite("smoothing")
    d = decompose(f, c)
    mu = max(2.0 * (d.l2 - cfg.lam), 1.0)
    rng = np.random.default_rng(cfg.seed)
    bases, diffs = _pair_ensemble(cfg, s, rng)
    run = SolverConfig(dt=cfg.dt, t_end=1.0, scheme=cfg.scheme, record_times=(0.0, 1.0))
    _, _, diff_recs = integrate_pair(cfg.problem(), bases, diffs, run)
    diff1 = diff_recs[-1]

    reports = {}
    checks = []
    sweep_rows = []
    for gamma in s["gammas"]:
        rep = smoothing_report_from_states(cfg.domain, gamma, diffs, diff1)
        reports[f"{gamma:g}"] = {
            **rep.to_dict(),
            "log_x": rep.log_x,
            "log_y": rep.log_y,
        }
        checks.append(
            check(
                f"c_gamma_finite_g{gamma:g}",
                bool(np.isfinite(rep.c_gamma)),
                c_gamma=rep.c_gamma,
                argmax_pair=rep.argmax_index,
            )
        )
        checks.append(
            check(
                f"smoothing_slope_g{gamma:g}",
                rep.slope >= s["slope_min"],
                slope=rep.slope,
                stderr=rep.slope_stderr,
                r_squared=rep.r_squared,
                minimum=s["slope_min"],
            )
        )
        if gamma == 2.0 and cfg.lam > d.l2:
            bound = math.exp(mu) * (1.0 + s["gronwall_tol"])
            checks.append(
                check(
                    "c2_exponential_envelope",
                    rep.c_gamma <= bound,
                    c2=rep.c_gamma,
                    bound=bound,
                    mu=mu,
                )
            )
        x = np.exp(rep.log_x)
        y = np.exp(rep.log_y)
        sweep_rows += [(gamma, float(xi), float(yi), float(yi / xi)) for xi, yi in zip(x, y)]
    payload = {
        "mu": mu,
        "l2_constant": d.l2,
        "n_pairs": s["n_pairs"],
        "gammas": list(s["gammas"]),
        "reports": reports,
    }
    return SuiteResult(
        "smoothing",
        payload,
        checks,
        {"smoothing_sweep.csv": (("gamma", "diff0_l2_sq", "diff1_norm_pow", "quotient"), sweep_rows)},
    )


# ---------------------------------------------------------------------------
# h1-smoothing
# ---------------------------------------------------------------------------


def run_h1_smoothing(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    c = cfg.constants
    s = cfg.suite("h1-smoothing")
    scan = cfg.scan or ScanSpec()
    fadd = certify_f_add(f, cfg.f_add, scan)
    rng = np.random.default_rng(cfg.seed)
    bases, diffs = _pair_ensemble(cfg, s, rng)
    pairs = [
        (Field(cfg.domain, bases[i]), Field(cfg.domain, diffs[i])) for i in range(len(bases))
    ]
    run = SolverConfig(dt=cfg.dt, t_end=1.0, scheme=cfg.scheme)
    rep = h1_smoothing_fit(pairs, cfg.problem(), c.p, run, f_add_certified=fadd.passed)
    slope_floor = 1.0 / (c.p - 1.0) - s["slope_slack"]
    checks = [
        check("f_add_envelope", fadd.passed, margin=fadd.checks[0].margin),
        check("envelope_dominates", rep.max_ratio <= 1.0 + 1e-9,
              max_ratio=rep.max_ratio, c_r=rep.c_r, c=rep.c),
        check("gradient_slope", rep.slope >= slope_floor,
              slope=rep.slope, floor=slope_floor, stderr=rep.slope_stderr),
        check("unit_ball_bound", rep.unit_ball_ok, constant=rep.unit_ball_constant),
    ]
    payload = {
        "fit": rep.to_dict(),
        "log_delta": rep.log_delta,
        "log_grad": rep.log_grad,
    }
    delta = np.exp(rep.log_delta)
    grad = np.exp(rep.log_grad)
    rows = list(zip(delta, grad))
    return SuiteResult(
        "h1-smoothing", payload, checks, {"h1_sweep.csv": (("diff0_l2", "grad_diff1"), rows)}
    )


# ---------------------------------------------------------------------------
# ak-bk
# ---------------------------------------------------------------------------


def run_ak_bk(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    s = cfg.suite("ak-bk")
    p = cfg.constants.p if cfg.constants is not None else f.p
    table = exponent_table(p, s["k_max"] + 1)
    rng = np.random.default_rng(cfg.seed)
    dom = cfg.domain
    dirs = direction_bank(dom, rng, s["n_directions"])
    base = eigenmode_mixture(dom, rng, n_modes=6, l2=s["base_l2"])
    amps = sorted(s["amplitudes"], reverse=True)

    bases = np.stack([base.values] * (len(dirs) * len(amps)))
    diffs = np.stack([a * d.values for d in dirs for a in amps])
    times = graded_record_steps(cfg.dt, 1.0)
    run = SolverConfig(dt=cfg.dt, t_end=1.0, scheme=cfg.scheme, record_times=times)
    t_arr, base_recs, diff_recs = integrate_pair(cfg.problem(), bases, diffs, run)

    ks = tuple(range(1, s["k_max"] + 1))
    qa = np.empty((len(dirs), len(amps), len(ks)))
    qb = np.empty_like(qa)
    for di in range(len(dirs)):
        for ai in range(len(amps)):
            m = di * len(amps) + ai
            pair = PairTrajectory(
                Trajectory(dom, t_arr, base_recs[:, m]), Trajectory(dom, t_arr, diff_recs[:, m])
            )
            rep = verify_ak_bk(pair, table)
            for ki, k in enumerate(ks):
                qa[di, ai, ki] = rep.sup_quotient[k]
                qb[di, ai, ki] = rep.integral_quotient[k]

    checks = [
        check("quotients_finite", bool(np.isfinite(qa).all() and np.isfinite(qb).all()))
    ]
    factor = s["stability_factor"]
    for ki, k in enumerate(ks):
        for di in range(len(dirs)):
            ref_a = qa[di, 0, ki]
            ref_b = qb[di, 0, ki]
            ok_a = bool(np.all(qa[di, :, ki] <= factor * ref_a + 1e-300))
            ok_b = bool(np.all(qb[di, :, ki] <= factor * ref_b + 1e-300))
            checks.append(
                check(
                    f"no_divergence_k{k}_dir{di}",
                    ok_a and ok_b,
                    sup_quotients=qa[di, :, ki],
                    integral_quotients=qb[di, :, ki],
                    amplitudes=list(amps),
                    factor=factor,
                )
            )
    payload = {
        "p": p,
        "ks": list(ks),
        "exponents": {str(k): table.pa(k) for k in ks},
        "weights": {str(k): table.weight(k) for k in ks},
        "amplitudes": list(amps),
        "n_directions": len(dirs),
        "sup_quotients": qa,
        "integral_quotients": qb,
    }
    rows = []
    for di in range(len(dirs)):
        for ai, a in enumerate(amps):
            for ki, k in enumerate(ks):
                rows.append((di, a, k, qa[di, ai, ki], qb[di, ai, ki]))
    return SuiteResult(
        "ak-bk",
        payload,
        checks,
        {"akbk.csv": (("direction", "amplitude", "k", "q_sup", "q_integral"), rows)},
    )


# ---------------------------------------------------------------------------
# attractor
# ---------------------------------------------------------------------------


def _bifurcation_data(cfg: ExperimentConfig):
    f = _require_f(cfg)
    dom = cfg.domain
    mu1 = float(laplacian_eigenvalues(dom)[(0,) * dom.dimension])
    beta_eff = -f.coefficients[0]
    return beta_eff, mu1, beta_eff - cfg.lam > mu1


def _sample_cloud(cfg: ExperimentConfig, s: dict, with_equilibria: bool = True):
    """Sampled cloud plus (if supercritical) the polished equilibria.

    Above the pitchfork the interesting states are the connecting orbits, and
    a member seeded at amplitude a passes through mid-range amplitudes near
    t = log(a_sat/a) / rate.  Scheduling the seed amplitudes so those transit
    times sweep the sampling window catches every stage of the transition;
    larger seeds have saturated by then and pin the endpoints.
    """
    problem = cfg.problem()
    beta_eff, mu1, supercritical = _bifurcation_data(cfg)
    base_cfg = SolverConfig(dt=cfg.dt, t_end=1.0, scheme=cfg.scheme)
    amplitudes = None
    if supercritical:
        rate = beta_eff - cfg.lam - mu1
        a_sat = math.sqrt(beta_eff - cfg.lam)
        window_end = s["t_spin"] + s["n_samples"] * s["delta_sample"]
        t_targets = np.linspace(0.5 * s["t_spin"], window_end, s["ensemble_size"])
        amplitudes = a_sat * np.exp(-rate * t_targets)
    with warnings.catch_warnings(record=True) as wl:
        warnings.simplefilter("always")
        cloud = sample_attractor(
            problem,
            ensemble_size=s["ensemble_size"],
            t_spin=s["t_spin"],
            n_samples=s["n_samples"],
            delta_sample=s["delta_sample"],
            seed=cfg.seed,
            cfg=base_cfg,
            amplitudes=amplitudes,
            stab_tol=s["stab_tol"],
        )
    warn_msgs = [str(w.message) for w in wl]
    equilibria = []
    residuals = []
    if with_equilibria and supercritical and cfg.g is None:
        dom = cfg.domain
        mode = 1 if dom.dimension == 1 else (1, 1)
        amp = math.sqrt(beta_eff - cfg.lam)
        phi = find_equilibrium(problem, Field.from_modes(dom, {mode: amp}))
        phi_neg = Field(dom, -phi.values)
        zero = Field.zeros(dom)
        equilibria = [phi, phi_neg, zero]
        residuals = [_steady_residual(problem, e) for e in equilibria]
        cloud = cloud.with_extra(equilibria)
    return cloud, equilibria, residuals, warn_msgs, (beta_eff, mu1, supercritical)


def run_attractor(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    s = cfg.suite("attractor")
    problem = cfg.problem()
    dom = cfg.domain
    cloud, equilibria, residuals, warn_msgs, regime = _sample_cloud(cfg, s)
    beta_eff, mu1, supercritical = regime

    checks = []
    payload = {
        "beta": beta_eff,
        "first_eigenvalue": mu1,
        "supercritical": supercritical,
        "cloud_size": len(cloud),
        "cloud_meta": {k: v for k, v in cloud.meta.items()},
        "stabilization_warnings": warn_msgs,
    }

    if supercritical:
        drift = lebesgue_norm_values(
            dom, step(equilibria[0], problem, cfg.dt, cfg.scheme).values - equilibria[0].values, 2.0
        )
        checks.append(
            check(
                "equilibria_residuals",
                all(r <= 1e-8 for r in residuals),
                residuals=residuals,
            )
        )
        checks.append(
            check("equilibrium_step_invariance", float(drift) <= 1e-10, drift=float(drift))
        )
        # nontrivial equilibria well separated from zero
        sep = float(lebesgue_norm_values(dom, equilibria[0].values, 2.0))
        checks.append(check("pitchfork_nontrivial", sep > 0.1, equilibrium_l2=sep))
        payload["equilibrium_max"] = float(np.max(np.abs(equilibria[0].values)))
        payload["equilibrium_l2"] = sep
    else:
        radius = float(lebesgue_norm_values(dom, cloud.values, 2.0).max())
        checks.append(
            check("cloud_collapse", radius <= s["collapse_tol"], radius=radius,
                  tolerance=s["collapse_tol"])
        )
        payload["cloud_radius"] = radius

    rng = np.random.default_rng([cfg.seed, 1])
    u0s = _mixture_stack(dom, rng, s["bundle_size"], s["bundle_l2"])
    n_steps = max(1, round(s["horizon"] / cfg.dt))
    stride = max(1, n_steps // 120)
    run = SolverConfig(dt=cfg.dt, t_end=s["horizon"], scheme=cfg.scheme, record_stride=stride)
    times, recs = integrate(problem, u0s, run)
    bundle = [Trajectory(dom, times, recs[:, i]) for i in range(s["bundle_size"])]

    attraction = {}
    rows = []
    for gamma in s["attract_gammas"]:
        rep = attraction_distance(bundle, cloud, Norm.lp(gamma))
        attraction[rep.norm_label] = rep.to_dict()
        checks.append(
            check(
                f"attraction_{rep.norm_label}",
                rep.final_distance <= s["attract_tol"],
                final_distance=rep.final_distance,
                horizon=s["horizon"],
                tolerance=s["attract_tol"],
                monotone_from=rep.monotone_from,
            )
        )
        rows += [(rep.norm_label, float(t), float(d_)) for t, d_ in zip(rep.times, rep.distances)]
    payload["attraction"] = attraction

    if out_dir is not None:
        dump_states(os.path.join(out_dir, "cloud.bin"), dom, cloud.values)
        manifest = {
            "file": "cloud.bin",
            "n_states": len(cloud),
            "dimension": dom.dimension,
            "points_per_axis": dom.points_per_axis,
            "side_length": dom.side_length,
            "dtype": "float64",
            "layout": "header(int32 dim, int32 points_per_axis, float64 side_length, int64 n_states) then states row-major",
            "meta": {k: v for k, v in cloud.meta.items()},
        }
        write_json(os.path.join(out_dir, "cloud_manifest.json"), manifest)
        payload["cloud_dump"] = "cloud.bin"
        payload["cloud_manifest"] = "cloud_manifest.json"

    return SuiteResult(
        "attractor", payload, checks, {"attraction.csv": (("norm", "t", "distance"), rows)}
    )


# ---------------------------------------------------------------------------
# dimension
# ---------------------------------------------------------------------------


def _orthonormal_modes(dom, count):
    amp = (2.0 / dom.side_length) ** (dom.dimension / 2.0)
    fields = []
    for k in range(1, count + 1):
        mode = k if dom.dimension == 1 else (k, k)
        fields.append(Field.from_modes(dom, {mode: amp}))
    return fields


def _estimate_payload(est):
    return {**est.to_dict(), "log_eps": est.log_eps, "log_c": est.log_c}


def run_dimension(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    s = cfg.suite("dimension")
    dom = cfg.domain
    scan = cfg.scan or ScanSpec()
    fadd = certify_f_add(f, cfg.f_add, scan)
    rng = np.random.default_rng([cfg.seed, 2])
    checks = [check("f_add_envelope", fadd.passed, margin=fadd.checks[0].margin)]
    estimates = {}
    tol = s["oracle_tol"]

    # synthetic 1-manifold: a segment of scaled copies of one profile
    e = _orthonormal_modes(dom, 4)
    span = rng.random(s["line_points"])
    line = PointCloud(dom, span[:, None] * e[0].values[None, :] if dom.dimension == 1
                      else span[:, None, None] * e[0].values[None, :, :])
    for norm in (Norm.lp(2.0), Norm.lp(4.0), Norm.lp(6.0), Norm.h1()):
        est = correlation_dimension(line, norm, f_add_certified=fadd.passed)
        estimates[f"line_{norm.label}"] = _estimate_payload(est)
        checks.append(
            check(
                f"line_dimension_{norm.label}",
                abs(est.dimension - 1.0) <= tol and not est.degenerate,
                dimension=est.dimension,
                band=est.band,
                r_squared=est.r_squared,
            )
        )

    # synthetic 2-torus embedding
    th1 = rng.uniform(0.0, 2.0 * math.pi, s["torus_points"])
    th2 = rng.uniform(0.0, 2.0 * math.pi, s["torus_points"])
    shape = (slice(None),) + (None,) * dom.dimension
    torus_vals = (
        np.cos(th1)[shape] * e[0].values
        + np.sin(th1)[shape] * e[1].values
        + 0.45 * np.cos(th2)[shape] * e[2].values
        + 0.45 * np.sin(th2)[shape] * e[3].values
    )
    torus = PointCloud(dom, torus_vals)
    for norm in (Norm.lp(2.0), Norm.lp(4.0)):
        est = correlation_dimension(torus, norm)
        estimates[f"torus_{norm.label}"] = _estimate_payload(est)
        checks.append(
            check(
                f"torus_dimension_{norm.label}",
                abs(est.dimension - 2.0) <= tol and not est.degenerate,
                dimension=est.dimension,
                band=est.band,
                r_squared=est.r_squared,
            )
        )

    # two-point degeneracy
    two = PointCloud(dom, np.stack([e[0].values, -e[0].values]))
    est2 = correlation_dimension(two)
    checks.append(
        check(
            "two_point_degenerate",
            est2.degenerate and est2.dimension == 0.0,
            dimension=est2.dimension,
        )
    )

    # sampled cloud of the dissipative flow
    cloud, equilibria, residuals, warn_msgs, regime = _sample_cloud(cfg, s)
    subset = farthest_point_subset(cloud, s["subset_size"])
    z0 = equilibria[0] if equilibria else None
    bound = dimension_bound_check(
        subset,
        p=s["bound_p"],
        gammas=s["bound_gammas"],
        z0=z0,
        f_add_certified=fadd.passed,
    )
    for name, est in bound.estimates.items():
        estimates[f"cloud_{name}"] = _estimate_payload(est)
    for chk in bound.checks:
        checks.append(
            check(
                f"dimension_bound_{chk['name']}",
                chk["passed"],
                measured=chk["measured"],
                bound=chk["bound"],
                slack=chk["slack"],
                reference_l2=chk["reference"],
            )
        )

    # translation invariance of the estimates
    trans_checks = []
    if z0 is not None:
        shifted = subset.translated(z0)
        for norm in (Norm.lp(2.0), Norm.lp(4.0)):
            a = correlation_dimension(subset, norm)
            b = correlation_dimension(shifted, norm)
            delta = abs(a.dimension - b.dimension)
            trans_checks.append((norm.label, delta))
            checks.append(
                check(
                    f"translation_invariance_{norm.label}",
                    delta <= s["translation_tol"],
                    delta=delta,
                    tolerance=s["translation_tol"],
                )
            )

    payload = {
        "estimates": estimates,
        "bound_checks": list(bound.checks),
        "cloud_size": len(cloud),
        "subset_size": len(subset),
        "cloud_meta": {k: v for k, v in cloud.meta.items()},
        "stabilization_warnings": warn_msgs,
        "translation_deltas": {k: v for k, v in trans_checks},
    }
    rows = []
    for name, est in sorted(estimates.items()):
        for le, lc in zip(est["log_eps"], est["log_c"]):
            rows.append((name, float(le), float(lc)))
    return SuiteResult(
        "dimension",
        payload,
        checks,
        {"correlation_curves.csv": (("estimate", "log_eps", "log_c"), rows)},
    )


# ---------------------------------------------------------------------------
# net-transport
# ---------------------------------------------------------------------------


def run_net_transport(cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    f = _require_f(cfg)
    s = cfg.suite("net-transport")
    dom = cfg.domain
    problem = cfg.problem()
    gamma = s["gamma"]
    cloud, _, _, warn_msgs, _ = _sample_cloud(cfg, s)

    eps_values = sorted(s["eps_list"], reverse=True)
    nets = {eps: greedy_epsilon_net(cloud, eps, Norm.lp(2.0)) for eps in eps_values}
    checks = []
    sizes = [len(nets[eps]) for eps in eps_values]
    checks.append(
        check(
            "net_sizes_monotone",
            all(sizes[i] <= sizes[i + 1] for i in range(len(sizes) - 1)),
            eps=list(eps_values),
            sizes=sizes,
        )
    )
    for eps in eps_values:
        checks.append(
            check(
                f"net_covering_eps{eps:g}",
                nets[eps].verified,
                size=len(nets[eps]),
                covering_radius=nets[eps].covering_radius,
            )
        )

    # collect the exact assignment pairs the transport step will use, and
    # certify the Hoelder constant on an ensemble that contains all of them
    pair_set = []
    seen = set()
    for eps in eps_values:
        d_x = pairwise_distances(dom, cloud.values, nets[eps].values, Norm.lp(2.0))
        assigned = np.argmin(d_x, axis=1)
        for i, a in enumerate(assigned):
            j = nets[eps].indices[a]
            if i != j and (i, j) not in seen:
                seen.add((i, j))
                pair_set.append((i, j))
    pair_set.sort()
    idx_i = np.array([ij[0] for ij in pair_set], dtype=int)
    idx_j = np.array([ij[1] for ij in pair_set], dtype=int)
    bases = cloud.values[idx_j]
    diffs = cloud.values[idx_i] - cloud.values[idx_j]
    # members that settled onto the same floating-point state certify trivially
    nonzero = lebesgue_norm_values(dom, diffs, 2.0) > 0
    bases = bases[nonzero]
    diffs = diffs[nonzero]
    pair_set = [ij for ij, keep in zip(pair_set, nonzero) if keep]

    rng = np.random.default_rng([cfg.seed, 3])
    amps = np.geomspace(s["diff_lo"], s["diff_hi"], s["smoothing_pairs"])
    extra_bases = cloud.values[
        np.linspace(0, len(cloud) - 1, s["smoothing_pairs"]).astype(int)
    ]
    extra_diffs = _texture_stack(dom, rng, amps, p_for_spikes=f.p)
    all_bases = np.concatenate([bases, extra_bases])
    all_diffs = np.concatenate([diffs, extra_diffs])

    run = SolverConfig(dt=cfg.dt, t_end=1.0, scheme=cfg.scheme, record_times=(0.0, 1.0))
    _, _, diff_recs = integrate_pair(problem, all_bases, all_diffs, run)
    srep = smoothing_report_from_states(dom, gamma, all_diffs, diff_recs[-1])
    lip = srep.c_gamma ** (1.0 / gamma)
    delta = 2.0 / gamma
    checks.append(
        check("smoothing_constant_finite", bool(np.isfinite(lip)), lip=lip,
              c_gamma=srep.c_gamma, n_pairs=len(all_bases))
    )

    transported = apply_time_map(
        problem, cloud.values, 1.0, SolverConfig(dt=cfg.dt, t_end=1.0, scheme=cfg.scheme)
    )
    transports = {}
    rows = []
    for eps in eps_values:
        rep = transport_net(
            cloud,
            nets[eps],
            problem,
            lip,
            delta,
            Norm.lp(gamma),
            transported=transported,
        )
        transports[f"{eps:g}"] = rep.to_dict()
        checks.append(
            check(
                f"transport_coverage_eps{eps:g}",
                rep.passed,
                coverage=rep.coverage_fraction,
                radius=rep.radius,
                worst_cover_ratio=rep.worst_cover_ratio,
            )
        )
        checks.append(
            check(
                f"hoelder_consistency_eps{eps:g}",
                rep.assigned_ratio_max <= lip * (1.0 + 1e-6),
                assigned_ratio_max=rep.assigned_ratio_max,
                certified=lip,
            )
        )
        rows.append(
            (
                eps,
                len(nets[eps]),
                rep.radius,
                rep.coverage_fraction,
                rep.worst_cover_ratio,
                rep.assigned_ratio_max,
            )
        )
    payload = {
        "gamma": gamma,
        "delta": delta,
        "lip": lip,
        "smoothing": {**srep.to_dict(), "log_x": srep.log_x, "log_y": srep.log_y},
        "n_certification_pairs": len(all_bases),
        "n_assignment_pairs": len(pair_set),
        "cloud_size": len(cloud),
        "net_sizes": {f"{eps:g}": len(nets[eps]) for eps in eps_values},
        "transports": transports,
        "stabilization_warnings": warn_msgs,
    }
    return SuiteResult(
        "net-transport",
        payload,
        checks,
        {
            "transport.csv": (
                ("eps", "net_size", "radius", "coverage_fraction", "worst_cover_ratio", "assigned_ratio_max"),
                rows,
            )
        },
    )


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

SUITE_RUNNERS: dict = {
    "certify-nonlinearity": run_certify,
    "decompose": run_decompose,
    "solve": run_solve,
    "energy-monitor": run_energy,
    "lp-bound": run_lp_bound,
    "smoothing": run_smoothing,
    "h1-smoothing": run_h1_smoothing,
    "ak-bk": run_ak_bk,
    "attractor": run_attractor,
    "dimension": run_dimension,
    "net-transport": run_net_transport,
}

SUITE_ORDER = tuple(SUITE_RUNNERS)


def run_suite(name: str, cfg: ExperimentConfig, out_dir=None) -> SuiteResult:
    return SUITE_RUNNERS[name](cfg, out_dir)
