"""Experiment configuration: INI files with a strict, line-aware schema.

A configuration is an INI document with shared sections

    [domain]   grid geometry
    [problem]  lambda, nonlinearity coefficients, forcing modes
    [solver]   time step, horizon, scheme, recording
    [run]      rng_seed

optional shared sections [constants] (dissipativity constants), [f_add]
(derivative-growth envelope), [scan] (certification grid), and one section
per measurement suite carrying its knobs (ensemble sizes, exponent lists,
radii, ...).  Unknown sections or keys are rejected; every diagnostic
carries the file and line of the offending entry.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from rdlab.domain import DomainSpec, Field
from rdlab.nonlinearity import (
    DissipativityConstants,
    LipschitzGrowthConstants,
    NonlinearitySpec,
    ScanSpec,
)
from rdlab.solver import SCHEMES, ProblemSpec, SolverConfig


class ConfigError(Exception):
    """Schema or parse failure, annotated with file and line."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.reason = message
        loc = f"{self.path}:{line}" if line else self.path
        super().__init__(f"{loc}: {message}")


# ---------------------------------------------------------------------------
# value parsers
# ---------------------------------------------------------------------------


def _p_int(s: str) -> int:
    return int(s, 10)


def _p_float(s: str) -> float:
    v = float(s)
    if not np.isfinite(v):
        raise ValueError("must be finite")
    return v


_BOOLS = {"1": True, "true": True, "yes": True, "on": True,
          "0": False, "false": False, "no": False, "off": False}


def _p_bool(s: str) -> bool:
    try:
        return _BOOLS[s.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {s!r}") from None


def _p_floats(s: str):
    parts = [p.strip() for p in s.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_p_float(p) for p in parts)


def _p_targets(s: str):
    """Floats with the sentinel 'min' (grid-attainable minimum)."""
    out = []
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        out.append("min" if part.lower() == "min" else _p_float(part))
    if not out:
        raise ValueError("expected a comma-separated list")
    return tuple(out)


def _p_modes(s: str):
    """Sine-mode map: '1:0.5, 3:-0.25' (1-D) or '1 2:0.5' (2-D)."""
    out = {}
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ValueError(f"mode entry {part!r} must look like 'k:amplitude'")
        key, _, amp = part.partition(":")
        ks = key.split()
        if len(ks) == 1:
            mode = int(ks[0])
        elif len(ks) == 2:
            mode = (int(ks[0]), int(ks[1]))
        else:
            raise ValueError(f"mode index {key!r} must have one or two components")
        out[mode] = _p_float(amp)
    return out


def _choice(*options):
    def parse(s: str) -> str:
        v = s.strip()
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v

    return parse


def _positive(parser):
    def parse(s: str):
        v = parser(s)
        if v <= 0:
            raise ValueError("must be positive")
        return v

    return parse


def _nonneg(parser):
    def parse(s: str):
        v = parser(s)
        if v < 0:
            raise ValueError("must be nonnegative")
        return v

    return parse


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

# key -> (parser, required, default)
_SCHEMA = {
    "domain": {
        "dimension": (_choice("1", "2"), True, None),
        "side_length": (_positive(_p_float), True, None),
        "points_per_axis": (_positive(_p_int), True, None),
        "eigenvalue_convention": (_choice("continuum", "discrete"), False, "continuum"),
    },
    "problem": {
        "lambda": (_positive(_p_float), True, None),
        "f_coefficients": (_p_floats, False, None),
        "p": (_positive(_p_float), False, None),
        "g_modes": (_p_modes, False, {}),
    },
    "solver": {
        "dt": (_positive(_p_float), True, None),
        "t_end": (_positive(_p_float), True, None),
        "scheme": (_choice(*SCHEMES), True, None),
        "record_stride": (_positive(_p_int), False, 1),
        "record": (_choice("stride", "graded"), False, "stride"),
    },
    "run": {
        "rng_seed": (_nonneg(_p_int), True, None),
    },
    "constants": {
        "p": (_positive(_p_float), True, None),
        "kappa": (_positive(_p_float), True, None),
        "l": (_positive(_p_float), True, None),
        "alpha": (_positive(_p_float), True, None),
        "beta": (_positive(_p_float), True, None),
        "sigma": (_positive(_p_float), True, None),
    },
    "f_add": {
        "kappa0": (_positive(_p_float), True, None),
        "l0": (_positive(_p_float), True, None),
    },
    "scan": {
        "radius": (_positive(_p_float), False, 50.0),
        "step": (_positive(_p_float), False, 1e-3),
    },
    # --- suite sections -----------------------------------------------------
    "certify-nonlinearity": {},
    "decompose": {
        "oracle_samples": (_positive(_p_int), False, 200000),
        "oracle_seed": (_nonneg(_p_int), False, 0),
        "corollary_samples": (_positive(_p_int), False, 1000000),
        "corollary_s_bound": (_positive(_p_float), False, 20.0),
        "corollary_r_max": (_nonneg(_p_float), False, 6.0),
        "oracle_range_checks": (_p_bool, False, True),
    },
    "solve": {
        "mode": (_choice("evolve", "linear-oracle", "gronwall"), True, None),
        "u0_modes": (_p_modes, False, {}),
        "order_dts": (_p_floats, False, (4e-3, 2e-3, 1e-3)),
        "oracle_time": (_positive(_p_float), False, 0.1),
        "oracle_rtol": (_positive(_p_float), False, 1e-4),
        "order_slack": (_positive(_p_float), False, 0.2),
        "n_pairs": (_positive(_p_int), False, 50),
        "base_l2": (_nonneg(_p_float), False, 1.0),
        "diff_lo": (_positive(_p_float), False, 1e-6),
        "diff_hi": (_positive(_p_float), False, 1.0),
        "tol_factor": (_positive(_p_float), False, 1e-6),
    },
    "energy-monitor": {
        "n_runs": (_positive(_p_int), False, 50),
        "u0_l2_max": (_positive(_p_float), False, 10.0),
    },
    "lp-bound": {
        "power_targets": (_p_targets, True, None),
        "eps": (_positive(_p_float), False, 0.1),
        "k_max": (_positive(_p_int), False, 2),
        "factor_bound": (_positive(_p_float), False, 2.0),
    },
    "smoothing": {
        "gammas": (_p_floats, False, (2.0, 4.0, 6.0, 8.0)),
        "n_pairs": (_positive(_p_int), False, 100),
        "base_l2": (_nonneg(_p_float), False, 1.0),
        "diff_lo": (_positive(_p_float), False, 1e-6),
        "diff_hi": (_positive(_p_float), False, 1.0),
        "slope_min": (_p_float, False, 0.9),
        "gronwall_tol": (_positive(_p_float), False, 1e-3),
    },
    "h1-smoothing": {
        "n_pairs": (_positive(_p_int), False, 100),
        "base_l2": (_nonneg(_p_float), False, 1.0),
        "diff_lo": (_positive(_p_float), False, 1e-6),
        "diff_hi": (_positive(_p_float), False, 1.0),
        "slope_slack": (_positive(_p_float), False, 0.05),
    },
    "ak-bk": {
        "k_max": (_positive(_p_int), False, 3),
        "amplitudes": (_p_floats, False, (1e-1, 1e-3, 1e-6)),
        "n_directions": (_positive(_p_int), False, 3),
        "stability_factor": (_positive(_p_float), False, 3.0),
        "base_l2": (_nonneg(_p_float), False, 1.0),
    },
    "attractor": {
        "ensemble_size": (_positive(_p_int), False, 24),
        "t_spin": (_positive(_p_float), False, 2.5),
        "n_samples": (_positive(_p_int), False, 40),
        "delta_sample": (_positive(_p_float), False, 0.025),
        "stab_tol": (_positive(_p_float), False, 1e-3),
        "bundle_size": (_positive(_p_int), False, 4),
        "bundle_l2": (_positive(_p_float), False, 2.0),
        "horizon": (_positive(_p_float), False, 20.0),
        "attract_tol": (_positive(_p_float), False, 1e-3),
        "attract_gammas": (_p_floats, False, (2.0, 6.0)),
        "collapse_tol": (_positive(_p_float), False, 1e-6),
    },
    "dimension": {
        "ensemble_size": (_positive(_p_int), False, 30),
        "t_spin": (_positive(_p_float), False, 2.5),
        "n_samples": (_positive(_p_int), False, 70),
        "delta_sample": (_positive(_p_float), False, 0.02),
        "stab_tol": (_positive(_p_float), False, 1e-3),
        "line_points": (_positive(_p_int), False, 600),
        "torus_points": (_positive(_p_int), False, 600),
        "oracle_tol": (_positive(_p_float), False, 0.2),
        "subset_size": (_positive(_p_int), False, 600),
        "bound_p": (_positive(_p_float), False, 4.0),
        "bound_gammas": (_p_floats, False, (4.0, 6.0)),
        "translation_tol": (_positive(_p_float), False, 1e-12),
    },
    "net-transport": {
        "eps_list": (_p_floats, True, None),
        "gamma": (_positive(_p_float), False, 4.0),
        "smoothing_pairs": (_positive(_p_int), False, 40),
        "diff_lo": (_positive(_p_float), False, 1e-4),
        "diff_hi": (_positive(_p_float), False, 1e-1),
        "ensemble_size": (_positive(_p_int), False, 24),
        "t_spin": (_positive(_p_float), False, 2.5),
        "n_samples": (_positive(_p_int), False, 40),
        "delta_sample": (_positive(_p_float), False, 0.025),
        "stab_tol": (_positive(_p_float), False, 1e-3),
    },
}

SUITE_SECTIONS = (
    "certify-nonlinearity",
    "decompose",
    "solve",
    "energy-monitor",
    "lp-bound",
    "smoothing",
    "h1-smoothing",
    "ak-bk",
    "attractor",
    "dimension",
    "net-transport",
)

_GLOBAL_REQUIRED = ("domain", "problem", "solver", "run")

# shared sections each suite depends on beyond the required globals
_SUITE_NEEDS = {
    "certify-nonlinearity": ("constants",),
    "decompose": ("constants",),
    "lp-bound": ("constants",),
    "smoothing": ("constants",),
    "h1-smoothing": ("constants", "f_add"),
    "energy-monitor": ("constants",),
    "dimension": ("f_add",),
}


# ---------------------------------------------------------------------------
# parsing with line tracking
# ---------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^\s*\[(?P<name>[^\]]+)\]")
_KEY_RE = re.compile(r"^\s*(?P<key>[^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str):
    """First-definition line numbers for sections and (section, key) pairs."""
    sec_lines = {}
    key_lines = {}
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            current = m.group("name").strip()
            sec_lines.setdefault(current, no)
            continue
        if current is None:
            continue
        m = _KEY_RE.match(line)
        if m and not line.lstrip().startswith(("#", ";")):
            key_lines.setdefault((current, m.group("key").strip().lower()), no)
    return sec_lines, key_lines


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, typed configuration ready to drive a suite."""

    path: str
    echo: dict
    sha256: str
    seed: int
    domain: DomainSpec
    lam: float
    f: Optional[NonlinearitySpec]
    g: Optional[Field]
    dt: float
    t_end: float
    scheme: str
    record_stride: int
    record_mode: str
    constants: Optional[DissipativityConstants]
    f_add: Optional[LipschitzGrowthConstants]
    scan: Optional[ScanSpec]
    suites: dict = field(default_factory=dict)

    def problem(self) -> ProblemSpec:
        return ProblemSpec(self.domain, self.lam, self.f, self.g)

    def solver_config(self, t_end=None, record_times=None, record_stride=None) -> SolverConfig:
        return SolverConfig(
            dt=self.dt,
            t_end=self.t_end if t_end is None else t_end,
            scheme=self.scheme,
            record_stride=self.record_stride if record_stride is None else record_stride,
            record_times=record_times,
        )

    def suite(self, name: str) -> dict:
        return self.suites[name]


def _hash_echo(echo: dict) -> str:
    return hashlib.sha256(
        json.dumps(echo, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def load_config(path, subcommand: str, seed_override: Optional[int] = None) -> ExperimentConfig:
    """Parse, validate against the schema, and build typed objects.

    `subcommand` selects which suite sections must be present: a concrete
    suite name requires exactly that section; "all" accepts any non-empty
    set of suite sections.  Raises ConfigError with file:line diagnostics.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(path, None, f"cannot read config: {exc}") from exc
    sec_lines, key_lines = _line_index(text)

    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    parser.optionxform = str.lower
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigError(path, line, f"syntax error: {exc.message.splitlines()[0]}") from exc

    # reject unknown sections/keys up front
    for sec in parser.sections():
        if sec not in _SCHEMA:
            raise ConfigError(path, sec_lines.get(sec), f"unknown section [{sec}]")
        for key in parser[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(
                    path, key_lines.get((sec, key)), f"unknown key '{key}' in [{sec}]"
                )

    present_suites = [s for s in SUITE_SECTIONS if parser.has_section(s)]
    if subcommand == "all":
        if not present_suites:
            raise ConfigError(path, None, "config declares no suite sections")
        wanted = present_suites
    else:
        if subcommand not in SUITE_SECTIONS:
            raise ConfigError(path, None, f"unknown subcommand {subcommand!r}")
        if not parser.has_section(subcommand) and _SCHEMA[subcommand]:
            required = [k for k, (_, req, _) in _SCHEMA[subcommand].items() if req]
            if required:
                raise ConfigError(
                    path, None, f"missing required section [{subcommand}]"
                )
        wanted = [subcommand]

    needed = set(_GLOBAL_REQUIRED)
    for s in wanted:
        needed.update(_SUITE_NEEDS.get(s, ()))
    for sec in sorted(needed):
        if not parser.has_section(sec):
            raise ConfigError(path, None, f"missing required section [{sec}]")

    def parse_section(sec: str) -> dict:
        out = {}
        schema = _SCHEMA[sec]
        raw = parser[sec] if parser.has_section(sec) else {}
        for key, (fn, required, default) in schema.items():
            if key in raw:
                try:
                    out[key] = fn(raw[key])
                except (ValueError, TypeError) as exc:
                    raise ConfigError(
                        path,
                        key_lines.get((sec, key)),
                        f"invalid value for '{key}' in [{sec}]: {exc}",
                    ) from exc
            elif required:
                raise ConfigError(
                    path,
                    sec_lines.get(sec),
                    f"missing required key '{key}' in [{sec}]",
                )
            else:
                out[key] = default
        return out

    dom_v = parse_section("domain")
    prob_v = parse_section("problem")
    solv_v = parse_section("solver")
    run_v = parse_section("run")

    def build(section, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValueError as exc:
            raise ConfigError(path, sec_lines.get(section), f"[{section}]: {exc}") from exc

    domain = build(
        "domain",
        DomainSpec,
        int(dom_v["dimension"]),
        dom_v["side_length"],
        dom_v["points_per_axis"],
        dom_v["eigenvalue_convention"],
    )
    if prob_v["f_coefficients"]:
        f_kwargs = {} if prob_v["p"] is None else {"p": prob_v["p"]}
        f = build("problem", NonlinearitySpec, tuple(prob_v["f_coefficients"]), **f_kwargs)
    else:
        f = None
    g = None
    if prob_v["g_modes"]:
        g = build("problem", Field.from_modes, domain, prob_v["g_modes"])

    constants = None
    if parser.has_section("constants"):
        cv = parse_section("constants")
        constants = build("constants", DissipativityConstants, **cv)
    f_add = None
    if parser.has_section("f_add"):
        fv = parse_section("f_add")
        f_add = build("f_add", LipschitzGrowthConstants, fv["kappa0"], fv["l0"])
    scan = None
    if parser.has_section("scan"):
        sv = parse_section("scan")
        scan = build("scan", ScanSpec, sv["radius"], sv["step"])

    seed = run_v["rng_seed"] if seed_override is None else int(seed_override)
    suites = {s: parse_section(s) for s in wanted}

    echo = {sec: dict(parser[sec]) for sec in parser.sections()}
    echo.setdefault("run", {})["rng_seed"] = str(seed)
    return ExperimentConfig(
        path=str(path),
        echo=echo,
        sha256=_hash_echo(echo),
        seed=seed,
        domain=domain,
        lam=prob_v["lambda"],
        f=f,
        g=g,
        dt=solv_v["dt"],
        t_end=solv_v["t_end"],
        scheme=solv_v["scheme"],
        record_stride=solv_v["record_stride"],
        record_mode=solv_v["record"],
        constants=constants,
        f_add=f_add,
        scan=scan,
        suites=suites,
    )
