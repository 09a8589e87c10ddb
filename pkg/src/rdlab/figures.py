"""Plot-ready data files and rendered figures for suite reports.

emit_plots turns a report's suite payloads into two-column CSV files (one
per sweep or series: log-log sweeps, distance series, correlation curves)
that any plotting tool can consume, and renders one PNG figure per suite
next to them.  An empty sweep still produces its file, header only, so
downstream tooling never has to special-case missing data.

Payloads arrive either fresh from a run (numpy arrays) or from a report
loaded off disk (lists, with non-finite floats stored as strings), so every
extractor goes through a tolerant float conversion.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from rdlab.reporting import write_csv  # noqa: E402

_DPI = 110
_PNG_META = {"Software": ""}


@dataclass
class PlotSeries:
    name: str         # file stem, unique within the suite
    xlabel: str
    ylabel: str
    x: np.ndarray
    y: np.ndarray
    scale: str = "linear"   # "linear" | "semilogy" | "loglog"


def _arr(values) -> np.ndarray:
    if values is None:
        return np.empty(0)
    return np.asarray([float(v) for v in np.ravel(values)], dtype=float)


def _series_solve(payload: dict) -> list:
    mode = payload.get("mode")
    if mode == "linear-oracle":
        dts = _arr(payload["dts"])
        errs = _arr(payload["errors"])
        return [
            PlotSeries("convergence", "log_dt", "log_rel_error",
                       np.log(dts), np.log(np.maximum(errs, 1e-300)), "linear")
        ]
    if mode == "gronwall":
        return [
            PlotSeries("ratio_series", "t", "max_ratio",
                       _arr(payload["times"]), _arr(payload["max_ratio_series"]))
        ]
    out = []
    t = _arr(payload["times"])
    for key, label in (("l2_series", "l2_norm"), ("lp_series", "lp_norm"), ("h1_series", "h1_seminorm")):
        out.append(PlotSeries(key, "t", label, t, _arr(payload[key]), "semilogy"))
    return out


def _series_certify(payload: dict) -> list:
    checks = payload["certification"]["checks"]
    idx = np.arange(len(checks), dtype=float)
    margins = _arr([c["margin"] for c in checks])
    return [PlotSeries("margins", "condition_index", "margin", idx, margins)]


def _series_decompose(payload: dict) -> list:
    checks = payload["recertification"]["checks"]
    idx = np.arange(len(checks), dtype=float)
    margins = _arr([c["margin"] for c in checks])
    return [PlotSeries("margins", "condition_index", "margin", idx, margins)]


def _series_energy(payload: dict) -> list:
    u0 = _arr(payload["u0_l2"])
    return [
        PlotSeries("l2_certificate", "u0_l2", "c_l2", u0, _arr(payload["c_l2"])),
        PlotSeries("lp_certificate", "u0_l2", "c_lp", u0, _arr(payload["c_lp"])),
    ]


def _series_lp_bound(payload: dict) -> list:
    t = _arr(payload["times"])
    moments = payload["moment_series_k1"]
    out = []
    for i, label in enumerate(payload["targets"]):
        out.append(
            PlotSeries(f"moment_{label}", "t", "moment_k1", t, _arr(moments[i]), "semilogy")
        )
    return out


def _series_smoothing(payload: dict) -> list:
    out = []
    for key in sorted(payload["reports"]):
        rep = payload["reports"][key]
        out.append(
            PlotSeries(
                f"gamma{key}",
                "log_diff0_l2_sq",
                "log_diff1_norm_pow",
                _arr(rep["log_x"]),
                _arr(rep["log_y"]),
            )
        )
    return out


def _series_h1(payload: dict) -> list:
    return [
        PlotSeries("gradient_sweep", "log_diff0_l2", "log_grad_sq",
                   _arr(payload["log_delta"]), _arr(payload["log_grad"]))
    ]


def _series_ak_bk(payload: dict) -> list:
    amps = _arr(payload["amplitudes"])
    qa = np.asarray(payload["sup_quotients"], dtype=float)   # (dirs, amps, ks)
    qb = np.asarray(payload["integral_quotients"], dtype=float)
    out = []
    for ki, k in enumerate(payload["ks"]):
        out.append(PlotSeries(f"q_sup_k{k}", "amplitude", "sup_quotient",
                              amps, qa[:, :, ki].max(axis=0), "loglog"))
        out.append(PlotSeries(f"q_integral_k{k}", "amplitude", "integral_quotient",
                              amps, qb[:, :, ki].max(axis=0), "loglog"))
    return out


def _series_attractor(payload: dict) -> list:
    out = []
    for label in sorted(payload.get("attraction", {})):
        rep = payload["attraction"][label]
        out.append(
            PlotSeries(f"distance_{label}", "t", "distance",
                       _arr(rep["times"]), _arr(rep["distances"]), "semilogy")
        )
    return out


def _series_dimension(payload: dict) -> list:
    out = []
    for name in sorted(payload.get("estimates", {})):
        est = payload["estimates"][name]
        out.append(
            PlotSeries(f"corr_{name}", "log_eps", "log_c",
                       _arr(est["log_eps"]), _arr(est["log_c"]))
        )
    return out


def _series_net_transport(payload: dict) -> list:
    sizes = payload.get("net_sizes", {})
    eps = _arr(list(sizes.keys()))
    order = np.argsort(eps)
    vals = _arr(list(sizes.values()))
    s = payload["smoothing"]
    out = [
        PlotSeries("net_sizes", "eps", "net_size", eps[order], vals[order], "loglog"),
        PlotSeries("holder_sweep", "log_diff0_l2_sq", "log_diff1_norm_pow",
                   _arr(s["log_x"]), _arr(s["log_y"])),
    ]
    return out


_EXTRACTORS = {
    "certify-nonlinearity": _series_certify,
    "decompose": _series_decompose,
    "solve": _series_solve,
    "energy-monitor": _series_energy,
    "lp-bound": _series_lp_bound,
    "smoothing": _series_smoothing,
    "h1-smoothing": _series_h1,
    "ak-bk": _series_ak_bk,
    "attractor": _series_attractor,
    "dimension": _series_dimension,
    "net-transport": _series_net_transport,
}


def suite_series(suite_name: str, payload: dict) -> list:
    fn = _EXTRACTORS.get(suite_name)
    if fn is None:
        return []
    return fn(payload)


def _render_figure(suite_name: str, series: list, path: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    drew = False
    for s in series:
        if len(s.x) == 0:
            continue
        marker = "o" if len(s.x) <= 60 else None
        if s.scale == "loglog":
            ax.loglog(s.x, s.y, marker=marker, ms=3, label=s.name)
        elif s.scale == "semilogy":
            ax.semilogy(s.x, np.maximum(s.y, 1e-300), marker=marker, ms=3, label=s.name)
        else:
            ax.plot(s.x, s.y, marker=marker, ms=3, ls="" if "certificate" in s.name else "-",
                    label=s.name)
        drew = True
    if drew:
        ax.set_xlabel(series[0].xlabel)
        ax.set_ylabel(series[0].ylabel)
        ax.legend(fontsize=7)
    ax.set_title(suite_name)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI, metadata=_PNG_META)
    plt.close(fig)


def emit_plots(suites: dict, out_dir: str, render: bool = True) -> list:
    """Write two-column plot data (and figures) for every suite result.

    `suites` maps suite name -> {"payload": ...}; returns the files written.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for suite_name in sorted(suites):
        payload = suites[suite_name].get("payload", {})
        series = suite_series(suite_name, payload)
        for s in series:
            fname = f"{suite_name}_{s.name}.csv".replace("/", "_")
            rows = list(zip(s.x.tolist(), s.y.tolist()))
            write_csv(os.path.join(out_dir, fname), (s.xlabel, s.ylabel), rows)
            written.append(fname)
        if render and series:
            fig_name = f"fig_{suite_name}.png"
            _render_figure(suite_name, series, os.path.join(out_dir, fig_name))
            written.append(fig_name)
    return written
