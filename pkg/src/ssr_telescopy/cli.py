"""Command-line front end.

Reproduces the ancilla-comparison table and ratio-versus-photon-number
figure as data files, and drives the teleportation, estimation, optimizer,
and bound modules with reproducible configs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds, catalog, estimation, teleport
from .catalog import AncillaSpec, NormalizationError, SqueezedParams
from .fock import CapacityError
from .qfi import SourceParams

# Table rows: kind -> (nonlocal resource, phase-reference resource)
TABLE_FAMILIES = [
    ("gjc", "yes", "yes"),
    ("n_copy_spe", "yes", "yes"),
    ("klm", "yes", "yes"),
    ("optimal_klm", "yes", "yes"),
    ("tmsv_with_reference", "yes", "yes"),
    ("coherent_pair", "no", "yes"),
    ("tpe", "yes", "no"),
]

FIG_FAMILIES = ("klm", "n_copy_spe", "optimal_klm", "tri_intensity", "tri_amplitude")

FIG2_MAX_N = 30


@dataclass
class RunConfig:
    command: str
    ancilla: str = "klm"
    photons: int = 4
    g: float = 0.7
    theta: float = 0.3
    epsilon: float = 1e-3
    samples: int = 100000
    repetitions: int = 50
    seed: int = 0
    fmt: str = "csv"
    out: str | None = None
    alpha: float = 1.0
    squeezing: float = 1.0
    mean_photons: float | None = None


def _fmt(x: float) -> str:
    """12 significant digits, '.' decimal separator."""
    return f"{x:.12g}"


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write output file {path!r}: {exc}") from exc


def _json_report(cfg: RunConfig, results: dict) -> str:
    payload = {
        "config": {
            "command": cfg.command,
            "ancilla": cfg.ancilla,
            "photons": cfg.photons,
            "g": cfg.g,
            "theta": cfg.theta,
            "epsilon": cfg.epsilon,
            "samples": cfg.samples,
            "repetitions": cfg.repetitions,
            "seed": cfg.seed,
            "format": cfg.fmt,
            "out": cfg.out,
            "alpha": cfg.alpha,
            "squeezing": cfg.squeezing,
            "mean_photons": cfg.mean_photons,
        },
        "results": results,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _build_ancilla(cfg: RunConfig) -> AncillaSpec:
    name = cfg.ancilla
    if name.endswith(".json") or os.path.sep in name:
        try:
            text = Path(name).read_text()
        except OSError as exc:
            raise OSError(f"cannot read ancilla file {name!r}: {exc}") from exc
        return AncillaSpec.from_json(text)
    if name in ("tmsv", "tmsv_with_reference"):
        return catalog.build(name, params=SqueezedParams(cfg.squeezing, alpha=cfg.alpha))
    if name == "coherent_pair":
        return catalog.build(name, alpha=cfg.alpha)
    return catalog.build(name, n=cfg.photons)


def _table_entry(kind: str, cfg: RunConfig) -> tuple[float, float, int]:
    if kind in ("tmsv", "tmsv_with_reference"):
        params = SqueezedParams(cfg.squeezing, alpha=cfg.alpha)
        spec = catalog.build(kind, params=params)
        closed = catalog.closed_ratio(kind, params=params)
        n_col = cfg.photons
    elif kind == "coherent_pair":
        spec = catalog.build(kind, alpha=cfg.alpha)
        closed = catalog.closed_ratio(kind, alpha=cfg.alpha)
        n_col = cfg.photons
    elif kind in ("gjc", "tpe"):
        spec = catalog.build(kind)
        closed = catalog.closed_ratio(kind, n=1)
        n_col = 1 if kind == "gjc" else 2
    else:
        spec = catalog.build(kind, n=cfg.photons)
        closed = catalog.closed_ratio(kind, n=cfg.photons)
        n_col = cfg.photons
    numeric = catalog.sector_ratio(spec.sector_weights())
    return closed, numeric, n_col


def cmd_table1(cfg: RunConfig) -> str:
    lines = ["kind,N,closed_ratio,numeric_ratio,bound,NL,PR"]
    for kind, nl, pr in TABLE_FAMILIES:
        closed, numeric, n_col = _table_entry(kind, cfg)
        bound = bounds.bound_max_photons(n_col)
        lines.append(
            f"{kind},{n_col},{_fmt(closed)},{_fmt(numeric)},{_fmt(bound)},{nl},{pr}"
        )
    text = "\n".join(lines) + "\n"
    _write_text(cfg.out, text)
    return text


def _fig2_data(n_max: int) -> tuple[list[int], dict[str, list[float]]]:
    ns = list(range(1, n_max + 1))
    curves: dict[str, list[float]] = {k: [] for k in FIG_FAMILIES}
    curves["bound"] = []
    for n in ns:
        for kind in FIG_FAMILIES:
            if kind.startswith("tri") and n % 2:
                curves[kind].append(math.nan)
            else:
                spec = catalog.build(kind, n=n)
                curves[kind].append(catalog.sector_ratio(spec.sector_weights()))
        curves["bound"].append(bounds.bound_max_photons(n))
    return ns, curves


def _render_figure(path: str, ns, curves) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for kind in FIG_FAMILIES:
        ys = np.array(curves[kind])
        mask = ~np.isnan(ys)
        ax.plot(np.array(ns)[mask], ys[mask], marker="o", markersize=3, label=kind)
    ax.plot(ns, curves["bound"], "k--", label="bound cos(pi/(N+2))")
    ax.set_xlabel("ancilla photon number N")
    ax.set_ylabel("information ratio")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def cmd_fig2(cfg: RunConfig) -> str:
    n_max = cfg.photons
    if n_max > FIG2_MAX_N:
        raise ValueError(f"photon number {n_max} exceeds figure limit {FIG2_MAX_N}")
    ns, curves = _fig2_data(n_max)
    cols = list(FIG_FAMILIES) + ["bound"]
    lines = ["N," + ",".join(cols)]
    for i, n in enumerate(ns):
        cells = [
            "" if math.isnan(curves[k][i]) else _fmt(curves[k][i]) for k in cols
        ]
        lines.append(f"{n}," + ",".join(cells))
    text = "\n".join(lines) + "\n"
    _write_text(cfg.out, text)
    if cfg.out is not None:
        ext = ".svg" if cfg.fmt == "svg" else ".png"
        _render_figure(str(Path(cfg.out).with_suffix(ext)), ns, curves)
    return text


def cmd_teleport(cfg: RunConfig) -> str:
    spec = _build_ancilla(cfg)
    p = SourceParams(cfg.epsilon, cfg.g, cfg.theta)
    report = teleport.fisher_information(spec, p)
    closed = catalog.sector_ratio(spec.sector_weights())
    results = {
        "f_gmod": report.f_gmod,
        "f_theta": report.f_theta,
        "ratio_gmod": report.ratio_gmod,
        "ratio_theta": report.ratio_theta,
        "fi_ratio": report.ratio,
        "closed_ratio": closed,
        "failure_probability": teleport.failure_probability(spec),
    }
    text = _json_report(cfg, results)
    _write_text(cfg.out, text)
    return text


def cmd_estimate(cfg: RunConfig) -> str:
    spec = _build_ancilla(cfg)
    p = SourceParams(cfg.epsilon, cfg.g, cfg.theta)
    banks = estimation.make_setting_banks(spec, p)
    workers = _worker_cap()
    rep = estimation.monte_carlo_crb(
        spec, p, banks, cfg.samples, cfg.repetitions, cfg.seed, workers=workers
    )
    results = {
        "g_hat": rep.g_hat,
        "theta_hat": rep.theta_hat,
        "covariance": [[float(v) for v in row] for row in np.atleast_2d(rep.covariance)],
        "crb": [[float(v) for v in row] for row in np.atleast_2d(rep.crb)],
        "variance_to_crb_ratio": rep.ratio,
    }
    text = _json_report(cfg, results)
    _write_text(cfg.out, text)
    return text


def cmd_optimize(cfg: RunConfig) -> str:
    value, dist, converged = bounds.maximize_h_simplex(
        cfg.photons, bounds.OptimizerConfig(seed=cfg.seed)
    )
    results = {
        "value": value,
        "weights": [float(w) for w in dist.weights],
        "converged": bool(converged),
        "bound": bounds.bound_max_photons(cfg.photons),
    }
    text = _json_report(cfg, results)
    _write_text(cfg.out, text)
    return text


def cmd_bound(cfg: RunConfig) -> str:
    results: dict = {}
    if cfg.mean_photons is not None:
        results["mean_photon_bound"] = bounds.bound_mean_photons(cfg.mean_photons)
        if cfg.mean_photons < 0.25:
            results["small_mean_approximation"] = bounds.small_mean_bound(
                cfg.mean_photons
            )
    results["max_photon_bound"] = bounds.bound_max_photons(cfg.photons)
    if cfg.photons >= 3:
        results["asymptotic_value"] = bounds.asymptotic_bound(cfg.photons)
    text = _json_report(cfg, results)
    _write_text(cfg.out, text)
    return text


def _worker_cap() -> int:
    raw = os.environ.get("SSR_TELESCOPY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"SSR_TELESCOPY_THREADS must be an integer, got {raw!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssr-telescopy",
        description="Exact numerics for ancilla-assisted two-telescope "
        "interferometry under photon-number superselection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("table1", "fig2", "teleport", "estimate", "optimize", "bound"):
        sp = sub.add_parser(name)
        sp.add_argument("--ancilla", type=str, default=None,
                        help="catalog kind or path to a JSON ancilla file")
        sp.add_argument("--photons", type=int, default=None)
        sp.add_argument("--g", type=float, default=None)
        sp.add_argument("--theta", type=float, default=None)
        sp.add_argument("--epsilon", type=float, default=None)
        sp.add_argument("--samples", type=int, default=None)
        sp.add_argument("--repetitions", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--format", dest="fmt", choices=("csv", "json", "svg"),
                        default=None)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--config", type=str, default=None,
                        help="JSON config file; explicit flags override it")
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--squeezing", type=float, default=None)
        sp.add_argument("--mean-photons", dest="mean_photons", type=float,
                        default=None)
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise OSError(f"cannot read config file {args.config!r}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        aliases = {"format": "fmt"}
        for key, value in data.items():
            attr = aliases.get(key, key)
            if attr == "command":
                continue
            if not hasattr(cfg, attr):
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, attr, value)
    for attr in ("ancilla", "photons", "g", "theta", "epsilon", "samples",
                 "repetitions", "seed", "fmt", "out", "alpha", "squeezing",
                 "mean_photons"):
        value = getattr(args, attr)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg


COMMANDS = {
    "table1": cmd_table1,
    "fig2": cmd_fig2,
    "teleport": cmd_teleport,
    "estimate": cmd_estimate,
    "optimize": cmd_optimize,
    "bound": cmd_bound,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        COMMANDS[cfg.command](cfg)
    except (ValueError, NormalizationError, CapacityError, OSError,
            KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
