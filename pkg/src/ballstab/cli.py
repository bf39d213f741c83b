"""Command-line front end.

Every command writes deterministic CSV or JSON, to stdout or to
``--output``.  CSV files always start with a header row and print reals
with 17 significant digits.  Exit status is 0 on success, 1 on invalid
input and 2 when an internal consistency diagnostic fires (disagreeing
``m_*`` branches or a failed lemma test).

CSV columns by command::

    curve       m, eps_<k> for each requested mode
    envelope    m, eps, active_k
    classify    eps, m, status, margin, witness_mode
    region      eps, m, status   (0 stable, 1 marginal, 2 unstable)
    mstar       m_star, branch_large, branch_small, beta_star
    betastar    beta_star
    check       name, d, alpha, beta, residual, tolerance, pass
    cascade     m_lo, m_hi, active_k
    conjecture  name, holds
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .checks import run_suite
from .conjectures import cascade, conjecture_report, lambda_table
from .curves import beta_star, coefficients, envelope, eps_k, intersection, landmarks, m_star, m_star_branches
from .errors import ConsistencyWarning, DomainError
from .spectrum import ModelParams
from .stability import Status, classify, region_grid

COMMANDS = ("curve", "envelope", "classify", "region", "mstar", "betastar", "check", "cascade", "conjecture", "figure")
FIGURES = {
    "fig1_left": (3, 1.0, 30.0),
    "fig1_right": (3, 1.0, 4.0),
    "fig2_left": (3, 0.2, 15.0),
    "fig2_right": (3, 1.0, 24.0),
    "fig3": (6, 3.0, 30.0),
    "fig4_left": (12, 9.0, 4.0),
    "fig4_right": (12, 9.0, 40.0),
    "fig5_left": (10, 8.0, 10.0),
    "fig5_right": (10, 8.0, 130.0),
}
AUTO_FACTOR = 1.25


class ConsistencyError(RuntimeError):
    """An internal cross-check failed; reported with exit status 2."""


@dataclass
class RunConfig:
    command: str
    params: Optional[ModelParams]
    options: dict = field(default_factory=dict)
    output_format: str = "csv"
    output_path: Optional[str] = None


# --------------------------------------------------------------------------
# formatting


def fmt(x) -> str:
    """17 significant digits for reals, plain digits for integers and integral modes."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def mode_str(k) -> str:
    # active modes are stored as floats but are always integers
    return str(int(k))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _params_dict(p: ModelParams) -> dict:
    return {"d": p.d, "alpha": p.alpha, "beta": p.beta}


def resolve_m_max(value, params: ModelParams) -> float:
    if value is None or value == "auto":
        return AUTO_FACTOR * m_star(params)
    try:
        v = float(value)
    except ValueError:
        raise DomainError(f"--m-max must be a number or 'auto', got {value!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise DomainError(f"--m-max must be positive, got {value!r}")
    return v


def _parse_modes(text: str) -> list[int]:
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = part.split("-")
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise DomainError(f"cannot parse modes {text!r}") from None
    if not out or min(out) < 1:
        raise DomainError(f"modes must be integers >= 1, got {text!r}")
    return out


# --------------------------------------------------------------------------
# commands


def _cmd_curve(cfg: RunConfig) -> str:
    p, o = cfg.params, cfg.options
    modes = _parse_modes(o["k"])
    grid = np.linspace(o["m_min"], resolve_m_max(o["m_max"], p), o["points"])
    cols = [eps_k(k, grid, p) for k in modes]
    if cfg.output_format == "json":
        return json_text(
            {
                "params": _params_dict(p),
                "m": grid.tolist(),
                "curves": {str(k): c.tolist() for k, c in zip(modes, cols)},
            }
        )
    return csv_text(["m"] + [f"eps_{k}" for k in modes], zip(grid, *cols))


def _cmd_envelope(cfg: RunConfig) -> str:
    p, o = cfg.params, cfg.options
    env = envelope(p, o["m_min"], resolve_m_max(o["m_max"], p), o["points"])
    if cfg.output_format == "json":
        return json_text(
            {
                "params": _params_dict(p),
                "m_star": env.m_star,
                "breakpoints": env.breakpoints.tolist(),
                "m": env.grid.tolist(),
                "eps": env.values.tolist(),
                "active_k": [int(k) for k in env.active_mode],
                "settled": bool(np.all(env.settled)),
            }
        )
    rows = ((m, v, mode_str(k)) for m, v, k in zip(env.grid, env.values, env.active_mode))
    return csv_text(["m", "eps", "active_k"], rows)


def _cmd_classify(cfg: RunConfig) -> str:
    p, o = cfg.params, cfg.options
    if o["eps"] is None or o["m"] is None:
        raise DomainError("classify needs --eps and --m")
    v = classify(o["eps"], o["m"], p, tol=o["tol"])
    name = v.status.name.lower()
    if cfg.output_format == "json":
        return json_text(
            {
                "params": _params_dict(p),
                "eps": o["eps"],
                "m": o["m"],
                "status": name,
                "margin": v.margin,
                "witness_mode": v.witness_mode,
            }
        )
    return csv_text(["eps", "m", "status", "margin", "witness_mode"], [(o["eps"], o["m"], name, v.margin, v.witness_mode)])


def _region(p, eps_max, m_min, m_max, n_eps, n_m, tol):
    m_max = resolve_m_max(m_max, p)
    if eps_max is None:
        # leave headroom above the tallest curve
        eps_max = 1.1 * landmarks(2, p).peak
    return region_grid(p, (0.0, eps_max), (m_min, m_max), (n_eps, n_m), tol)


def _cmd_region(cfg: RunConfig) -> str:
    p, o = cfg.params, cfg.options
    m_min = o["m_min"] if o["m_min"] > 0 else None
    if m_min is None:
        m_min = resolve_m_max(o["m_max"], p) / o["points"]
    ev, mv, st = _region(p, o["eps_max"], m_min, o["m_max"], o["eps_points"] or o["points"], o["points"], o["tol"])
    if cfg.output_format == "json":
        return json_text(
            {"params": _params_dict(p), "eps": ev.tolist(), "m": mv.tolist(), "status": st.tolist()}
        )
    rows = ((e, m, int(st[i, j])) for i, e in enumerate(ev) for j, m in enumerate(mv))
    return csv_text(["eps", "m", "status"], rows)


def _cmd_mstar(cfg: RunConfig) -> str:
    p = cfg.params
    large, small = m_star_branches(p)
    bs = beta_star(p.d, p.alpha)
    ms = m_star(p)
    if cfg.output_format == "json":
        return json_text(
            {
                "params": _params_dict(p),
                "m_star": ms,
                "branch": "large_beta" if p.beta >= bs else "small_beta",
                "branch_large": large,
                "branch_small": small,
                "beta_star": bs,
            }
        )
    return csv_text(["m_star", "branch_large", "branch_small", "beta_star"], [(ms, large, small, bs)])


def _cmd_betastar(cfg: RunConfig) -> str:
    o = cfg.options
    bs = beta_star(o["d"], o["alpha"])
    if cfg.output_format == "json":
        return json_text({"d": o["d"], "alpha": o["alpha"], "beta_star": bs})
    if cfg.output_path is None:
        return fmt(bs) + "\n"
    return csv_text(["beta_star"], [(bs,)])


def _cmd_check(cfg: RunConfig) -> str:
    o = cfg.options
    rep = run_suite(o["suite"], o["grid"], o["k_lemma"])
    if cfg.output_format == "json":
        text = json_text(rep)
    else:
        rows = (
            (t["name"], t["params"]["d"], t["params"]["alpha"], t["params"]["beta"], t["residual"], t["tolerance"], t["pass"])
            for t in rep["tests"]
        )
        text = csv_text(["name", "d", "alpha", "beta", "residual", "tolerance", "pass"], rows)
    failed = [t for t in rep["tests"] if not t["pass"]]
    if failed:
        raise ConsistencyError(f"{len(failed)} lemma test(s) failed", text)
    return text


def _cmd_cascade(cfg: RunConfig) -> str:
    rep = cascade(cfg.params, cfg.options["k_max"], cfg.options["grid_points"])
    if cfg.output_format == "json":
        return json_text(rep.as_dict())
    rows = ((lo, hi, k) for lo, hi, k in rep.segments)
    return csv_text(["m_lo", "m_hi", "active_k"], rows)


def _cmd_conjecture(cfg: RunConfig) -> str:
    rep = conjecture_report(cfg.params, cfg.options["k_max"], cfg.options["grid_points"])
    if cfg.output_format == "json":
        return json_text(rep)
    return csv_text(["name", "holds"], ((c["name"], c["holds"]) for c in rep["claims"]))


def _cmd_figure(cfg: RunConfig) -> str:
    o = cfg.options
    files = export_figure(o["id"], o["output_dir"], points=o["points"], k_max=o["k_max"])
    return "".join(f"{f}\n" for f in files)


# --------------------------------------------------------------------------
# figure export


def _landmark_sidecar(fid: str, p: ModelParams) -> dict:
    large, small = m_star_branches(p)
    bs = beta_star(p.d, p.alpha)
    return {
        "figure": fid,
        "params": _params_dict(p),
        "beta_star": bs,
        "m2c": landmarks(2, p).crit,
        "m23": intersection(2, 3, p),
        "m3c": landmarks(3, p).crit,
        "m_star": m_star(p),
        "m_star_branch": "large_beta" if p.beta >= bs else "small_beta",
        "m_star_branch_large": large,
        "m_star_branch_small": small,
    }


def _envelope_rows(p, points, modes):
    env = envelope(p, 0.0, AUTO_FACTOR * m_star(p), points)
    curves = [eps_k(k, env.grid, p) for k in modes]
    header = ["m", "eps", "active_k"] + [f"eps_{k}" for k in modes]
    rows = [
        (m, v, mode_str(k), *(c[i] for c in curves))
        for i, (m, v, k) in enumerate(zip(env.grid, env.values, env.active_mode))
    ]
    return header, rows, env


def export_figure(figure_id: str, output_dir=".", points: int = 1024, k_max: int = 64) -> list[str]:
    """Write the data behind one figure as CSV plus a JSON sidecar of landmarks.

    Returns the written paths.  Region figures (``fig1_*``) get an extra
    ``<id>_region.csv`` with the stability status on an ``(eps, m)`` grid.
    """
    if figure_id not in FIGURES:
        raise DomainError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURES)}")
    if points < 2:
        raise DomainError("points must be at least 2")
    p = ModelParams(*FIGURES[figure_id])
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    side = _landmark_sidecar(figure_id, p)
    written = []

    def write(name, text):
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(str(path))

    if figure_id.startswith("fig1"):
        header, rows, env = _envelope_rows(p, points, [2, 3])
        write(f"{figure_id}.csv", csv_text(header, rows))
        n = max(points // 4, 16)
        ev, mv, st = _region(p, None, AUTO_FACTOR * m_star(p) / n, "auto", n, n, 1e-9)
        reg = ((e, m, int(st[i, j])) for i, e in enumerate(ev) for j, m in enumerate(mv))
        write(f"{figure_id}_region.csv", csv_text(["eps", "m", "status"], reg))
        side["breakpoints"] = env.breakpoints.tolist()
    elif figure_id == "fig2_left":
        k = 5
        lm = landmarks(k, p)
        grid = np.linspace(0.0, 1.1 * lm.root, points)
        write(f"{figure_id}.csv", csv_text(["m", f"eps_{k}"], zip(grid, eps_k(k, grid, p))))
        side["curve"] = {"k": k, "root": lm.root, "crit": lm.crit, "peak": lm.peak, "inflection": lm.inflection}
    elif figure_id == "fig2_right":
        grid = np.linspace(0.0, AUTO_FACTOR * m_star(p), points)
        write(f"{figure_id}.csv", csv_text(["m", "eps_2", "eps_3"], zip(grid, eps_k(2, grid, p), eps_k(3, grid, p))))
        side["eps3_peak"] = landmarks(3, p).peak
        side["eps2_at_m23"] = eps_k(2, side["m23"], p)
    elif figure_id in ("fig3", "fig4_left", "fig4_right"):
        modes = [2, 3] if figure_id == "fig3" else list(range(2, 13))
        header, rows, env = _envelope_rows(p, points, modes)
        write(f"{figure_id}.csv", csv_text(header, rows))
        side["breakpoints"] = env.breakpoints.tolist()
        rep = cascade(p, k_max, max(points, 16))
        side["cascade"] = {
            "k_max": rep.k_max,
            "active_modes": rep.active_modes,
            "skipped_modes": rep.skipped_modes,
            "m_resolved": rep.m_resolved,
        }
    else:
        tab = lambda_table(p, k_max)
        rows = ((int(k), v, bool(a)) for k, v, a in zip(tab.k, tab.values, tab.applicable))
        write(f"{figure_id}.csv", csv_text(["k", "lambda", "applicable"], rows))
        side["k_max"] = k_max
    side["files"] = [Path(w).name for w in written]
    write(f"{figure_id}.json", json_text(side))
    return written


# --------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input: exit 1, keeping 2 for consistency diagnostics
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ballstab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model(sp, beta=True):
        sp.add_argument("--d", type=int, required=True, help="dimension, >= 2")
        sp.add_argument("--alpha", type=float, required=True, help="repulsion exponent, 0 < alpha < d-1")
        if beta:
            sp.add_argument("--beta", type=float, required=True, help="attraction exponent, > 0")

    def out(sp, default="csv"):
        sp.add_argument("--format", choices=("csv", "json"), default=default)
        sp.add_argument("--output", "-o", default=None, help="output file (default stdout)")

    def mrange(sp, points=1024):
        sp.add_argument("--m-min", type=float, default=0.0)
        sp.add_argument("--m-max", default="auto", help="upper mass or 'auto' for 1.25 m_*")
        sp.add_argument("--points", type=int, default=points)

    sp = sub.add_parser("curve", help="eps_k(m) for selected modes")
    model(sp)
    sp.add_argument("--k", default="2,3", help="modes, e.g. '2,3,5' or '2-8'")
    mrange(sp)
    out(sp)

    sp = sub.add_parser("envelope", help="eps(m) with the active mode")
    model(sp)
    mrange(sp)
    out(sp)

    sp = sub.add_parser("classify", help="stability verdict at one (eps, m)")
    model(sp)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--m", type=float)
    sp.add_argument("--tol", type=float, default=1e-9)
    out(sp)

    sp = sub.add_parser("region", help="status codes on an (eps, m) grid")
    model(sp)
    mrange(sp, points=128)
    sp.add_argument("--eps-max", type=float, default=None, help="default 1.1 times the peak of eps_2")
    sp.add_argument("--eps-points", type=int, default=None, help="rows; default --points")
    sp.add_argument("--tol", type=float, default=1e-9)
    out(sp)

    sp = sub.add_parser("mstar", help="mass threshold and both closed-form branches")
    model(sp)
    out(sp)

    sp = sub.add_parser("betastar", help="attraction threshold beta_*")
    model(sp, beta=False)
    out(sp)

    sp = sub.add_parser("check", help="run the lemma suite")
    sp.add_argument("--suite", default="lemmas")
    sp.add_argument("--grid", default="standard", help="'standard' or 'small'")
    sp.add_argument("--k-lemma", type=int, default=1000, help="largest mode tested")
    out(sp, default="json")

    sp = sub.add_parser("cascade", help="segment decomposition of eps(m)")
    model(sp)
    sp.add_argument("--k-max", type=int, default=64)
    sp.add_argument("--grid-points", type=int, default=4096)
    out(sp, default="json")

    sp = sub.add_parser("conjecture", help="evidence for the open claims about eps(m)")
    model(sp)
    sp.add_argument("--k-max", type=int, default=64)
    sp.add_argument("--grid-points", type=int, default=2048)
    out(sp, default="json")

    sp = sub.add_parser("figure", help="export the data behind one figure")
    sp.add_argument("--id", required=True, help=", ".join(FIGURES))
    sp.add_argument("--output-dir", default=".")
    sp.add_argument("--points", type=int, default=1024)
    sp.add_argument("--k-max", type=int, default=64)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(ns).items() if k not in ("command", "format", "output")}
    params = None
    if ns.command not in ("betastar", "check", "figure"):
        params = ModelParams(ns.d, ns.alpha, ns.beta)
    return RunConfig(
        command=ns.command,
        params=params,
        options=opts,
        output_format=getattr(ns, "format", "csv"),
        output_path=getattr(ns, "output", None),
    )


_HANDLERS = {
    "curve": _cmd_curve,
    "envelope": _cmd_envelope,
    "classify": _cmd_classify,
    "region": _cmd_region,
    "mstar": _cmd_mstar,
    "betastar": _cmd_betastar,
    "check": _cmd_check,
    "cascade": _cmd_cascade,
    "conjecture": _cmd_conjecture,
    "figure": _cmd_figure,
}


def run(config: RunConfig) -> int:
    """Execute one command; returns the exit status."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConsistencyWarning)
        try:
            text = _HANDLERS[config.command](config)
        except DomainError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except ConsistencyError as exc:
            msg, text = exc.args
            _emit(text, config.output_path)
            print(f"consistency: {msg}", file=sys.stderr)
            return 2
    _emit(text, config.output_path)
    diag = [w for w in caught if issubclass(w.category, ConsistencyWarning)]
    for w in diag:
        print(f"consistency: {w.message}", file=sys.stderr)
    return 2 if diag else 0


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
