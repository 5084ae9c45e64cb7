"""Command-line entry point: ``ebitrates {rates,trirate,protocol,schur}``.

Exit codes: 0 ok, 2 bad input, 3 support not free, 4 POVM retries exhausted,
5 Schur-Weyl budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .freesupport import NotFreeSupport, detect_free_support, h_alpha_theta, sc_rate_curve_free
from .povm import RetryExhausted, build_povm
from .rates import RateCurve, bipartite_sc_rate, curve_from_function, sc_fidelity_from_probability
from .schur_weyl import (
    N_MAX,
    BudgetExceeded,
    e_alpha_theta_bounds,
    general_sc_rate_estimate,
    spectrum_table,
)
from .state import BUILTIN_STATES, PureTripartiteState, StateFormatError
from .truncation import direct_exponent_curve

EXIT_OK, EXIT_INPUT, EXIT_NOT_FREE, EXIT_RETRY, EXIT_BUDGET = 0, 2, 3, 4, 5


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    state_path: str
    r_min: float = 0.0
    r_max: float = 1.0
    r_step: float = 0.01
    alpha: float = 0.5
    theta: tuple = (0.5, 0.5, 0.0)
    n: int = 4
    r: float | None = None
    seed: int | None = None
    n_max: int = N_MAX
    out_path: str | None = None
    fmt: str = "csv"

    def grid(self) -> np.ndarray:
        if not self.r_step > 0:
            raise InputError("--r-step must be positive")
        if self.r_min < 0 or self.r_min > self.r_max:
            raise InputError("need 0 <= --r-min <= --r-max")
        count = int(math.floor((self.r_max - self.r_min) / self.r_step + 1e-9)) + 1
        return np.round(self.r_min + self.r_step * np.arange(count), 12)


def _round(obj):
    """12 significant digits throughout a JSON payload."""
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def _dump_json(payload) -> str:
    return json.dumps(_round(payload), indent=2, sort_keys=True) + "\n"


def load_state(source: str) -> PureTripartiteState:
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1].upper()
        if name not in BUILTIN_STATES:
            raise InputError(f"unknown builtin state {name!r}; choose from {sorted(BUILTIN_STATES)}")
        return BUILTIN_STATES[name]()
    path = Path(source)
    if not path.is_file():
        raise InputError(f"state file {source} not found")
    try:
        return PureTripartiteState.load(path)
    except (StateFormatError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed state file {source}: {exc}") from exc


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _curves(state, grid):
    direct = direct_exponent_curve(state, grid)
    cert = detect_free_support(state)
    if cert:
        sc = sc_rate_curve_free(state, grid)
    else:
        print("warning: support is not free; the strong-converse columns are the bipartite "
              "upper bound min{R*_A, R*_B}", file=sys.stderr)
        specA, specB = state.spectrum("A"), state.spectrum("B")
        sc = curve_from_function(
            lambda r: min(bipartite_sc_rate(specA, r), bipartite_sc_rate(specB, r)),
            grid, "strong-converse")
    fid = RateCurve(grid, [sc_fidelity_from_probability(sc, r) for r in grid],
                    "strong-converse-fidelity")
    return {"direct": direct, "strong-converse": sc, "strong-converse-fidelity": fid}


def cmd_rates(cfg: RunConfig) -> int:
    state = load_state(cfg.state_path)
    curves = _curves(state, cfg.grid())
    if cfg.fmt == "json":
        payload = {k: {"r": c.grid.tolist(), "R": c.values.tolist()} for k, c in curves.items()}
        _emit(_dump_json(payload), cfg.out_path)
        return EXIT_OK
    if cfg.out_path is None:
        sys.stdout.write("\n".join(f"# {k}\n{c.to_csv()}" for k, c in curves.items()))
        return EXIT_OK
    out = Path(cfg.out_path)
    out.mkdir(parents=True, exist_ok=True)
    for kind, curve in curves.items():
        (out / f"{kind.replace('-', '_')}.csv").write_text(curve.to_csv())
    return EXIT_OK


def cmd_trirate(cfg: RunConfig) -> int:
    state = load_state(cfg.state_path)
    try:
        curve = sc_rate_curve_free(state, cfg.grid())
    except NotFreeSupport as exc:
        print(f"support is not free ({exc}); use `ebitrates schur` for finite-n lower bounds",
              file=sys.stderr)
        return EXIT_NOT_FREE
    if cfg.fmt == "json":
        _emit(_dump_json({"r": curve.grid.tolist(), "R": curve.values.tolist()}), cfg.out_path)
    else:
        _emit(curve.to_csv(), cfg.out_path)
    return EXIT_OK


def cmd_protocol(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise InputError("protocol needs --seed")
    state = load_state(cfg.state_path)
    try:
        cert = build_povm(state, cfg.seed)
    except RetryExhausted as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RETRY
    _emit(_dump_json(cert.to_json()), cfg.out_path)
    return EXIT_OK


def cmd_schur(cfg: RunConfig) -> int:
    state = load_state(cfg.state_path)
    if not 0 < cfg.alpha < 1:
        raise InputError("--alpha must lie in (0, 1)")
    try:
        table = spectrum_table(state, cfg.n, n_max=cfg.n_max)
        lo, hi = e_alpha_theta_bounds(state, cfg.alpha, cfg.theta, cfg.n)
        estimate = None if cfg.r is None else general_sc_rate_estimate(state, cfg.r, cfg.n)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    cert = detect_free_support(state)
    exact = h_alpha_theta(cert.measured, cfg.alpha, cfg.theta) if cert else None
    if cfg.fmt == "csv":
        lines = ["n,alpha,M_n,M_n_plus_slack,exact"]
        ex = "" if exact is None else f"{exact:.12g}"
        lines.append(f"{cfg.n},{cfg.alpha:.12g},{lo:.12g},{hi:.12g},{ex}")
        _emit("\n".join(lines) + "\n", cfg.out_path)
        return EXIT_OK
    payload = {
        "table": table.to_json(),
        "bounds": {"alpha": cfg.alpha, "theta": list(cfg.theta), "M_n": lo, "M_n_plus_slack": hi,
                   "exact_free_support": exact},
    }
    if estimate is not None:
        payload["sc_rate_lower_bound"] = {"r": cfg.r, "value": estimate}
    _emit(_dump_json(payload), cfg.out_path)
    return EXIT_OK


def _theta(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad theta {text!r}") from exc
    if len(vals) != 3 or min(vals) < 0 or abs(sum(vals) - 1) > 1e-9:
        raise argparse.ArgumentTypeError("theta must be three nonnegative weights summing to 1")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebitrates", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="csv"):
        p.add_argument("--state", required=True, help="state JSON path or builtin:W|GHZ|PRODUCT|EPR")
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=("csv", "json"), default=fmt_default)

    def grid(p, r_max):
        p.add_argument("--r-min", type=float, default=0.0)
        p.add_argument("--r-max", type=float, default=r_max)
        p.add_argument("--r-step", type=float, default=0.01)

    p = sub.add_parser("rates", help="direct, strong-converse and fidelity curves (--out is a directory)")
    common(p)
    grid(p, 1.0)
    p = sub.add_parser("trirate", help="exact strong-converse curve of a free-support state")
    common(p)
    grid(p, 0.7)
    p = sub.add_parser("protocol", help="one-shot deterministic POVM certificate")
    common(p, "json")
    p.add_argument("--seed", type=int, required=True)
    p = sub.add_parser("schur", help="Schur-Weyl spectrum table, M_n bounds and rate estimate")
    common(p, "json")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--n-max", type=int, default=N_MAX)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--theta", type=_theta, default=(0.5, 0.5, 0.0))
    p.add_argument("--r", type=float, help="also report the strong-converse lower bound at this r")
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        state_path=args.state,
        r_min=getattr(args, "r_min", 0.0),
        r_max=getattr(args, "r_max", 1.0),
        r_step=getattr(args, "r_step", 0.01),
        alpha=getattr(args, "alpha", 0.5),
        theta=getattr(args, "theta", (0.5, 0.5, 0.0)),
        n=getattr(args, "n", 4),
        r=getattr(args, "r", None),
        seed=getattr(args, "seed", None),
        n_max=getattr(args, "n_max", N_MAX),
        out_path=args.out,
        fmt=args.format,
    )


COMMANDS = {"rates": cmd_rates, "trirate": cmd_trirate, "protocol": cmd_protocol, "schur": cmd_schur}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](config_from_args(args))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
