"""Command-line entry point: ``fockbench certify | theorem2 | qbm``.

Exit codes: 0 success, 2 precondition failure, 3 states excluded by the
validity check, 64 usage error. A flat JSON file passed with ``--config``
supplies defaults for any flag (keys are the flag names with dashes replaced
by underscores); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import TimeGrid, moment_trajectory, write_csv
from .dynamics import TRAJECTORY_COLUMNS as MOMENT_COLUMNS
from .errors import FockbenchError, OptimizationFailure
from .fock_core import OscillatorParams, build_operators, moments
from .kernels import BACKEND
from .qbm import TRAJECTORY_COLUMNS as QBM_COLUMNS
from .qbm import QBMParams, sieve_experiment
from .sieve import OptimizerConfig, minimize_delta_H
from .states import certify, coherent_state, fock_state, random_state, squeezed_vacuum

EXIT_OK, EXIT_PRECONDITION, EXIT_EXCLUDED, EXIT_USAGE = 0, 2, 3, 64

DEFAULT_FAMILY = ["coherent:1,0", "fock:1", "fock:2", "fock:3", "squeezed:0.5", "squeezed:-0.5"]

DEFAULTS = {
    "common": {"mass": 1.0, "omega": 1.0, "hbar": 1.0, "out": "fockbench_out", "seed": 0},
    "certify": {"samples": 1024, "tol": 1e-8},
    "theorem2": {"restarts": 8, "max_iters": 5000, "step": 0.05, "grad_tol": 1e-8, "no_escalate": False},
    "qbm": {"dim": 40, "gamma": 1e-3, "kT": 100.0, "samples": 201, "phases": 16, "dt": None, "threshold": 10.0},
}

log = logging.getLogger("fockbench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


@dataclass
class RunConfig:
    experiment: str
    dim: int | None
    osc: OscillatorParams
    out: Path
    seed: int
    options: dict = field(default_factory=dict)


_STATE_RE = re.compile(r"^(coherent|fock|squeezed|random):(.+)$")


def parse_state(spec: str, dim: int):
    """Build a pure state from ``coherent:RE,IM | fock:N | squeezed:R | random:SEED``."""
    match = _STATE_RE.match(spec.strip())
    if not match:
        raise UsageError(f"malformed state spec {spec!r}")
    kind, arg = match.groups()
    try:
        if kind == "coherent":
            parts = arg.split(",")
            if len(parts) not in (1, 2):
                raise ValueError
            re_part = float(parts[0])
            im_part = float(parts[1]) if len(parts) == 2 else 0.0
            return coherent_state(complex(re_part, im_part), dim)
        if kind == "fock":
            return fock_state(int(arg), dim)
        if kind == "squeezed":
            return squeezed_vacuum(float(arg), dim)
        return random_state(dim, int(arg))
    except ValueError as exc:
        if isinstance(exc, FockbenchError):
            raise
        raise UsageError(f"malformed state spec {spec!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fockbench", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help="flat JSON file with flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--mass", type=float)
        p.add_argument("--omega", type=float)
        p.add_argument("--hbar", type=float)
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("certify", help="all-times uncertainty saturation certificate")
    p.add_argument("--state", help="coherent:RE,IM | fock:N | squeezed:R | random:SEED")
    p.add_argument("--dim", type=int)
    p.add_argument("--samples", type=int, help="grid points over one period")
    p.add_argument("--tol", type=float)
    common(p)

    p = sub.add_parser("theorem2", help="minimize dH over the truncated state space")
    p.add_argument("--dim", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--step", type=float)
    p.add_argument("--grad-tol", type=float)
    p.add_argument("--no-escalate", action="store_const", const=True, help="never rerun at a larger dimension")
    common(p)

    p = sub.add_parser("qbm", help="Brownian-motion purity sieve")
    p.add_argument("--dim", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kT", type=float)
    p.add_argument("--state", action="append", dest="states", help="repeatable; default family if omitted")
    p.add_argument("--samples", type=int, help="trajectory samples over one period")
    p.add_argument("--phases", type=int, help="orbit phases averaged for the measured slope")
    p.add_argument("--dt", type=float, help="largest integrator step")
    p.add_argument("--threshold", type=float, help="validity ratio threshold")
    common(p)
    return parser


def _merge(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    merged = {**DEFAULTS["common"], **DEFAULTS[cmd]}
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a flat JSON object")
        merged.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("command", "config", "verbose"):
            continue
        if value is not None:
            merged[key] = value
    if merged.get("dim") is None:
        raise UsageError(f"{cmd}: --dim is required")
    if cmd == "certify" and not merged.get("state"):
        raise UsageError("certify: --state is required")
    osc = OscillatorParams(float(merged.pop("mass")), float(merged.pop("omega")), float(merged.pop("hbar")))
    return RunConfig(
        experiment=cmd,
        dim=int(merged.pop("dim")),
        osc=osc,
        out=Path(merged.pop("out")),
        seed=int(merged.pop("seed")),
        options=merged,
    )


def _emit(path: Path, payload: dict) -> str:
    payload = {**payload, "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    text = json.dumps(payload, indent=2, allow_nan=False)
    path.write_text(text + "\n")
    return text


def _run_certify(cfg: RunConfig) -> int:
    ops = build_operators(cfg.dim, cfg.osc)
    psi = parse_state(cfg.options["state"], cfg.dim)
    grid = TimeGrid.one_period(cfg.osc, n_samples=int(cfg.options["samples"]))
    report = certify(psi, ops, grid, tol=float(cfg.options["tol"]))
    rows = moment_trajectory(moments(psi, ops), cfg.osc, grid)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.out / "certify_trajectory.csv", rows, MOMENT_COLUMNS)
    text = _emit(
        cfg.out / "certify_report.json",
        {"state": cfg.options["state"], "dim": cfg.dim, "params": cfg.osc.to_dict(), "report": report.to_dict()},
    )
    print(text)
    return EXIT_OK


def _run_theorem2(cfg: RunConfig) -> int:
    o = cfg.options
    opt = OptimizerConfig(
        restarts=int(o["restarts"]),
        max_iters=int(o["max_iters"]),
        step=float(o["step"]),
        grad_tol=float(o["grad_tol"]),
        seed=cfg.seed,
    )
    ops = build_operators(cfg.dim, cfg.osc)
    hw = cfg.osc.hbar * cfg.osc.omega
    code = EXIT_OK
    try:
        result = minimize_delta_H(cfg.dim, ops, opt, escalate=not o["no_escalate"])
    except OptimizationFailure as exc:
        result, code = exc.best, EXIT_PRECONDITION
        log.error("%s", exc)
    if result.dim != cfg.dim:
        log.warning(
            "best minimizer needed D=%d: the %d-level truncation cannot hold it away from the edge",
            result.dim,
            cfg.dim,
        )
    cfg.out.mkdir(parents=True, exist_ok=True)
    payload = {
        "requested_dim": cfg.dim,
        "params": cfg.osc.to_dict(),
        "config": {
            "restarts": opt.restarts,
            "max_iters": opt.max_iters,
            "step": opt.step,
            "grad_tol": opt.grad_tol,
            "seed": opt.seed,
        },
        "result": result.to_dict(hw),
    }
    print(_emit(cfg.out / "theorem2_result.json", payload))
    return code


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", label)


def _run_qbm(cfg: RunConfig) -> int:
    o = cfg.options
    qbm = QBMParams(float(o["gamma"]), float(o["kT"]), cfg.osc)
    specs = o.get("states") or DEFAULT_FAMILY
    family = [(spec, parse_state(spec, cfg.dim)) for spec in specs]
    ops = build_operators(cfg.dim, cfg.osc)
    grid = TimeGrid.one_period(cfg.osc, n_samples=int(o["samples"]))
    report = sieve_experiment(
        family,
        ops,
        qbm,
        grid,
        n_phases=int(o["phases"]),
        dt=None if o["dt"] is None else float(o["dt"]),
        threshold=float(o["threshold"]),
    )
    cfg.out.mkdir(parents=True, exist_ok=True)
    for outcome in report.states:
        if outcome.trajectory is not None:
            write_csv(cfg.out / f"trajectory_{_slug(outcome.label)}.csv", outcome.trajectory.rows(), QBM_COLUMNS)
    print(_emit(cfg.out / "sieve_report.json", report.to_dict()))
    excluded = [s.label for s in report.states if s.excluded]
    if excluded:
        log.warning("excluded by validity check: %s", ", ".join(excluded))
        return EXIT_EXCLUDED
    return EXIT_OK


RUNNERS = {"certify": _run_certify, "theorem2": _run_theorem2, "qbm": _run_qbm}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    log.info("kernel backend: %s", BACKEND)
    try:
        cfg = _merge(args)
        return RUNNERS[cfg.experiment](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"fockbench: error: {exc}\n")
        return EXIT_USAGE
    except (FockbenchError, ValueError) as exc:
        sys.stderr.write(f"fockbench: {type(exc).__name__}: {exc}\n")
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
