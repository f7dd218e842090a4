"""``digflow`` command-line entry point.

Exit status: 0 success, 1 a validation check failed, 2 bad configuration,
3 numerical or solver failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import io as dio
from .divergence import (
    bregman_divergence,
    canonical_divergence,
    canonical_divergence_vector_form,
    curve_divergence,
)
from .dynamics import gradient_flow
from .errors import ChartBoundaryError, ChartMismatchError, DigflowError, SingularTimeError
from .geodesic import geodesic_bvp
from .manifold import DUAL, PRIMAL, ManifoldModel
from .registry import REGISTRY, build_model
from .validation import DEFAULT_SEED, SuiteConfig, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

SEED_ENV = "DIGFLOW_SEED"


class ConfigError(Exception):
    """Invalid command-line configuration (exit status 2)."""


@dataclass
class RunConfig:
    """Resolved settings of one CLI invocation."""

    model: str
    chart: Optional[str] = None
    model_params: Dict[str, float] = field(default_factory=dict)
    p: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    steps: Optional[int] = None
    t0: float = 1e-3
    tolerances: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None
    output_format: str = "json"

    def __post_init__(self):
        if self.model not in REGISTRY:
            raise ConfigError(f"unknown model {self.model!r}; available: {', '.join(sorted(REGISTRY))}")
        for name, tol in self.tolerances.items():
            if not tol > 0:
                raise ConfigError(f"tolerance {name!r} must be positive, got {tol}")
        if self.output_format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {self.output_format!r}")

    def build(self) -> ManifoldModel:
        try:
            model = build_model(self.model, self.chart, **self.model_params)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc.args[0] if exc.args else exc)) from None
        for label, pt in (("p", self.p), ("q", self.q)):
            if pt is None:
                continue
            if pt.size != model.dim:
                raise ConfigError(f"--{label} has {pt.size} coordinates, model {self.model!r} needs {model.dim}")
            try:
                model.coords(pt)
            except (ChartBoundaryError, ChartMismatchError) as exc:
                raise ConfigError(f"--{label}: {exc}") from None
        return model


def parse_point(text: str) -> np.ndarray:
    try:
        values = [float(s) for s in text.split(",")]
    except ValueError:
        raise ConfigError(f"coordinates must be comma-separated reals, got {text!r}") from None
    if not all(np.isfinite(values)):
        raise ConfigError(f"coordinates must be finite, got {text!r}")
    return np.array(values, dtype=float)


def parse_assignments(items: Sequence[str], what: str) -> Dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ConfigError(f"{what} must look like NAME=VALUE, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"{what} {name!r} needs a numeric value, got {value!r}") from None
    return out


def _emit(text: str, output: Optional[str]) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _config(args, fmt: str = "json") -> RunConfig:
    return RunConfig(
        model=args.model,
        chart=args.chart,
        model_params=parse_assignments(args.param, "--param"),
        p=parse_point(args.p) if getattr(args, "p", None) else None,
        q=parse_point(args.q) if getattr(args, "q", None) else None,
        steps=getattr(args, "steps", None),
        t0=getattr(args, "t0", 1e-3),
        output=args.output,
        output_format=fmt,
    )


def _header(cfg: RunConfig, model: ManifoldModel, **extra) -> dict:
    return {"model": cfg.model, "chart": model.chart_id, **extra}


def _write_trajectory(traj: dio.TrajectoryFile, cfg: RunConfig) -> None:
    if cfg.output_format == "csv":
        _emit(dio.dump_trajectory(traj), cfg.output)
    else:
        _emit(dio.dump_report(dio.trajectory_as_json(traj)), cfg.output)


# ---------------------------------------------------------------------------
# commands


def cmd_divergence(args) -> int:
    cfg = _config(args)
    if cfg.p is None or cfg.q is None:
        raise ConfigError("divergence needs --p and --q")
    model = cfg.build()
    conn = DUAL if args.connection == "dual" else PRIMAL
    if args.method == "energy":
        rep = canonical_divergence(model, cfg.p, cfg.q, nodes=args.nodes, connection=conn)
    elif args.method == "vector":
        rep = canonical_divergence_vector_form(model, cfg.p, cfg.q, connection=conn, nodes=args.nodes)
    elif args.method == "curve":
        # the curve divergence along the geodesic of the other connection equals D (or D*)
        other = PRIMAL if conn == DUAL else DUAL
        rep = curve_divergence(model, geodesic_bvp(model, cfg.p, cfg.q, conn), other, nodes=args.nodes)
    else:
        if model.flat is None:
            raise ConfigError(f"model {cfg.model!r} has no dually flat structure for --method bregman")
        a, b = (cfg.p, cfg.q) if conn == PRIMAL else (cfg.q, cfg.p)
        rep = bregman_divergence(model, a, b)
    doc = {
        "kind": "divergence",
        **_header(cfg, model),
        "p": cfg.p,
        "q": cfg.q,
        "value": rep.value,
        "method": rep.method,
        "quadrature_error": rep.quadrature_error,
        "connection": args.connection,
    }
    _emit(dio.dump_report(doc), cfg.output)
    return EXIT_OK


def cmd_geodesic(args) -> int:
    cfg = _config(args, args.format)
    if cfg.p is None or cfg.q is None:
        raise ConfigError("geodesic needs --p and --q")
    if args.rows < 2:
        raise ConfigError("--rows must be at least 2")
    model = cfg.build()
    conn = DUAL if args.connection == "dual" else PRIMAL
    kwargs = {"steps": args.steps} if args.steps else {}
    path = geodesic_bvp(model, cfg.p, cfg.q, conn, method=args.bvp_method, **kwargs)
    if np.array_equal(path.points[0], path.points[-1]) and path.method == "constant":
        ts = np.array([0.0])
    else:
        ts = np.linspace(0.0, 1.0, args.rows)
    pts, vels = path.resample(ts)
    traj = dio.TrajectoryFile(ts, pts, vels, _header(cfg, model, kind="geodesic", connection=conn,
                                                      solver=path.solver_info))
    _write_trajectory(traj, cfg)
    return EXIT_OK


def cmd_flow(args) -> int:
    cfg = _config(args, args.format)
    if cfg.p is None or cfg.q is None:
        raise ConfigError("flow needs --p and --q")
    if not args.t0 > 0:
        raise SingularTimeError(f"singular time: the flow is singular at t = 0; --t0 must be positive, got {args.t0}")
    if not args.t0 < 1:
        raise ConfigError(f"--t0 must be below 1, got {args.t0}")
    if args.steps < 2:
        raise ConfigError("--steps must be at least 2")
    model = cfg.build()
    flow = gradient_flow(model, cfg.p, cfg.q, t0=args.t0, steps=args.steps, dual=args.dual)
    solver = {
        "t0": args.t0,
        "steps": args.steps,
        "terminal_miss": flow.terminal_miss,
        "max_geodesic_deviation": flow.max_geodesic_deviation,
        "flagged": flow.flagged,
    }
    traj = dio.TrajectoryFile(flow.t, flow.points, flow.velocities,
                              _header(cfg, model, kind="flow", connection=flow.connection, solver=solver))
    _write_trajectory(traj, cfg)
    if flow.flagged:
        sys.stderr.write("; ".join(flow.notes) + "\n")
        return EXIT_SOLVER
    return EXIT_OK


def resolve_seed(flag: Optional[int], environ=os.environ) -> int:
    """``--seed`` wins over ``DIGFLOW_SEED``, which wins over the built-in default."""
    if flag is not None:
        return int(flag)
    env = environ.get(SEED_ENV)
    if env is None or env == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def cmd_validate(args) -> int:
    tolerances = parse_assignments(args.tolerance, "--tolerance")
    for name, tol in tolerances.items():
        if not (tol >= 0 and np.isfinite(tol)):
            raise ConfigError(f"tolerance {name!r} must be a finite nonnegative number, got {tol}")
    from .validation import CHECKS

    unknown = sorted(set(tolerances) - set(CHECKS)) + sorted(set(args.only or ()) - set(CHECKS))
    if unknown:
        raise ConfigError(f"unknown check name(s): {', '.join(unknown)}")
    seed = resolve_seed(args.seed)
    cfg = SuiteConfig(
        seed=seed,
        tolerances=tolerances,
        divergence_constant=args.divergence_constant,
        velocity_source=args.velocity_source,
        only=tuple(args.only) if args.only else None,
    )
    start = time.perf_counter()
    results = run_suite(cfg)
    elapsed = time.perf_counter() - start
    failed = [r.name for r in results if not r.passed]
    doc = {
        "kind": "validation",
        "seed": seed,
        "divergence_constant": cfg.divergence_constant,
        "velocity_source": cfg.velocity_source,
        "passed": not failed,
        "failed": failed,
        "checks": [r.to_dict() for r in results],
    }
    _emit(dio.dump_report(doc), args.output)
    sys.stderr.write(f"{len(results) - len(failed)}/{len(results)} checks passed in {elapsed:.1f} s\n")
    for name in failed:
        sys.stderr.write(f"FAILED {name}\n")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(sp: argparse.ArgumentParser, points: bool = True) -> None:
    sp.add_argument("--model", default="gaussian1d", help="registered model name")
    sp.add_argument("--chart", default=None, help="coordinate chart of --p/--q (default: the model's first chart)")
    sp.add_argument("--param", action="append", default=[], metavar="NAME=VALUE", help="model parameter")
    if points:
        sp.add_argument("--p", required=True, help="start point, comma-separated coordinates")
        sp.add_argument("--q", required=True, help="end point, comma-separated coordinates")
    sp.add_argument("--output", "-o", default=None, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="digflow", description="Divergence geometry and gradient flows.")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("divergence", help="divergence between two points (JSON report)")
    _common(d)
    d.add_argument("--method", choices=["curve", "energy", "vector", "bregman"], default="energy")
    d.add_argument("--connection", choices=["primal", "dual"], default="primal")
    d.add_argument("--nodes", type=int, default=129)
    d.set_defaults(func=cmd_divergence)

    g = sub.add_parser("geodesic", help="geodesic between two points (trajectory)")
    _common(g)
    g.add_argument("--connection", choices=["primal", "dual"], default="primal")
    g.add_argument("--rows", type=int, default=101, help="number of equally spaced output rows")
    g.add_argument("--steps", type=int, default=None, help="RK4 steps for shooting")
    g.add_argument("--bvp-method", choices=["auto", "shooting", "affine"], default="auto")
    g.add_argument("--format", choices=["csv", "json"], default="csv")
    g.set_defaults(func=cmd_geodesic)

    f = sub.add_parser("flow", help="divergence-gradient flow from p toward q (trajectory)")
    _common(f)
    f.add_argument("--t0", type=float, default=1e-3)
    f.add_argument("--steps", type=int, default=1024)
    f.add_argument("--dual", action="store_true", help="flow of the dual divergence")
    f.add_argument("--format", choices=["csv", "json"], default="csv")
    f.set_defaults(func=cmd_flow)

    v = sub.add_parser("validate", help="run the numerical check suite")
    v.add_argument("--seed", type=int, default=None, help=f"random seed (env {SEED_ENV}; default {DEFAULT_SEED})")
    v.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE", help="override a check tolerance")
    v.add_argument("--only", action="append", default=None, metavar="NAME", help="run only this check (repeatable)")
    v.add_argument("--divergence-constant", type=float, default=-0.5,
                   help="constant term of the Gaussian closed-form divergence")
    v.add_argument("--velocity-source", choices=["derived", "printed"], default="derived",
                   help="closed-form e-geodesic velocity used for the exp-map check")
    v.add_argument("--output", "-o", default=None, help="report file (default: stdout)")
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        with np.errstate(all="ignore"):
            return args.func(args)
    except (ConfigError, SingularTimeError) as exc:
        sys.stderr.write(f"digflow: configuration error: {exc}\n")
        return EXIT_CONFIG
    except (DigflowError, FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"digflow: solver failure: {type(exc).__name__}: {exc}\n")
        return EXIT_SOLVER
    except ValueError as exc:
        sys.stderr.write(f"digflow: configuration error: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"digflow: cannot write output: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
