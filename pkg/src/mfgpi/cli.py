"""Command line driver: configuration, solver dispatch and CSV output.

Configuration comes from built-in defaults, then an optional ``key = value``
file (``--config``), then command line flags.  Keys are the flag names
without the leading dashes; underscores and dashes are interchangeable.

Exit status: 0 converged, 2 iteration cap reached, 3 configuration or
output-directory error, 4 solver / linear algebra error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, MaxIterationsExceeded, MfgError
from .evolutive import DEFAULT_MAX_OUTER, EvolutiveProblem, merge_policy_for_output, policy_iteration_evolutive
from .grid import PeriodicGrid, TimeGrid
from .newton import NewtonConfig, newton_solve
from .presets import INITIAL_DATA, builtin_coupling, builtin_initial_data, builtin_potential
from .stationary import DEFAULT_CAP, PiConfig, StationaryProblem, policy_iteration_stationary

log = logging.getLogger("mfgpi")

EXIT_OK, EXIT_MAX_ITER, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3, 4


@dataclass
class RunConfig:
    problem: str = "stationary"
    method: str = "pi"
    dim: int = 1
    nodes: int = 200
    time_steps: int = 100
    horizon: float = 1.0
    eps: float = 0.3
    tol: float = 1e-8
    mu: float = 1e-3
    inner_steps: int = 1
    cap: float = DEFAULT_CAP
    max_outer: Optional[int] = None
    potential: Optional[str] = None
    coupling: str = "square"
    initial: str = "paper-gaussian"
    hjb_cost: str = "current"
    warm_start_fp: bool = True
    out: str = "results"
    seed: int = 0

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for raw_key, raw in values.items():
            key = raw_key.strip().replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown configuration key {raw_key!r}")
            kwargs[key] = _convert(key, types[key], raw)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self):
        if self.problem not in ("stationary", "evolutive"):
            raise ConfigError(f"problem must be 'stationary' or 'evolutive', got {self.problem!r}")
        if self.method not in ("pi", "newton"):
            raise ConfigError(f"method must be 'pi' or 'newton', got {self.method!r}")
        if self.method == "newton" and self.problem != "stationary":
            raise ConfigError("the Newton method is only available for the stationary problem")
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if self.nodes < 3:
            raise ConfigError("nodes must be at least 3")
        if self.time_steps < 1:
            raise ConfigError("time-steps must be at least 1")
        if self.inner_steps < 1:
            raise ConfigError("inner-steps must be at least 1")
        if self.max_outer is not None and self.max_outer < 1:
            raise ConfigError("max-outer must be at least 1")
        for name in ("horizon", "eps", "tol", "mu", "cap"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.hjb_cost not in ("current", "next"):
            raise ConfigError("hjb-cost must be 'current' or 'next'")
        if self.initial not in INITIAL_DATA:
            raise ConfigError(f"unknown initial data {self.initial!r}")

    @property
    def potential_id(self) -> str:
        if self.potential is not None:
            return self.potential
        return "paper-1d" if self.dim == 1 else "paper-2d"


def _convert(key, typ, raw):
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    typ = str(typ)
    try:
        if "bool" in typ:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in typ:
            return int(text)
        if "float" in typ:
            return float(text)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {key}") from None
    return text


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mfgpi",
        description="Policy iteration and Newton solvers for discrete mean field games on the torus.",
    )
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--problem", choices=["stationary", "evolutive"])
    p.add_argument("--method", choices=["pi", "newton"])
    p.add_argument("--dim", type=int, choices=[1, 2])
    p.add_argument("--nodes", type=int, help="grid nodes per dimension")
    p.add_argument("--time-steps", type=int, help="number of time steps (evolutive)")
    p.add_argument("--horizon", type=float, help="final time T (evolutive)")
    p.add_argument("--eps", type=float, help="diffusion coefficient")
    p.add_argument("--tol", type=float, help="stopping tolerance")
    p.add_argument("--mu", type=float, help="shift of the M-matrix iteration")
    p.add_argument("--inner-steps", type=int, help="M-matrix iterations per outer step")
    p.add_argument("--cap", type=float, help="policy norm cap R")
    p.add_argument("--max-outer", type=int, help="outer iteration limit")
    p.add_argument("--potential", help="zero, paper-1d or paper-2d")
    p.add_argument("--coupling", help="zero, square or linear")
    p.add_argument("--initial", help="initial/final data for the evolutive problem")
    p.add_argument("--hjb-cost", choices=["current", "next"], help="time index of the running cost policy")
    p.add_argument("--warm-start-fp", choices=["true", "false"])
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in ("config", "verbose") or value is None:
            continue
        values[key] = value
    return RunConfig.from_mapping(values)


def _fmt(x) -> str:
    return f"{x:.17g}"


def write_field(path, grid: PeriodicGrid, values, columns=("value",)) -> None:
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[1] != len(columns):
        raise ValueError(f"{values.shape[1]} value columns but {len(columns)} names")
    coords = [f"x{d + 1}" for d in range(grid.dim)]
    value_cols = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", *coords, *value_cols])
        for k in range(grid.size):
            w.writerow([k, *map(_fmt, grid.coords[k]), *map(_fmt, values[k])])


SUMMARY_COLUMNS = ["method", "nodes", "iterations", "avg_cpu_per_iter", "total_cpu", "final_metric", "lambda"]


def write_summary(path, method, nodes, conv, lam=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        w.writerow([
            method,
            nodes,
            conv.iterations,
            _fmt(conv.time_per_iteration),
            _fmt(conv.total_time),
            _fmt(conv.final_metric),
            "" if lam is None else _fmt(lam),
        ])


def _solve_stationary(cfg: RunConfig, grid):
    problem = StationaryProblem(
        grid, cfg.eps, builtin_potential(cfg.potential_id, grid), builtin_coupling(cfg.coupling), cfg.cap
    )
    if cfg.method == "newton":
        ncfg = NewtonConfig(tol=cfg.tol, max_iters=cfg.max_outer or 50)
        return newton_solve(problem, ncfg)
    pcfg = PiConfig(
        tol=cfg.tol, mu=cfg.mu, inner_steps=cfg.inner_steps, max_outer=cfg.max_outer or 200,
        warm_start_fp=cfg.warm_start_fp,
    )
    return policy_iteration_stationary(problem, cfg=pcfg)


def _write_stationary(out: Path, cfg, grid, state, conv):
    write_field(out / "u.csv", grid, state.u)
    write_field(out / "m.csv", grid, state.m)
    conv.write_csv(out / "convergence.csv")
    write_summary(out / "summary.csv", cfg.method, grid.size, conv, state.lam)


def _solve_evolutive(cfg: RunConfig, grid):
    m0, u_final = builtin_initial_data(cfg.initial, grid)
    problem = EvolutiveProblem(
        grid, TimeGrid(cfg.horizon, cfg.time_steps), cfg.eps, builtin_potential(cfg.potential_id, grid),
        builtin_coupling(cfg.coupling), m0, u_final, cfg.cap,
    )
    pcfg = PiConfig(tol=cfg.tol, mu=cfg.mu, max_outer=cfg.max_outer or DEFAULT_MAX_OUTER)
    return policy_iteration_evolutive(problem, cfg=pcfg, cost_at_next=cfg.hjb_cost == "next")


def _write_evolutive(out: Path, cfg, grid, state, conv):
    q_cols = [f"q{d + 1}" for d in range(grid.dim)]
    for n in range(len(state.m)):
        write_field(out / f"m_{n:03d}.csv", grid, state.m[n])
        write_field(out / f"u_{n:03d}.csv", grid, state.u[n])
        write_field(out / f"q_{n:03d}.csv", grid, merge_policy_for_output(state.q[n]), q_cols)
    conv.write_csv(out / "convergence.csv")
    write_summary(out / "summary.csv", cfg.method, grid.size, conv)


def run(cfg: RunConfig) -> int:
    """Run one experiment and write its CSV files; returns the exit status."""
    try:
        cfg.validate()
        grid = PeriodicGrid(cfg.dim, cfg.nodes)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.touch()
        probe.unlink()
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        log.error("cannot use output directory %s: %s", cfg.out, exc)
        return EXIT_CONFIG

    solve, write = (
        (_solve_stationary, _write_stationary) if cfg.problem == "stationary" else (_solve_evolutive, _write_evolutive)
    )
    status = EXIT_OK
    try:
        state, conv = solve(cfg, grid)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except MaxIterationsExceeded as exc:
        log.error("%s", exc)
        state, conv, status = exc.state, exc.log, EXIT_MAX_ITER
    except (MfgError, ValueError) as exc:
        log.error("solver error: %s", exc)
        return EXIT_SOLVER
    if state is not None:
        write(out, cfg, grid, state, conv)
    log.info(
        "%s %s: %d iterations, final %s %.3e, %.3f s",
        cfg.problem, cfg.method, conv.iterations, conv.metric_name, conv.final_metric, conv.total_time,
    )
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
