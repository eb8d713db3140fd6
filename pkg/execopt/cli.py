# execopt/cli.py
"""
Command line: `execopt run CONFIG`, `execopt reproduce TABLE`, `execopt defaults`,
`execopt validate-config CONFIG`.

Exit status: 0 converged / ok, 1 error, 2 solver finished without converging.
"""

import argparse
import logging
import sys
import time
from typing import Dict, List, Optional

from .config import load_config, defaults_text, solver_delta
from .errors import ExecoptError
from .pool import WORKERS_ENV
from .reproduce import TABLES, ReproduceOptions, reproduce
from .runner import execute
from .util import heartbeat, write_step_summary

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


# ----------------------------
# CLI
# ----------------------------
def _float_list(raw: str) -> List[float]:
    try:
        return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_ERROR; 2 is reserved for non-converged runs."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    p = _Parser(prog="execopt", description="Optimal execution under nonlinear transient impact.")
    p.add_argument("--log-level", default="WARNING", help="Python logging level (DEBUG, INFO, WARNING, ...).")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Solve the problem described by an INI config.")
    run.add_argument("config", help="Path to the INI config.")
    run.add_argument("--seed", type=int, default=None, help="Override [solver] seed.")
    run.add_argument("--out", default=None, help="Output directory (default: [output] dir).")
    run.add_argument("--workers", type=int, default=None, help=f"Worker processes (default: ${WORKERS_ENV} or CPU count).")

    rep = sub.add_parser("reproduce", help="Rebuild a benchmark table as CSV.")
    rep.add_argument("table", choices=sorted(TABLES), help="Table id.")
    rep.add_argument("--quick", action="store_true", help="Fewer starts, shorter delta lists, smaller scans.")
    rep.add_argument("--seed", type=int, default=0, help="Seed for start points.")
    rep.add_argument("--out", default="out/reproduce", help="Output directory.")
    rep.add_argument("--workers", type=int, default=None, help=f"Worker processes (default: ${WORKERS_ENV} or CPU count).")
    rep.add_argument("--starts", type=int, default=None, help="Override the number of starts.")
    rep.add_argument("--gammas", type=_float_list, default=None, help="Comma-separated gamma list.")
    rep.add_argument("--deltas", type=_float_list, default=None, help="Comma-separated delta list.")
    rep.add_argument("--d", type=float, default=None, help="Concave-convex d (cost_surface, concave_convex).")
    rep.add_argument("--N", type=int, default=None, help="Number of subintervals.")

    sub.add_parser("defaults", help="Print the default config.")

    val = sub.add_parser("validate-config", help="Parse and check a config without solving.")
    val.add_argument("config", help="Path to the INI config.")
    return p.parse_args(argv)


def _heartbeats(every: int = 50):
    """progress(label, done, total) printing one heartbeat stream per label."""
    started: Dict[str, float] = {}

    def progress(label: str, done: int, total: int):
        t0 = started.setdefault(label, time.time())
        heartbeat(label, done, total, t0, every=every)
    return progress


# ----------------------------
# Commands
# ----------------------------
def cmd_run(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    progress = _heartbeats()
    label = f"{cfg.solver.method}: starts"
    t0 = time.time()
    result = execute(cfg, out_dir=args.out, workers=args.workers,
                     progress=lambda done, total: progress(label, done, total))
    rep = result.report
    summary = [
        f"### Run {cfg.problem.name}",
        f"- Solver: **{rep.solver}** · gamma={cfg.problem.gamma} · delta={solver_delta(cfg)} · N={cfg.grid.N}",
        f"- Converged: **{'yes' if rep.converged else 'no'}** · Iterations: **{rep.iterations}**",
        f"- Cost: **{rep.cost:.6g}** (spread part {rep.spread_component:.3g}) · "
        f"Constraint violation: {rep.constraint_violation:.2e}",
        *[f"- {key}: {path}" for key, path in result.paths.items()],
        f"- Elapsed: **{time.time() - t0:.1f}s**",
    ]
    print("\n".join(summary), flush=True)
    write_step_summary(["", *summary])
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def cmd_reproduce(args) -> int:
    opts = ReproduceOptions(quick=args.quick, seed=args.seed, workers=args.workers, starts=args.starts,
                            gammas=args.gammas, deltas=args.deltas, d=args.d, N=args.N,
                            progress=_heartbeats())
    _, paths, lines = reproduce(args.table, args.out, opts)
    print("\n".join(lines + [f"- Wrote: {p}" for p in paths]), flush=True)
    return EXIT_OK


def cmd_defaults(args) -> int:
    sys.stdout.write(defaults_text())
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"OK: {args.config} (method={cfg.solver.method}, gamma={cfg.problem.gamma}, "
          f"delta={solver_delta(cfg)}, N={cfg.grid.N})", flush=True)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "reproduce": cmd_reproduce, "defaults": cmd_defaults, "validate-config": cmd_validate}


# ----------------------------
# Main
# ----------------------------
def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    level = getattr(logging, str(args.log_level).upper(), None)
    if not isinstance(level, int):
        sys.exit(f"ERROR: unknown log level {args.log_level!r}")
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ExecoptError as e:
        sys.exit(f"ERROR: {e}")


if __name__ == "__main__":
    sys.exit(main())
