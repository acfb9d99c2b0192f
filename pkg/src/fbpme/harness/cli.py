"""Command line entry point: ``fbpme run|verify|sweep|analyze``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from ..pressure import PressureSpec
from .config import ConfigError, load_run_config, load_sweep_config
from .io import FormatError, read_trajectory_csv, write_text_atomic
from . import runner

log = logging.getLogger("fbpme")


def _exponent(text: str) -> float:
    value = float(text)
    if not value >= 1:
        raise argparse.ArgumentTypeError(f"exponent must be >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fbpme", description="Fourier-Besov porous medium toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured simulation")
    p_run.add_argument("config", type=Path)

    p_ver = sub.add_parser("verify", help="numerical checks of the estimates")
    p_ver.add_argument("suite", nargs="?", default="all", choices=("all", *runner.SUITES))
    p_ver.add_argument("--n", type=int, default=1)
    p_ver.add_argument("--N", type=int, default=64)
    p_ver.add_argument("--L", type=float, default=16.0)
    p_ver.add_argument("--alpha", type=float, default=2.0)
    p_ver.add_argument("--pressure", choices=("riesz", "identity", "exp_kernel"), default="riesz")
    p_ver.add_argument("--s", type=float, default=0.5, help="riesz order")
    p_ver.add_argument("--cases", type=int, default=50)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--out", type=Path, help="write the table here instead of stdout")

    p_sw = sub.add_parser("sweep", help="parameter sweep to a CSV atlas")
    p_sw.add_argument("config", type=Path)

    p_an = sub.add_parser("analyze", help="recompute norms from a stored trajectory")
    p_an.add_argument("trajectory", type=Path)
    p_an.add_argument("--beta", type=float, action="append", default=[])
    p_an.add_argument("--p", type=_exponent, action="append", default=[])
    p_an.add_argument("--q", type=_exponent, action="append", default=[])
    p_an.add_argument("--out", type=Path, help="series output (default: <trajectory dir>/analysis.csv)")
    return parser


def _pressure(args) -> PressureSpec:
    if args.pressure == "riesz":
        return PressureSpec.riesz(args.s)
    if args.pressure == "identity":
        return PressureSpec.identity()
    return PressureSpec.exp_kernel()


def cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    meta = runner.run(cfg)
    print(f"status={meta['status']} final_time={meta['final_time']:.6g} output={cfg.output.dir}")
    if "linear_check" in meta:
        lc = meta["linear_check"]
        print(f"linear_check max_rel_error={lc['max_rel_error']:.3e} {'PASS' if lc['pass'] else 'FAIL'}")
    return runner.run_exit_code(meta)


def cmd_verify(args) -> int:
    suites = runner.SUITES if args.suite == "all" else (args.suite,)
    rows = runner.verify(
        suites, n=args.n, N=args.N, L=args.L, alpha=args.alpha, pressure=_pressure(args),
        cases=args.cases, seed=args.seed,
    )
    text = "\n".join([runner.VERIFY_HEADER, *(r.csv() for r in rows)]) + "\n"
    if args.out:
        write_text_atomic(args.out, text)
    sys.stdout.write(text)
    return runner.EXIT_OK if all(r.passed for r in rows) else runner.EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = load_sweep_config(args.config)
    rows = runner.sweep(cfg)
    print(f"{len(rows)} rows written to {cfg.output}")
    return runner.EXIT_OK


def cmd_analyze(args) -> int:
    counts = {len(args.beta), len(args.p), len(args.q)}
    if len(args.beta) and len(counts) != 1:
        raise SystemExit("fbpme analyze: --beta, --p and --q must be given the same number of times")
    if not args.beta and (args.p or args.q):
        raise SystemExit("fbpme analyze: --p/--q need a matching --beta")
    rec = read_trajectory_csv(args.trajectory)
    series, mixed = runner.analyze(rec, list(zip(args.beta, args.p, args.q)))
    out = args.out or args.trajectory.parent / "analysis.csv"
    write_text_atomic(out, "\n".join(series) + "\n")
    mixed_path = out.with_name(out.stem + "_mixed.csv")
    write_text_atomic(mixed_path, "\n".join(mixed) + "\n")
    print(f"wrote {out} and {mixed_path}")
    return runner.EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep, "analyze": cmd_analyze}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"fbpme {args.command}: {exc}", file=sys.stderr)
        return runner.EXIT_USAGE
    except FormatError as exc:
        print(f"fbpme {args.command}: parse error: {exc}", file=sys.stderr)
        return runner.EXIT_USAGE
    except ValueError as exc:
        print(f"fbpme {args.command}: {exc}", file=sys.stderr)
        return runner.EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
