"""Command-line interface.

Subcommands: verify, rate-study, loss-compare, cond-e-hist, schedule.
Shared flags: --config, --seed, --out, --jobs, --inject-fault.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import faults
from .config import load_config
from .errors import InputError, RelurateError
from .rates import RateSpec
from .studies import (
    SCHEDULE_HEADER,
    run_cond_e_hist,
    run_loss_compare,
    run_rate_study,
    run_schedule,
    write_manifest,
)
from .verify import run_all

USAGE_ERROR = 2


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel study cells")
    p.add_argument("--inject-fault", default=None, metavar="NAME",
                   help=f"activate a named defect (known: {sorted(faults.KNOWN_FAULTS)})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relurate",
        description="Constructive sparse ReLU classifiers: verification, "
                    "rate studies and loss comparisons on synthetic tasks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the invariant suites")
    _common_flags(p)
    p.add_argument("--suite", action="append", default=None,
                   help="restrict to named suites (repeatable)")

    p = sub.add_parser("rate-study", help="train at scheduled budgets and fit rates")
    _common_flags(p)

    p = sub.add_parser("loss-compare", help="hinge vs logistic accuracy table")
    _common_flags(p)

    p = sub.add_parser("cond-e-hist", help="histogram of estimated class probabilities")
    _common_flags(p)

    p = sub.add_parser("schedule", help="print the architecture schedule table")
    _common_flags(p)
    p.add_argument("--case", required=True,
                   choices=["smooth_boundary", "smooth_eta", "margin",
                            "cross_entropy"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--q", type=_float_or_inf, default=None)
    p.add_argument("--gamma", type=_float_or_inf, default=None)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n-grid", default="512,1024,2048,4096,8192",
                   help="comma-separated sample sizes")
    return parser


def _float_or_inf(raw: str) -> float:
    return math.inf if raw.strip().lower() in ("inf", "infinity") else float(raw)


def _setup(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    faults.set_faults([args.inject_fault] if args.inject_fault else [])
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return cfg, out_dir


def cmd_verify(args) -> int:
    cfg, out_dir = _setup(args)
    rows = run_all(cfg, only=args.suite)
    gated_failures = [r for r in rows if r.gated and not r.passed]
    report = {
        "checks": [r.row() for r in rows],
        "n_checks": len(rows),
        "n_gated_failures": len(gated_failures),
        "inject_fault": args.inject_fault,
        "config_hash": cfg.content_hash(),
    }
    path = out_dir / "verify_report.json"
    path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    for r in rows:
        status = "pass" if r.passed else ("FAIL" if r.gated else "report")
        extra = "" if r.value is None else f" value={r.value:.6g}"
        if r.se is not None:
            extra += f" se={r.se:.2g}"
        print(f"[{status}] {r.name}{extra}")
    print(f"{len(rows)} checks, {len(gated_failures)} gated failures "
          f"-> {path}")
    return 1 if gated_failures else 0


def cmd_rate_study(args) -> int:
    cfg, out_dir = _setup(args)
    res = run_rate_study(cfg, out_dir, jobs=max(1, args.jobs))
    print(f"records -> {res['records']}")
    print(f"fit     -> {res['fit']}")
    for row in res["fits"]:
        print(f"  {row[0]}/{row[1]}: slope={row[2]:.3f} (+-{row[3]:.3f}) "
              f"theory=-{row[4]:.3f} gap={row[5]:+.3f}")
    return 0


def cmd_loss_compare(args) -> int:
    cfg, out_dir = _setup(args)
    res = run_loss_compare(cfg, out_dir, jobs=max(1, args.jobs))
    print(f"table -> {res['csv']}")
    for row in res["rows"]:
        print(f"  n={row[1]:>6} {row[2]:<8} acc={row[3]:.4f} se={row[4]:.4f}")
    return 0


def cmd_cond_e_hist(args) -> int:
    cfg, out_dir = _setup(args)
    res = run_cond_e_hist(cfg, out_dir)
    print(f"histogram -> {res['csv']}")
    return 0


def cmd_schedule(args) -> int:
    cfg, out_dir = _setup(args)
    spec = RateSpec(case=args.case, d=args.d, alpha=args.alpha, beta=args.beta,
                    q=args.q, gamma=args.gamma)
    n_grid = [int(tok) for tok in args.n_grid.replace(",", " ").split()]
    path = out_dir / "schedule.csv"
    rows = run_schedule(spec, n_grid, out_path=path)
    print(",".join(SCHEDULE_HEADER))
    for row in rows:
        print(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    write_manifest(out_dir, "schedule", cfg, {"case": args.case})
    return 0


COMMANDS = {
    "verify": cmd_verify,
    "rate-study": cmd_rate_study,
    "loss-compare": cmd_loss_compare,
    "cond-e-hist": cmd_cond_e_hist,
    "schedule": cmd_schedule,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except RelurateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
