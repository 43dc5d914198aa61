"""``gapminimax`` command-line entry point."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .mmio import InputError
from .workflows import COMMANDS, EXIT_INPUT, RunConfig, run

CHANNEL_KEYS = ("kappa", "r_max", "n_splines", "spline_order", "grading", "quad_order",
                "lower_order_shift", "n_lower")


def parse_grid(text: str) -> list[float]:
    """``"a:b:step"`` (inclusive) or a comma list; empty text is an empty grid."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        a, b, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise InputError("grid step must be positive")
        n = int(np.floor((b - a) / step + 1e-9)) + 1
        return [round(a + i * step, 12) for i in range(max(n, 0))]
    return [float(x) for x in text.split(",") if x.strip()]


def parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gapminimax",
        description="Gap eigenvalues through the Schur-complement minimax characterisation.",
        epilog="exit codes: 0 all assertions passed, 2 numeric assertion failed, 3 input error",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--nu", help="coupling constant(s), comma separated")
    p.add_argument("--grid", help="nu grid for sweep: 'start:stop:step' or comma list")
    p.add_argument("--kappa", type=int)
    p.add_argument("--split", action="append", choices=("P", "T"),
                   help="splitting; repeat for several")
    p.add_argument("--k", type=int, help="number of levels")
    p.add_argument("--eps", type=float, help="potential regularisation -nu/(r+eps)")
    p.add_argument("--sizes", help="basis sizes for converge, comma separated")
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int, help="number of random pairs (abstract commands)")
    p.add_argument("--dim", type=int, help="dimension of a single random pair")
    p.add_argument("--config", help="channel/run configuration JSON")
    p.add_argument("--out", help="output base path; writes .csv and .json")
    p.add_argument("--force", action="store_true", help="proceed past the T-split coupling limit")
    p.add_argument("--tol", type=float, help="assertion tolerance override")
    p.add_argument("--b", type=float, help="upper gap edge for abstract-solve")
    p.add_argument("--alpha", type=float)
    p.add_argument("--imbalance", type=float, help="upper/lower size ratio for pollution-demo")
    p.add_argument("--jobs", type=int)
    p.add_argument("--M", dest="m_file", help="Matrix Market Gram matrix")
    p.add_argument("--Q", dest="q_file", help="Matrix Market unperturbed form")
    p.add_argument("--V", dest="v_file", help="Matrix Market perturbation")
    p.add_argument("--split-file", help="JSON split descriptor")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    kw: dict = {"command": args.command}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
        kw["channel"] = {k: v for k, v in data.items() if k in CHANNEL_KEYS}
        names = {f.name for f in fields(RunConfig)} - {"command", "channel"}
        kw.update({k: v for k, v in data.items() if k in names and k != "kappa"})
        for key in ("nu", "split"):
            if key in kw and not isinstance(kw[key], list):
                kw[key] = [kw[key]]
    if args.grid is not None:
        kw["nu"] = parse_grid(args.grid)
    elif args.nu is not None:
        kw["nu"] = parse_grid(args.nu)
    if args.split:
        kw["split"] = list(dict.fromkeys(args.split))
    if args.sizes is not None:
        kw["sizes"] = parse_ints(args.sizes)
    for name in ("k", "eps", "seed", "count", "dim", "tol", "b", "alpha", "imbalance", "jobs",
                 "out"):
        if getattr(args, name) is not None:
            kw[name] = getattr(args, name)
    if args.force:
        kw["force"] = True
    files = {"M": args.m_file, "Q": args.q_file, "V": args.v_file, "split": args.split_file}
    files = {k: v for k, v in files.items() if v is not None}
    if files:
        kw["matrices"] = files
    cfg = RunConfig(**kw)
    if args.kappa is not None:
        if args.kappa == 0:
            raise InputError("kappa must be a nonzero integer")
        cfg.kappa = args.kappa
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        rec = run(cfg)
    except (InputError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if cfg.out:
        rec.write(cfg.out)
    else:
        sys.stdout.write(rec.csv_text())
    for m in rec.messages:
        print(m, file=sys.stderr)
    for a in rec.assertions:
        print(f"[{'PASS' if a['pass'] else 'FAIL'}] {a['name']}", file=sys.stderr)
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
