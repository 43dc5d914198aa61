"""File-based workflows behind the command-line interface.

Every workflow returns a :class:`RunRecord`; numeric content depends only
on the configuration (and seed), so CSV output is byte-reproducible.
Exit codes: 0 all assertions passed, 2 a numeric assertion failed, 3 bad
input.
"""
from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import __version__
from .dirac.basis import RadialBasis
from .dirac.channel import assemble_channel
from .dirac.oracle import regime_classify, sommerfeld_oracle
from .dirac.solve import (FormCheckError, OvercriticalError, RegimeError, solve_channel)
from .forms import DEFAULT_TOL, check_all
from .minimax import STATUS_CEILING, STATUS_OK, assemble_s, solve_all
from .mmio import InputError, load_pair
from .random_pairs import pair_suite, random_pair

EXIT_OK = 0
EXIT_ASSERTION = 2
EXIT_INPUT = 3

SWEEP_HEADER = ("nu", "kappa", "split", "k", "lambda", "oracle", "abs_error", "iterations")
CEILING_STATUS = "no eigenvalue below ceiling"

COMMANDS = ("solve", "sweep", "converge", "pollution-demo", "check-forms", "abstract-solve")


def fmt(x) -> str:
    """CSV cell: reals with 17 significant digits, blanks for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class RunConfig:
    """Inputs of one workflow run.

    ``channel`` holds the radial basis keys of the channel JSON
    (``r_max``, ``n_splines``, ``spline_order``, ``grading``,
    ``quad_order``); ``kappa`` may also come from there.
    """

    command: str
    nu: list = field(default_factory=lambda: [0.5])
    kappa: int = -1
    split: list = field(default_factory=lambda: ["P"])
    k: int = 1
    eps: float = 0.0
    sizes: list = field(default_factory=list)
    seed: int = 0
    count: int = 1
    dim: int | None = None
    channel: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    b: float | None = None
    tol: float | None = None
    alpha: float = 1.0
    imbalance: float = 2.0
    force: bool = False
    jobs: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if "kappa" in self.channel:
            self.kappa = int(self.channel["kappa"])
        if self.kappa == 0:
            raise InputError("kappa must be a nonzero integer")
        if any(s not in ("P", "T") for s in self.split):
            raise InputError(f"split must be P or T, got {self.split}")
        if self.k < 1:
            raise InputError("k must be at least 1")
        if self.eps < 0:
            raise InputError("eps must be nonnegative")
        if any(n < 0 for n in self.nu):
            raise InputError("nu must be nonnegative")
        if self.out is not None and not Path(self.out).resolve().parent.is_dir():
            raise InputError(f"output directory does not exist: {Path(self.out).parent}")
        for p in self.matrices.values():
            if not Path(p).is_file():
                raise InputError(f"input file not found: {p}")

    def basis(self, **override) -> RadialBasis:
        cfg = {k: v for k, v in self.channel.items() if k != "kappa"}
        cfg.update(override)
        try:
            return RadialBasis.from_config(cfg)
        except (TypeError, ValueError) as exc:
            raise InputError(f"invalid channel configuration: {exc}") from exc


@dataclass
class RunRecord:
    config: dict
    version: str
    wall_time: float
    header: tuple
    rows: list
    reports: list = field(default_factory=list)
    assertions: list = field(default_factory=list)
    messages: list = field(default_factory=list)
    input_error: bool = False

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.assertions)

    @property
    def exit_code(self) -> int:
        if self.input_error:
            return EXIT_INPUT
        return EXIT_OK if self.passed else EXIT_ASSERTION

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([fmt(row.get(h)) for h in self.header])
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(x):
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, (np.floating, float)):
                return float(x) if math.isfinite(x) else None
            if isinstance(x, (np.integer,)):
                return int(x)
            if isinstance(x, np.bool_):
                return bool(x)
            return x

        body = {
            "config": self.config,
            "version": self.version,
            "wall_time": self.wall_time,
            "exit_code": self.exit_code,
            "assertions": self.assertions,
            "messages": self.messages,
            "reports": self.reports,
            "rows": self.rows,
        }
        return json.dumps(clean(body), indent=2)

    def write(self, out) -> tuple[Path, Path]:
        base = Path(out)
        if base.suffix in (".csv", ".json"):
            base = base.with_suffix("")
        csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
        csv_path.write_text(self.csv_text())
        json_path.write_text(self.to_json())
        return csv_path, json_path


def _assertion(name: str, passed: bool, value=None, tolerance=None) -> dict:
    return {"name": name, "pass": bool(passed), "value": value, "tolerance": tolerance}


def _status(result) -> str:
    if result.status == STATUS_CEILING:
        return CEILING_STATUS
    return "ok" if result.status == STATUS_OK else result.status


def _channel_rows(sol, tol):
    rows = []
    for r, ref in zip(sol.results, sol.references):
        err = None if ref is None else abs(r.lambda_k - ref)
        rows.append({
            "nu": sol.nu, "kappa": sol.kappa, "split": sol.split, "k": r.k,
            "lambda": r.lambda_k, "oracle": ref, "abs_error": err, "iterations": r.iterations,
            "tolerance": tol, "status": _status(r), "mu_reference": r.pencil_mu_k,
            "multiplicity": r.multiplicity, "residual": r.schur_residual,
        })
    return rows


def _sort_rows(rows, keys):
    return sorted(rows, key=lambda row: tuple(row[k] for k in keys))


def run_solve(cfg: RunConfig) -> RunRecord:
    t0 = time.perf_counter()
    tol = cfg.tol if cfg.tol is not None else 1e-6
    header = SWEEP_HEADER + ("tolerance", "status", "mu_reference", "multiplicity", "residual")
    rec = RunRecord(asdict(cfg), version_string(), 0.0, header, [])
    channel = assemble_channel(cfg.basis(), cfg.kappa)
    for nu in cfg.nu:
        for split in cfg.split:
            try:
                sol = solve_channel(channel, nu, split, cfg.k, cfg.eps, force=cfg.force)
            except (RegimeError, OvercriticalError) as exc:
                rec.messages.append(str(exc))
                rec.input_error = True
                continue
            except FormCheckError as exc:
                rec.reports.append([c.to_dict() for c in exc.report.checks])
                rec.assertions.append(_assertion(f"form conditions nu={nu} {split}", False))
                continue
            if sol.report is not None:
                rec.reports.append([c.to_dict() for c in sol.report.checks])
            rec.messages.extend(sol.notes)
            rec.rows.extend(_channel_rows(sol, tol))
    rec.rows = _sort_rows(rec.rows, ("nu", "kappa", "split", "k"))
    errs = [r["abs_error"] for r in rec.rows if r["abs_error"] is not None]
    if errs:
        rec.assertions.append(_assertion("max abs_error", max(errs) <= tol, max(errs), tol))
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_sweep(cfg: RunConfig) -> RunRecord:
    """Solve on the grid ``nu x split``; refused or failed points become rows."""
    t0 = time.perf_counter()
    tol = cfg.tol if cfg.tol is not None else 1e-4
    flags = ("in_P1", "talman_ok", "core_regime", "gls_regime")
    header = SWEEP_HEADER + ("tolerance", "status", "mu_reference") + flags
    rec = RunRecord(asdict(cfg), version_string(), 0.0, header, [])
    channel = None
    if cfg.nu:
        channel = assemble_channel(cfg.basis(), cfg.kappa)
        channel.free_spectrum  # shared by all tasks; compute before fan-out

    def task(point):
        nu, split = point
        regime = regime_classify(nu).to_dict()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                sol = solve_channel(channel, nu, split, cfg.k, cfg.eps, force=cfg.force)
        except (RegimeError, OvercriticalError, FormCheckError) as exc:
            ref = None
            try:
                ref = sommerfeld_oracle(nu, cfg.kappa, 0 if cfg.kappa < 0 else 1)
            except ValueError:
                pass
            return [{"nu": nu, "kappa": cfg.kappa, "split": split, "k": 1, "oracle": ref,
                     "tolerance": tol, "status": f"refused: {exc}", **regime}]
        return [{**row, **regime} for row in _channel_rows(sol, tol)]

    points = [(nu, s) for nu in cfg.nu for s in cfg.split]
    if cfg.jobs > 1 and len(points) > 1:
        with ThreadPoolExecutor(cfg.jobs) as ex:
            chunks = list(ex.map(task, points))
    else:
        chunks = [task(p) for p in points]
    rec.rows = _sort_rows([r for c in chunks for r in c], ("nu", "kappa", "split", "k"))

    errs = [r["abs_error"] for r in rec.rows if r.get("abs_error") is not None]
    if errs:
        rec.assertions.append(_assertion("max abs_error", max(errs) <= tol, max(errs), tol))
    by_point = {(r["nu"], r["k"], r["split"]): r.get("lambda") for r in rec.rows
                if r["status"] == "ok"}
    rel = [abs(lt - by_point[(nu, k, "P")]) / abs(by_point[(nu, k, "P")])
           for (nu, k, s), lt in by_point.items() if s == "T" and (nu, k, "P") in by_point]
    if rel:
        rec.assertions.append(_assertion("max |lambda_T - lambda_P| / |lambda_P|",
                                         max(rel) <= 1e-6, max(rel), 1e-6))
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_converge(cfg: RunConfig) -> RunRecord:
    """First level against the oracle for each basis size in ``cfg.sizes``."""
    t0 = time.perf_counter()
    header = ("n_splines",) + SWEEP_HEADER + ("roundoff_floor", "status")
    rec = RunRecord(asdict(cfg), version_string(), 0.0, header, [])
    nu, split = cfg.nu[0], cfg.split[0]

    def task(n):
        channel = assemble_channel(cfg.basis(n_splines=int(n)), cfg.kappa)
        sol = solve_channel(channel, nu, split, 1, cfg.eps, force=cfg.force)
        floor = np.finfo(float).eps * sol.sform.scale
        return {"n_splines": int(n), "roundoff_floor": floor, **_channel_rows(sol, None)[0]}

    if cfg.jobs > 1 and len(cfg.sizes) > 1:
        with ThreadPoolExecutor(cfg.jobs) as ex:
            rec.rows = list(ex.map(task, cfg.sizes))
    else:
        rec.rows = [task(n) for n in cfg.sizes]
    rec.rows.sort(key=lambda r: r["n_splines"])
    errs = [r["abs_error"] for r in rec.rows]
    if len(errs) > 1 and all(e is not None for e in errs):
        # errors below eps * ||S|| are roundoff and carry no ordering
        ok = all(b <= 1.1 * a or b <= row["roundoff_floor"]
                 for a, b, row in zip(errs, errs[1:], rec.rows[1:]))
        rec.assertions.append(_assertion("errors nonincreasing within 10%", ok))
    rec.wall_time = time.perf_counter() - t0
    return rec


def closed_form_levels(nu: float, kappa: int, count: int = 400) -> np.ndarray:
    if nu <= 0 or nu >= abs(kappa):
        return np.empty(0)
    start = 0 if kappa < 0 else 1
    return np.array([sommerfeld_oracle(nu, kappa, n) for n in range(start, start + count)])


def _nearest(value, levels):
    if levels.size == 0:
        return None, None
    i = int(np.argmin(np.abs(levels - value)))
    return float(levels[i]), float(abs(levels[i] - value))


def run_pollution_demo(cfg: RunConfig) -> RunRecord:
    """Direct pencil on an upper-rich basis against the minimax levels.

    The unbalanced space has ``n_splines`` upper functions and
    ``n_splines / imbalance`` lower functions on their own knots.  Three
    lists are produced: the direct pencil eigenvalues in the gap, the
    minimax levels on that same space (or the reason they are refused),
    and the minimax levels with the same ``D+`` but ``D-`` completed on
    the upper knots.  Only the last list is asserted against the
    closed-form levels.
    """
    t0 = time.perf_counter()
    tol = cfg.tol if cfg.tol is not None else 5e-4
    spurious_tol = 1e-2
    header = ("source", "index", "value", "nearest_level", "distance", "tolerance", "status")
    rec = RunRecord(asdict(cfg), version_string(), 0.0, header, [])
    nu, split = cfg.nu[0], cfg.split[0]
    levels = closed_form_levels(nu, cfg.kappa)

    n = int(cfg.basis().n_splines)
    balanced = cfg.imbalance <= 1
    if balanced:
        unbalanced = cfg.basis()
    else:
        n_lower = max(cfg.basis().lower_order, int(round(n / cfg.imbalance)))
        unbalanced = cfg.basis(n_lower=n_lower)
    ch_u = assemble_channel(unbalanced, cfg.kappa)
    V = -nu * ch_u.Y
    E = sla.eigh(ch_u.W_free + V, ch_u.M, eigvals_only=True)
    gap = E[(E > -1 + 1e-8) & (E < 1 - 1e-8)]
    spurious = []
    for i, e in enumerate(gap, 1):
        lev, dist = _nearest(e, levels)
        flag = dist is None or dist > spurious_tol
        if flag:
            spurious.append(float(e))
        rec.rows.append({"source": "direct", "index": i, "value": e, "nearest_level": lev,
                         "distance": dist, "tolerance": spurious_tol,
                         "status": "spurious candidate" if flag else "ok"})

    def minimax_rows(channel, source):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                sol = solve_channel(channel, nu, split, cfg.k, force=True)
        except Exception as exc:  # reported, not asserted
            rec.rows.append({"source": source, "index": 0, "status": f"refused: {exc}"})
            return []
        dists = []
        for r in sol.results:
            if r.status == STATUS_CEILING:
                rec.rows.append({"source": source, "index": r.k, "value": r.lambda_k,
                                 "status": CEILING_STATUS})
                continue
            lev, dist = _nearest(r.lambda_k, levels)
            dists.append(np.inf if dist is None else dist)
            rec.rows.append({"source": source, "index": r.k, "value": r.lambda_k,
                             "nearest_level": lev, "distance": dist, "tolerance": tol,
                             "status": "ok" if dist is not None and dist <= tol else "off level"})
        return dists

    if not balanced:
        minimax_rows(ch_u, "minimax-same-space")
    completed = assemble_channel(cfg.basis(), cfg.kappa)
    dists = minimax_rows(completed, "minimax-completed")
    worst = max(dists) if dists else 0.0
    rec.assertions.append(_assertion("minimax levels within tolerance of closed form",
                                     worst <= tol, worst, tol))
    rec.messages.append(f"{len(spurious)} spurious candidate(s) in the direct pencil")
    rec.wall_time = time.perf_counter() - t0
    return rec


def _load_abstract(cfg: RunConfig):
    if cfg.matrices:
        keys = ("M", "Q", "V", "split")
        missing = [k for k in keys if k not in cfg.matrices]
        if missing:
            raise InputError(f"missing input files: {missing}")
        return [load_pair(*(cfg.matrices[k] for k in keys))]
    if cfg.dim is not None:
        return [random_pair(cfg.seed, n=cfg.dim)]
    return pair_suite(cfg.seed, cfg.count)


def run_check_forms(cfg: RunConfig) -> RunRecord:
    t0 = time.perf_counter()
    tol = cfg.tol if cfg.tol is not None else DEFAULT_TOL
    header = ("pair", "condition", "pass", "margin", "tolerance")
    rec = RunRecord(asdict(cfg), version_string(), 0.0, header, [])
    for i, pair in enumerate(_load_abstract(cfg)):
        report = check_all(pair, cfg.alpha, tol)
        rec.reports.append([c.to_dict() for c in report.checks])
        for c in report.checks:
            rec.rows.append({"pair": i, **{k: v for k, v in c.to_dict().items()},
                             "pass": c.passed, "margin": c.margin})
        rec.assertions.append(_assertion(f"pair {i}: all form conditions", report.passed))
    rec.wall_time = time.perf_counter() - t0
    return rec


def run_abstract_solve(cfg: RunConfig) -> RunRecord:
    """Minimax levels against the full pencil for file or random input."""
    t0 = time.perf_counter()
    tol = cfg.tol if cfg.tol is not None else 1e-9
    header = ("pair", "k", "lambda", "mu", "diff", "tolerance", "iterations", "multiplicity",
              "residual", "status")
    rec = RunRecord(asdict(cfg), version_string(), 0.0, header, [])
    for i, pair in enumerate(_load_abstract(cfg)):
        report = check_all(pair, cfg.alpha, DEFAULT_TOL)
        if not report.passed:
            rec.reports.append([c.to_dict() for c in report.checks])
            rec.assertions.append(_assertion(f"pair {i}: all form conditions", False))
            continue
        s = assemble_s(pair, b=cfg.b)
        for r in solve_all(s, min(cfg.k, s.n_plus)):
            diff = abs(r.lambda_k - r.pencil_mu_k)
            rel_tol = tol * max(1.0, abs(r.pencil_mu_k))
            rec.rows.append({"pair": i, "k": r.k, "lambda": r.lambda_k, "mu": r.pencil_mu_k,
                             "diff": diff, "tolerance": rel_tol, "iterations": r.iterations,
                             "multiplicity": r.multiplicity, "residual": r.schur_residual,
                             "status": _status(r)})
    if rec.rows:
        worst = max(r["diff"] / r["tolerance"] for r in rec.rows)
        rec.assertions.append(_assertion("max diff / tolerance", worst <= 1.0, worst, 1.0))
    rec.wall_time = time.perf_counter() - t0
    return rec


RUNNERS = {
    "solve": run_solve,
    "sweep": run_sweep,
    "converge": run_converge,
    "pollution-demo": run_pollution_demo,
    "check-forms": run_check_forms,
    "abstract-solve": run_abstract_solve,
}


def run(cfg: RunConfig) -> RunRecord:
    return RUNNERS[cfg.command](cfg)
