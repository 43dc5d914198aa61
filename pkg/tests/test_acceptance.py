"""One test per acceptance criterion; each prints a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from gapminimax.dirac.basis import RadialBasis
from gapminimax.dirac.channel import assemble_channel
from gapminimax.dirac.oracle import radial_quantum_number, sommerfeld_oracle
from gapminimax.dirac.solve import epsilon_continuation, kato_certificate, solve_channel
from gapminimax.minimax import (
    assemble_s, brute_force_minimax, is_strictly_decreasing, monotonicity_certificate,
    solve_all, solve_lambda_k,
)
from gapminimax.random_pairs import random_pair
from gapminimax.workflows import RunConfig, run

SEED = 20240611
SWEEP_NU = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] AC{n:<2d} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def abstract_config():
    return RunConfig("abstract-solve", seed=SEED, count=200, k=5)


def sweep_config():
    return RunConfig("sweep", nu=list(SWEEP_NU), kappa=-1, split=["P", "T"], jobs=4)


@pytest.fixture(scope="module")
def abstract_run():
    t0 = time.perf_counter()
    rec = run(abstract_config())
    return rec, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweep_run():
    return run(sweep_config())


def test_ac01_abstract_equality(abstract_run):
    rec, elapsed = abstract_run
    diffs = [r["diff"] / max(1.0, abs(r["mu"])) for r in rec.rows]
    n_pairs = len({r["pair"] for r in rec.rows})
    worst = max(diffs)
    ok = n_pairs == 200 and worst <= 1e-9 and elapsed <= 60 and max(r["k"] for r in rec.rows) <= 5
    record(1, "lambda_k = mu_k on 200 random pairs", ok,
           f"max rel diff {worst:.2e} <= 1e-9 over {len(diffs)} levels, {elapsed:.1f} s <= 60 s")
    assert n_pairs == 200
    assert worst <= 1e-9
    assert elapsed <= 60


def test_ac02_two_by_two_closed_form(two_by_two):
    lam = solve_lambda_k(assemble_s(two_by_two), 1).lambda_k
    err = abs(lam - 1.1180339887498949)
    record(2, "2x2 closed form", err <= 1e-10, f"lambda_1 = {lam:.15f}, error {err:.1e} <= 1e-10")
    assert err <= 1e-10


def test_ac03_brute_force_oracle():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    diffs = []
    for i in range(20):
        n_plus = 1 + i % 3
        n = n_plus + int(rng.integers(1, 6))
        s = assemble_s(random_pair(rng, n=n, n_plus=n_plus))
        lam = solve_lambda_k(s, 1).lambda_k
        diffs.append(abs(lam - brute_force_minimax(s, 1, grid=10_000)))
    elapsed = time.perf_counter() - t0
    ok = max(diffs) <= 1e-3 and elapsed <= 120
    record(3, "brute-force minimax oracle", ok,
           f"max |lambda_1 - grid| {max(diffs):.2e} <= 1e-3, {elapsed:.1f} s <= 120 s")
    assert max(diffs) <= 1e-3
    assert elapsed <= 120


def test_ac04_dirac_ground_state():
    t0 = time.perf_counter()
    sol = solve_channel(assemble_channel(RadialBasis(), -1), 0.5, "P")
    elapsed = time.perf_counter() - t0
    err = abs(sol.lambdas[0] - 0.8660254037844386)
    ok = err <= 1e-6 and elapsed <= 60
    record(4, "Dirac ground state nu=0.5", ok,
           f"lambda_1 = {sol.lambdas[0]:.12f}, error {err:.1e} <= 1e-6, {elapsed:.1f} s <= 60 s")
    assert err <= 1e-6
    assert elapsed <= 60


def test_ac05_coupling_sweep(sweep_run):
    rows = sweep_run.rows
    p_err = max(r["abs_error"] for r in rows if r["split"] == "P")
    lam = {(r["nu"], r["split"]): r["lambda"] for r in rows}
    rel = max(abs(lam[(nu, "T")] - lam[(nu, "P")]) / abs(lam[(nu, "P")]) for nu in SWEEP_NU)
    ok = len(rows) == 18 and all(r["status"] == "ok" for r in rows) and p_err <= 1e-4 \
        and rel <= 1e-6
    record(5, "coupling sweep nu=0.1..0.9", ok,
           f"max P error {p_err:.2e} <= 1e-4, max |T-P|/|P| {rel:.2e} <= 1e-6")
    assert all(r["status"] == "ok" for r in rows) and len(rows) == 18
    assert p_err <= 1e-4
    assert rel <= 1e-6


def test_ac06_excited_states():
    sol = solve_channel(assemble_channel(RadialBasis(n_splines=400), -1), 0.5, "P", k_max=3)
    refs = [sommerfeld_oracle(0.5, -1, radial_quantum_number(-1, k)) for k in (1, 2, 3)]
    errs = [abs(lam - ref) for lam, ref in zip(sol.lambdas, refs)]
    ok = len(errs) == 3 and max(errs) <= 1e-5
    record(6, "excited states k=1..3", ok,
           "errors " + ", ".join(f"{e:.1e}" for e in errs) + " <= 1e-5")
    assert len(errs) == 3
    assert max(errs) <= 1e-5


def test_ac07_kato_certificate():
    rep = kato_certificate(assemble_channel(RadialBasis(), -1), 0.9, n_random=100, seed=SEED)
    bound = math.pi / 2 + 1e-8
    ok = rep.max_ratio <= bound
    record(7, "Kato certificate nu=0.9", ok,
           f"max ratio {rep.max_ratio:.4f} <= pi/2 + 1e-8 over {rep.n_samples} vectors")
    assert rep.max_ratio <= bound


def test_ac08_monotonicity_suite():
    rng = np.random.default_rng(SEED)
    fractions = ((0.05, 0.1), (0.2, 0.5), (0.5, 0.9))
    worst_slack = np.inf
    failed_certs = []
    n_scans = n_monotone = 0
    for i in range(100):
        s = assemble_s(random_pair(rng))
        results = solve_all(s, min(s.n_plus, 3))
        width = s.b - s.a
        for f1, f2 in fractions:
            u, u2 = s.a + f1 * width, s.a + f2 * width
            rep = monotonicity_certificate(s, u, u2, lambda_1=results[0].lambda_k, tol=1e-10)
            worst_slack = min(worst_slack, min(v / rep.scale for k, v in rep.slacks.items()
                                               if k != "min eig G_u"))
            if not rep.passed:
                failed_certs.append((i, u, u2, rep.offending))
        for r in results:
            n_scans += 1
            n_monotone += is_strictly_decreasing(r.scan)
    ineq_ok = not failed_certs
    scans_ok = n_monotone == n_scans
    record(8, "monotonicity suite", ineq_ok and scans_ok,
           f"matrix inequalities {'hold' if ineq_ok else 'FAIL'} (min slack/scale "
           f"{worst_slack:.1e} >= -1e-10); l_k strictly decreasing in {n_monotone}/{n_scans} "
           "bracket scans")
    assert ineq_ok, failed_certs[:5]
    assert scans_ok, f"l_k not strictly decreasing in {n_scans - n_monotone} of {n_scans} scans"


def test_ac09_epsilon_continuation(channel_m1):
    rep = epsilon_continuation(channel_m1, 0.5, [1e-1, 1e-2, 1e-3, 1e-4], u=0.0, seed=SEED)
    lam = solve_channel(channel_m1, 0.5).lambdas[0]
    ok = rep.monotone and rep.final_ok and rep.nonneg_transfer and lam >= 0
    record(9, "eps-continuation nu=0.5", ok,
           "|g_eps - g_0| = " + ", ".join(f"{d:.1e}" for d in rep.differences)
           + f" (final <= 1e-4 x {rep.scale:.3g}); transfer "
           + f"{'holds' if rep.nonneg_transfer else 'FAILS'}, lambda_1 = {lam:.6f} >= 0")
    assert rep.monotone
    assert rep.final_ok
    assert rep.nonneg_transfer and lam >= 0


def test_ac10_pollution_free(tmp_path):
    rec = run(RunConfig("pollution-demo", nu=[0.5], k=3, imbalance=2.0,
                        out=str(tmp_path / "demo")))
    csv_path, json_path = rec.write(rec.config["out"])
    listed = [r for r in rec.rows if r["source"] == "minimax-completed"]
    spurious = [r for r in rec.rows if r["status"] == "spurious candidate"]
    worst = max(r["distance"] for r in listed)
    ok = len(listed) == 3 and worst <= 5e-4 and json_path.is_file() and csv_path.is_file()
    record(10, "pollution-free minimax", ok,
           f"max distance to closed form {worst:.1e} <= 5e-4 for k<=3; "
           f"{len(spurious)} spurious direct candidates reported")
    assert len(listed) == 3
    assert worst <= 5e-4
    assert "spurious candidate" in csv_path.read_text() or not spurious


def test_ac11_determinism(abstract_run, sweep_run):
    first = [abstract_run[0].csv_text(), sweep_run.csv_text()]
    second = [run(abstract_config()).csv_text(), run(sweep_config()).csv_text()]
    same = [a == b for a, b in zip(first, second)]
    record(11, "determinism", all(same),
           f"abstract-solve CSV identical: {same[0]}, sweep CSV identical: {same[1]}")
    assert all(same)
