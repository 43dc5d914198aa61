import csv
import io
import json

import numpy as np
import pytest

from gapminimax.cli import main, parse_grid
from gapminimax.forms import FormPair, SplitSpace
from gapminimax.mmio import save_pair
from gapminimax.workflows import EXIT_ASSERTION, EXIT_INPUT, EXIT_OK, RunConfig, run

SMALL = {"r_max": 40.0, "n_splines": 80, "grading": 12.0}


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "channel.json"
    path.write_text(json.dumps({"kappa": -1, **SMALL}))
    return str(path)


@pytest.fixture
def two_by_two_files(tmp_path, two_by_two):
    paths = save_pair(tmp_path / "pair", two_by_two)
    return ["--M", str(paths["M"]), "--Q", str(paths["Q"]), "--V", str(paths["V"]),
            "--split-file", str(paths["split"])]


def test_parse_grid():
    assert parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert parse_grid("0.5, 0.7") == [0.5, 0.7]
    assert parse_grid("") == []


def test_solve_ground_state(capsys):
    assert main(["solve", "--nu", "0.5", "--kappa", "-1", "--split", "P", "--k", "1"]) == EXIT_OK
    (row,) = rows_of(capsys.readouterr().out)
    assert abs(float(row["lambda"]) - 0.8660254) < 1e-7
    assert float(row["abs_error"]) <= 1e-6


def test_solve_zero_coupling(capsys):
    assert main(["solve", "--nu", "0", "--kappa", "-1", "--split", "P", "--k", "1"]) == EXIT_OK
    (row,) = rows_of(capsys.readouterr().out)
    assert row["status"] == "no eigenvalue below ceiling" and float(row["lambda"]) == 1.0


def test_solve_kappa_plus_one(capsys):
    assert main(["solve", "--nu", "0.5", "--kappa", "1", "--split", "P", "--k", "1"]) == EXIT_OK
    (row,) = rows_of(capsys.readouterr().out)
    assert abs(float(row["lambda"]) - 0.9659258) < 1e-6


def test_solve_writes_json_and_csv(tmp_path, small_config):
    out = tmp_path / "run"
    assert main(["solve", "--config", small_config, "--nu", "0.5", "--out", str(out)]) == EXIT_OK
    body = json.loads(out.with_suffix(".json").read_text())
    assert body["exit_code"] == 0 and body["rows"][0]["k"] == 1
    assert body["config"]["channel"]["n_splines"] == 80
    assert out.with_suffix(".csv").read_text().startswith("nu,kappa,split,k,lambda,oracle")


def test_solve_regime_violation_is_input_error(small_config, capsys):
    code = main(["solve", "--config", small_config, "--nu", "0.93", "--split", "T"])
    assert code == EXIT_INPUT
    # forced past the threshold the small basis is only good to about 4e-5
    assert main(["solve", "--config", small_config, "--nu", "0.93", "--split", "T",
                 "--force", "--tol", "1e-4"]) == EXIT_OK


def test_solve_tight_tolerance_fails(small_config):
    assert main(["solve", "--config", small_config, "--nu", "0.5", "--tol", "1e-15"]) \
        == EXIT_ASSERTION


def test_input_errors(tmp_path, capsys):
    assert main(["solve", "--kappa", "0"]) == EXIT_INPUT
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == EXIT_INPUT
    assert main(["solve", "--out", str(tmp_path / "no" / "dir" / "x")]) == EXIT_INPUT
    assert main(["check-forms", "--M", str(tmp_path / "M.mtx")]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["solve", "--config", str(bad)]) == EXIT_INPUT
    assert "input error" in capsys.readouterr().err


def test_sweep_small_grid_and_regime_flags(small_config, capsys):
    code = main(["sweep", "--config", small_config, "--grid", "0.3:0.5:0.1", "--split", "P",
                 "--split", "T"])
    rows = rows_of(capsys.readouterr().out)
    assert code == EXIT_OK and len(rows) == 6
    assert [r["gls_regime"] for r in rows if r["split"] == "P"] == ["true", "false", "false"]


def test_sweep_refused_row(small_config, capsys):
    code = main(["sweep", "--config", small_config, "--grid", "0.93", "--split", "T"])
    (row,) = rows_of(capsys.readouterr().out)
    assert code == EXIT_OK
    assert row["status"].startswith("refused") and "0.906" in row["status"]
    assert row["talman_ok"] == "false"


def test_sweep_empty_grid(capsys):
    assert main(["sweep", "--grid", ""]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.strip() == ("nu,kappa,split,k,lambda,oracle,abs_error,iterations,tolerance,status,"
                           "mu_reference,in_P1,talman_ok,core_regime,gls_regime")


def test_sweep_parallel_matches_serial(small_config):
    base = dict(nu=[0.2, 0.4, 0.6], split=["P", "T"], channel=SMALL)
    serial = run(RunConfig("sweep", **base)).csv_text()
    assert run(RunConfig("sweep", jobs=3, **base)).csv_text() == serial


def test_converge_decreasing(capsys):
    assert main(["converge", "--nu", "0.5", "--sizes", "10,20,40"]) == EXIT_OK
    errs = [float(r["abs_error"]) for r in rows_of(capsys.readouterr().out)]
    assert errs[0] > errs[1] > errs[2]


def test_converge_single_size_has_no_assertion():
    rec = run(RunConfig("converge", sizes=[20]))
    assert len(rec.rows) == 1 and rec.assertions == []


def test_converge_repeat_size_is_identical():
    rec = run(RunConfig("converge", sizes=[60, 60], channel=SMALL))
    first, second = rec.csv_text().splitlines()[1:]
    assert first == second


def test_pollution_demo_zero_coupling():
    rec = run(RunConfig("pollution-demo", nu=[0.0], channel=SMALL, k=3))
    assert rec.exit_code == EXIT_OK
    direct = [r for r in rec.rows if r["source"] == "direct"]
    assert direct == []
    assert all(r["status"] == "no eigenvalue below ceiling"
               for r in rec.rows if r["source"] == "minimax-completed")


def test_pollution_demo_balanced():
    # the third level needs the full 80 box
    rec = run(RunConfig("pollution-demo", nu=[0.5], channel={"n_splines": 120}, k=3,
                        imbalance=1))
    assert rec.exit_code == EXIT_OK
    assert not [r for r in rec.rows if r["status"] == "spurious candidate"]
    assert {r["source"] for r in rec.rows} == {"direct", "minimax-completed"}


def test_check_forms_two_by_two(two_by_two_files, capsys):
    assert main(["check-forms", *two_by_two_files]) == EXIT_OK
    rows = rows_of(capsys.readouterr().out)
    assert [r["pass"] for r in rows] == ["true"] * 8


def test_check_forms_flipped_split(tmp_path, capsys):
    pair = FormPair(np.eye(2), np.diag([1.0, -1.0]), np.array([[0.0, 0.5], [0.5, 0.0]]),
                    SplitSpace.from_indices(2, [1]))
    paths = save_pair(tmp_path, pair)
    code = main(["check-forms", "--M", str(paths["M"]), "--Q", str(paths["Q"]),
                 "--V", str(paths["V"]), "--split-file", str(paths["split"])])
    rows = {int(r["condition"]): r["pass"] for r in rows_of(capsys.readouterr().out)}
    assert code == EXIT_ASSERTION
    assert rows[2] == "false" and rows[3] == "false"


def test_check_forms_zero_perturbation(tmp_path, capsys):
    pair = FormPair(np.eye(3), np.diag([2.0, -1.0, 1.0]), np.zeros((3, 3)),
                    SplitSpace.from_indices(3, [0, 2]))
    paths = save_pair(tmp_path, pair)
    assert main(["check-forms", "--M", str(paths["M"]), "--Q", str(paths["Q"]),
                 "--V", str(paths["V"]), "--split-file", str(paths["split"])]) == EXIT_OK
    margins = {int(r["condition"]): float(r["margin"]) for r in rows_of(capsys.readouterr().out)}
    assert [margins[c] for c in (6, 7, 8)] == [0.0, 0.0, 1.0]


def test_abstract_solve_two_by_two(two_by_two_files, capsys):
    assert main(["abstract-solve", *two_by_two_files]) == EXIT_OK
    (row,) = rows_of(capsys.readouterr().out)
    assert abs(float(row["lambda"]) - 1.1180339887498949) <= 1e-10
    assert float(row["diff"]) <= 1e-10


def test_abstract_solve_random_twenty(capsys):
    assert main(["abstract-solve", "--seed", "1", "--dim", "20", "--k", "20"]) == EXIT_OK
    rows = rows_of(capsys.readouterr().out)
    assert max(float(r["diff"]) for r in rows) <= 1e-9


def test_abstract_solve_diagonal_exact(tmp_path, capsys):
    pair = FormPair(np.eye(4), np.diag([3.0, -1.0, 0.5, -2.0]), np.zeros((4, 4)),
                    SplitSpace.from_indices(4, [0, 2]))
    paths = save_pair(tmp_path, pair)
    assert main(["abstract-solve", "--M", str(paths["M"]), "--Q", str(paths["Q"]),
                 "--V", str(paths["V"]), "--split-file", str(paths["split"]), "--k", "2"]) == 0
    assert [float(r["lambda"]) for r in rows_of(capsys.readouterr().out)] == [0.5, 3.0]


def test_abstract_solve_rejects_invalid_pair(tmp_path):
    pair = FormPair(np.eye(2), np.diag([1.0, -1.0]), np.zeros((2, 2)),
                    SplitSpace.from_indices(2, [1]))
    paths = save_pair(tmp_path, pair)
    rec = run(RunConfig("abstract-solve", matrices={k: str(v) for k, v in paths.items()}))
    assert rec.exit_code == EXIT_ASSERTION and rec.rows == []


def test_converge_floor_aware():
    rec = run(RunConfig("converge", sizes=[50, 100, 200]))
    assert rec.exit_code == EXIT_OK
    assert all(r["abs_error"] <= 1e-8 for r in rec.rows)
