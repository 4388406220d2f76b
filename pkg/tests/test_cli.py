import csv
import json

import numpy as np
import pytest

from wlra import mmio
from wlra.cli import main


def gen(out, *extra, n=16, k=1, seed=0):
    args = ["gen", "--n", str(n), "--k", str(k), "--seed", str(seed), "--out", str(out), *extra]
    assert main(args) == 0
    return out


def test_gen_noiseless_manifest(tmp_path):
    d = gen(tmp_path / "g", "--gamma", "0", "--noise", "0", n=8)
    man = mmio.read_json(d / "manifest.json")
    assert man["report"]["gamma"] == 0.0
    assert man["ground_truth_residual"] == 0.0
    assert man["schema"] == 1 and "seed_policy" in man


def test_gen_is_byte_identical(tmp_path):
    a = gen(tmp_path / "a", "--gamma", "1e-3", "--noise", "1e-3", "--tau", "2")
    b = gen(tmp_path / "b", "--gamma", "1e-3", "--noise", "1e-3", "--tau", "2")
    for f in ("M.mtx", "W.mtx", "U.mtx", "V.mtx", "sigma.mtx", "N.mtx", "manifest.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_gen_then_check(tmp_path, capsys):
    d = gen(tmp_path / "g", "--gamma", "1e-3", "--k", "2", n=24)
    man = mmio.read_json(d / "manifest.json")
    out = tmp_path / "report.json"
    assert main(["check", "--input", str(d), "--format", "json", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert abs(rep["gamma"] - man["report"]["gamma"]) <= 1e-9
    for key in ("mu", "tau", "alpha", "beta", "sigma_min"):
        assert rep[key] == pytest.approx(man["report"][key], rel=1e-12)
    assert rep["estimated"] == []


def test_check_all_ones_and_estimated(tmp_path, capsys):
    rng = np.random.default_rng(0)
    mmio.write_matrix(tmp_path / "m.mtx", rng.standard_normal((6, 6)))
    mmio.write_matrix(tmp_path / "w.mtx", np.ones((6, 6)))
    assert main(["check", "--m", str(tmp_path / "m.mtx"), "--w", str(tmp_path / "w.mtx"),
                 "--k", "2"]) == 0
    text = capsys.readouterr().out
    assert "gamma = 0\n" in text
    assert "estimated = mu,tau,sigma_min,alpha,beta" in text


def test_solve_noiseless(tmp_path):
    d = gen(tmp_path / "g", "--gamma", "0", "--noise", "0", "--k", "2", n=24)
    out = tmp_path / "s"
    assert main(["solve", "--input", str(d), "--t", "6", "--out", str(out)]) == 0
    rows = mmio.read_trace(out / "trace.csv")
    assert len(rows) == 6
    assert rows[-1]["residual_w"] <= 1e-6
    res = mmio.read_json(out / "result.json")
    assert res["iterations"] == 6 and res["config"]["k"] == 2
    assert mmio.read_matrix(out / "M_tilde.mtx").shape == (24, 24)


def test_solve_exact_vs_fast(tmp_path):
    d = gen(tmp_path / "g", "--gamma", "1e-3", "--noise", "1e-3", "--k", "2", n=24)
    finals = []
    for flag in ([], ["--exact"]):
        out = tmp_path / ("e" if flag else "f")
        assert main(["solve", "--input", str(d), "--t", "5", "--eps-sk", "1e-12",
                     "--out", str(out), *flag]) == 0
        finals.append(mmio.read_trace(out / "trace.csv")[-1]["residual_w"])
    assert abs(finals[0] - finals[1]) <= 1e-6 * finals[1]


def test_solve_single_iteration_and_json(tmp_path):
    d = gen(tmp_path / "g", "--gamma", "1e-3")
    out = tmp_path / "s"
    assert main(["solve", "--input", str(d), "--t", "1", "--format", "json",
                 "--out", str(out)]) == 0
    rows = json.loads((out / "trace.json").read_text())
    assert len(rows) == 1 and rows[0]["iter"] == 1


def test_solve_no_timing_reproducible(tmp_path):
    d = gen(tmp_path / "g", "--gamma", "1e-3", "--noise", "1e-3")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["solve", "--input", str(d), "--t", "3", "--no-timing", "--out", str(out)]) == 0
        outs.append(out)
    for f in ("trace.csv", "M_tilde.mtx", "result.json"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_trace_round_trip(tmp_path):
    d = gen(tmp_path / "g", "--gamma", "1e-3")
    out = tmp_path / "s"
    main(["solve", "--input", str(d), "--t", "2", "--out", str(out)])
    rows = mmio.read_trace(out / "trace.csv")
    with open(out / "trace.csv") as fh:
        raw = list(csv.DictReader(fh))
    for parsed, text in zip(rows, raw):
        assert parsed["residual_w"] == float(text["residual_w"])


def test_bench_single_cell(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--n", "32", "--k", "2", "--repeats", "1", "--iters", "1",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == "n,k,repeats,iters,backend,mode,median_ms_per_iter"
    assert float(lines[1].split(",")[-1]) > 0


def test_exit_parse_error(tmp_path, capsys):
    assert main(["solve", "--m", str(tmp_path / "missing.mtx"), "--k", "1",
                 "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix array real general\n2 2\n1\n2\nfoo\n4\n")
    assert main(["check", "--m", str(bad), "--k", "1"]) == 2
    assert "line" in capsys.readouterr().err.lower()


def test_exit_infeasible(tmp_path):
    assert main(["gen", "--n", "32", "--k", "1", "--gamma", "0.5", "--weights", "gap_random",
                 "--out", str(tmp_path / "g")]) == 3


def test_exit_solver_failure(tmp_path):
    mmio.write_matrix(tmp_path / "m.mtx", np.zeros((4, 4)))
    assert main(["solve", "--m", str(tmp_path / "m.mtx"), "--k", "1",
                 "--out", str(tmp_path / "o")]) == 4


def test_output_must_not_clobber_input(tmp_path):
    d = gen(tmp_path / "g", "--gamma", "0")
    assert main(["check", "--m", str(d / "M.mtx"), "--k", "1", "--out", str(d / "M.mtx")]) == 2
