import json
import math

import numpy as np
import pytest

from flattop import cli
from flattop.data_io import gen_mixed_1d, write_csv


def _run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_eval_grid_row_count_and_normalization(capsys):
    code, out, _ = _run(capsys, "eval", "--family", "AL",
                        "--params", "a=-1,b=1,s=0.1", "--grid", "-2:2:0.01")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "x,pdf,cdf"
    assert len(lines) == 402  # header + 401 grid rows
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    trapz = np.trapezoid(rows[:, 1], rows[:, 0])
    assert abs(trapz - 1.0) < 1e-3
    assert np.all(np.diff(rows[:, 2]) >= -1e-12)


def test_eval_byte_identical_reruns(capsys):
    args = ("eval", "--family", "GN", "--params", "mu=0,s=1,beta=4",
            "--grid", "-3:3:0.1")
    _, out1, _ = _run(capsys, *args)
    _, out2, _ = _run(capsys, *args)
    assert out1 == out2


def test_eval_json_format(capsys):
    code, out, _ = _run(capsys, "eval", "--family", "U", "--params", "a=0,b=1",
                        "--grid", "0:1:0.5", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"family", "x", "pdf", "cdf"}
    assert payload["pdf"] == [1.0, 1.0, 1.0]


def test_sample_deterministic_per_seed(capsys):
    args = ("sample", "--family", "U", "--params", "a=0,b=1", "-n", "4", "--seed", "1")
    _, out1, _ = _run(capsys, *args)
    _, out2, _ = _run(capsys, *args)
    assert out1 == out2
    values = [float(v) for v in out1.strip().split("\n")]
    assert len(values) == 4
    assert all(0.0 <= v <= 1.0 for v in values)


def test_usage_errors_exit_two(capsys):
    code, _, _ = _run(capsys, "eval", "--family", "AL",
                      "--params", "a=-1,b=1,s=0.1", "--grid", "nonsense")
    assert code == 2
    code, _, _ = _run(capsys, "eval", "--family", "NOPE",
                      "--params", "a=0,b=1", "--grid", "0:1:0.5")
    assert code == 2
    code, _, _ = _run(capsys, "nosuchcommand")
    assert code == 2


def test_runtime_errors_exit_one(capsys):
    code, _, err = _run(capsys, "eval", "--family", "AL",
                        "--params", "a=1,b=0,s=0.1", "--grid", "0:1:0.5")
    assert code == 1
    assert "a < b" in err
    code, _, err = _run(capsys, "fit", "--family", "AL", "--data", "/no/such/file.csv")
    assert code == 1


def test_unknown_param_key_rejected(capsys):
    code, _, err = _run(capsys, "eval", "--family", "AL",
                        "--params", "a=-1,b=1,s=0.1,q=3", "--grid", "0:1:0.5")
    assert code == 1
    assert "unknown parameter" in err


def test_fit_subcommand_emits_report(capsys, tmp_path):
    ds = gen_mixed_1d(seed=2)
    path = tmp_path / "mixed.csv"
    write_csv(ds, str(path))
    trace_path = tmp_path / "trace.csv"
    code, out, _ = _run(capsys, "fit", "--family", "AL", "--data", str(path),
                        "--init-normal", "--trace", str(trace_path))
    assert code == 0
    payload = json.loads(out)
    assert payload["family"] == "AL"
    assert set(payload["params"]) == {"a", "b", "s"}
    assert payload["report"]["free_params"] == 3
    trace_lines = trace_path.read_text().strip().split("\n")
    assert trace_lines[0] == "iteration,loglik"
    assert len(trace_lines) >= 3


def test_mixfit_writes_model_and_responsibilities(capsys, tmp_path):
    rng = np.random.default_rng(3)
    rows = np.concatenate([rng.uniform(0, 3, 150), rng.uniform(6, 9, 150)])
    path = tmp_path / "d.csv"
    np.savetxt(path, rows, fmt="%.17g")
    resp_path = tmp_path / "resp.csv"
    code, out, _ = _run(capsys, "mixfit", "--family", "FTM", "--k", "2",
                        "--data", str(path), "--seed", "5",
                        "--resp", str(resp_path))
    assert code == 0
    payload = json.loads(out)
    assert payload["model"]["K"] == 2
    assert len(payload["model"]["weights"]) == 2
    assert payload["model"]["factorized"] is False
    resp_lines = resp_path.read_text().strip().split("\n")
    assert resp_lines[0] == "w0,w1"
    assert len(resp_lines) == 301
    first = [float(v) for v in resp_lines[1].split(",")]
    assert sum(first) == pytest.approx(1.0, abs=1e-9)


def test_sweep_emits_table(capsys, tmp_path):
    rng = np.random.default_rng(4)
    rows = np.concatenate([rng.uniform(0, 3, 120), rng.uniform(6, 9, 120)])
    path = tmp_path / "d.csv"
    np.savetxt(path, rows, fmt="%.17g")
    code, out, _ = _run(capsys, "sweep", "--family", "GMM", "--k", "1:3",
                        "--data", str(path), "--seed", "6")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "K,it,loglik_per_N,AIC,BIC"
    assert len(lines) == 4
    assert [int(line.split(",")[0]) for line in lines[1:]] == [1, 2, 3]


def test_flatness_json_schema(capsys):
    code, out, _ = _run(capsys, "flatness", "--family", "AL",
                        "--params", "a=-1,b=1,s=0.1", "--eps", "0.05,0.01")
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"a", "b", "epsilon_measure", "family_bound",
                            "delta", "interval_ratio", "verdict_at"}
    assert payload["verdict_at"] == {"0.05": True, "0.01": True}


def test_divergence_cases(capsys):
    code, out, _ = _run(capsys, "divergence", "--case", "uniform-normal")
    assert code == 0
    payload = json.loads(out)
    assert payload["method"] == "closed_form"
    assert round(payload["kl"], 3) == 0.176
    code, out, _ = _run(capsys, "divergence", "--case", "ball-normal", "--dim", "2")
    payload = json.loads(out)
    assert payload["kl"] == pytest.approx(1.0 - math.log(2.0))
    code, out, _ = _run(capsys, "divergence", "--case", "pair",
                        "--p", "U:a=0,b=1", "--q", "U:a=0.5,b=1.5")
    payload = json.loads(out)
    assert payload["l1"] == pytest.approx(1.0, abs=1e-8)
    code, _, _ = _run(capsys, "divergence", "--case", "pair")
    assert code == 2


def test_gradcheck_all_families_small(capsys):
    for family, bound in (("AL", 1e-6), ("BL", 0.02), ("CL", 1e-6)):
        code, out, _ = _run(capsys, "gradcheck", "--family", family,
                            "--n", "50", "--seed", "7")
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "param,analytic,fd,rel_err"
        rels = [float(line.split(",")[-1]) for line in lines[1:]]
        assert max(rels) < bound, (family, max(rels))


def test_gen_counts(capsys):
    code, out, _ = _run(capsys, "gen", "--what", "mixed1d", "--seed", "3")
    assert code == 0
    assert len(out.strip().split("\n")) == 55
    code, out, _ = _run(capsys, "gen", "--what", "segments", "--seed", "3")
    assert len(out.strip().split("\n")) == 427
    assert all(len(line.split(",")) == 2 for line in out.strip().split("\n"))


def test_out_file_and_env_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("FLATTOP_OUTPUT_DIR", str(tmp_path))
    code, out, _ = _run(capsys, "gen", "--what", "mixed1d", "--seed", "1",
                        "--out", "pts.csv")
    assert code == 0
    assert out == ""
    written = (tmp_path / "pts.csv").read_text().strip().split("\n")
    assert len(written) == 55
