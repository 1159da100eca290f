"""Command line entry points, invoked in process."""

import json
import math

import numpy as np
import pytest

from compresslearn.cli import (compresslearn_main, distances_main, learn_main,
                               lowerbound_main)

GAUSS_A = json.dumps({"type": "gaussian", "mean": [0.0], "cov": [[1.0]]})
GAUSS_B = json.dumps({"type": "gaussian", "mean": [1.0], "cov": [[1.0]]})


def run_json(capsys, main, args):
    code = main(args)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_distances_kl(capsys):
    code, rec = run_json(capsys, distances_main,
                         ["--p", GAUSS_A, "--q", GAUSS_B, "--metric", "kl"])
    assert code == 0
    assert rec == {"method": "closed_form", "std_error": 0.0, "value": 0.5}


def test_distances_tv_quadrature(capsys):
    code, rec = run_json(capsys, distances_main,
                         ["--p", GAUSS_A, "--q", GAUSS_B, "--metric", "tv"])
    assert code == 0
    assert rec["method"] == "quadrature1d"
    assert rec["value"] == pytest.approx(0.38292492, abs=1e-6)


def test_distances_tv_monte_carlo_seeded(capsys):
    p = json.dumps({"type": "gaussian", "mean": [0.0, 0.0],
                    "cov": [[1.0, 0.0], [0.0, 1.0]]})
    q = json.dumps({"type": "gaussian", "mean": [1.0, 0.0],
                    "cov": [[1.0, 0.0], [0.0, 1.0]]})
    args = ["--p", p, "--q", q, "--metric", "tv", "--n-mc", "20000",
            "--seed", "3"]
    code, rec1 = run_json(capsys, distances_main, args)
    code2, rec2 = run_json(capsys, distances_main, args)
    assert code == code2 == 0
    assert rec1 == rec2
    assert rec1["method"] == "monte_carlo"
    assert rec1["std_error"] > 0.0


def test_distances_reads_files(tmp_path, capsys):
    p_path = tmp_path / "p.json"
    p_path.write_text(GAUSS_A)
    code, rec = run_json(capsys, distances_main,
                         ["--p", str(p_path), "--q", GAUSS_A,
                          "--metric", "kl"])
    assert code == 0
    assert rec["value"] == 0.0


def test_distances_kl_rejects_mixture(capsys):
    mix = json.dumps({"type": "mixture", "weights": [1.0],
                      "components": [json.loads(GAUSS_A)]})
    code = distances_main(["--p", mix, "--q", GAUSS_A, "--metric", "kl"])
    assert code == 2
    assert "kl" in capsys.readouterr().err


def test_learn_writes_result(tmp_path, capsys):
    out = tmp_path / "result.json"
    code = learn_main([
        "--target", GAUSS_B, "--scheme", "g1d", "--eps", "0.3",
        "--delta", "0.4", "--budget", "32", "--seed", "5",
        "--out", str(out)])
    assert code == 0
    rec = json.loads(out.read_text())
    assert rec["scheme"] == "g1d"
    assert rec["candidate_count"] <= 32
    assert rec["budget_capped"] is True
    assert 0.0 <= rec["tv_to_target"] <= 1.0
    assert rec["estimate"]["type"] == "gaussian"
    assert rec["selection"]["strategy"] == "closed_form_1d"


def test_learn_mixture_scheme(tmp_path):
    target = json.dumps({
        "type": "mixture", "weights": [0.5, 0.5],
        "components": [{"type": "gaussian", "mean": [0.0], "cov": [[1.0]]},
                       {"type": "gaussian", "mean": [5.0], "cov": [[1.0]]}]})
    out = tmp_path / "mix.json"
    code = learn_main([
        "--target", target, "--scheme", "mixture", "--eps", "0.4",
        "--delta", "0.5", "--budget", "8", "--seed", "2", "--out", str(out)])
    assert code == 0
    rec = json.loads(out.read_text())
    assert rec["estimate"]["type"] == "mixture"


def test_learn_rejects_scheme_target_mismatch(capsys):
    code = learn_main([
        "--target", GAUSS_A, "--scheme", "mixture", "--eps", "0.3",
        "--delta", "0.3", "--budget", "8"])
    assert code == 2


def test_lowerbound_outputs(tmp_path, capsys):
    out = tmp_path / "family.json"
    code = lowerbound_main([
        "--d", "18", "--r", "9", "--eps", "0.25", "--M", "4", "--seed", "0",
        "--out", str(out), "--tv-mc-pairs", "1", "--n-mc", "5000"])
    assert code == 0
    fam = json.loads(out.read_text())
    assert fam["d"] == 18 and fam["size"] == 4
    assert len(fam["covariances"]) == 4
    kl_rows = (tmp_path / "family.kl.csv").read_text().splitlines()
    assert len(kl_rows) == 4
    assert float(kl_rows[0].split(",")[0]) == 0.0
    fr_rows = (tmp_path / "family.frobenius.csv").read_text().splitlines()
    assert len(fr_rows) == 4
    fano = json.loads((tmp_path / "family.fano.json").read_text())
    assert fano["m_family"] == 4
    assert fano["kl_upper_bound"] > 0.0
    assert len(fano["tv_mc_fits"]) == 1
    assert fano["fitted_c"] > 0.0


def test_lowerbound_deterministic_output(tmp_path):
    args = ["--d", "18", "--r", "9", "--eps", "0.2", "--M", "3",
            "--seed", "1", "--tv-mc-pairs", "0"]
    code = lowerbound_main(args + ["--out", str(tmp_path / "a.json")])
    code2 = lowerbound_main(args + ["--out", str(tmp_path / "b.json")])
    assert code == code2 == 0
    assert (tmp_path / "a.kl.csv").read_bytes() \
        == (tmp_path / "b.kl.csv").read_bytes()
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    assert a == b


def test_compresslearn_run(tmp_path, capsys):
    cfg = dict(experiment="hull_probe", grid_kind="n", grid=[200],
               trials=2, seed=9, params={"d": 3})
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "out"
    code = compresslearn_main(["run", "--config", str(cfg_path),
                               "--out", str(out_dir)])
    assert code == 0
    assert (out_dir / "rows.csv").exists()
    assert (out_dir / "summary.csv").exists()
    manifest = json.loads((out_dir / "run-manifest.json").read_text())
    assert manifest["config"]["experiment"] == "hull_probe"


def test_compresslearn_run_rejects_bad_config(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"experiment": "nope"}))
    code = compresslearn_main(["run", "--config", str(cfg_path),
                               "--out", str(tmp_path / "o")])
    assert code == 2
    assert "compresslearn" in capsys.readouterr().err
