"""Command line surface: outputs, determinism, exit codes."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from polyqr.cli import main, parse_csv


def run(args):
    return main([str(a) for a in args])


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# cost


def test_cost_generic_table(tmp_path):
    out = tmp_path / "cost.csv"
    assert run(["cost", "--mt", 2, "--mr", 6, "-L", 15, "-N", 512, "-D", 500,
                "--c-ip-h", 2, "--out", out]) == 0
    header, rows = parse_csv(out)
    assert header["schedule"] == "pow2"
    assert list(rows[0]) == ["mt", "mr", "L", "N", "D", "algorithm", "total",
                             "ratio_vs_I"]
    by_algo = {r["algorithm"]: r for r in rows}
    assert by_algo["I"]["total"] == "71000"
    assert by_algo["II"]["total"] == "29348"
    assert by_algo["III"]["total"] == "27524"
    assert float(by_algo["I"]["ratio_vs_I"]) == 1.0


def test_cost_table2(tmp_path):
    out = tmp_path / "t2.csv"
    assert run(["cost", "--table2", "--out", out]) == 0
    header, rows = parse_csv(out)
    assert len(rows) == 12
    two = [r["ratio_2dp"] for r in rows if r["mt"] == "2"]
    assert two == ["0.74", "0.82", "0.55", "0.41", "0.38", "0.34"]
    v1 = {r["b_prime"]: r["v1_prime"] for r in rows
          if r["mt"] == "2" and r["v1_prime"]}
    assert v1 == {"32": "27", "16": "25", "12": "23", "8": "21"}


def test_cost_empty_data_set_infeasible(tmp_path):
    assert run(["cost", "--mt", 2, "--mr", 4, "-L", 15, "-N", 512, "-D", 0,
                "--out", tmp_path / "x.csv"]) == 3


def test_cost_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["cost", "--mt", 3, "--mr", 4, "-L", 4, "-N", 64, "-D", 61,
            "--schedule", "exact_minimal", "--c-ip-h", 2]
    assert run(args + ["--out", a]) == 0
    assert run(args + ["--out", b]) == 0
    assert read_bytes(a) == read_bytes(b)
    assert b"\r\n" in read_bytes(a)


# ---------------------------------------------------------------------------
# qrd


def test_qrd_factors_reproduce_channel(tmp_path):
    out = tmp_path / "qrd.jsonl"
    assert run(["qrd", "--mt", 2, "--mr", 3, "-L", 2, "-N", 16, "-D", 16,
                "--algorithm", "II", "--seed", 5, "--out", out]) == 0
    lines = out.read_text().splitlines()
    head = json.loads(lines[0])
    assert head["subcommand"] == "qrd"
    assert head["config"]["algorithm"] == "II"

    from polyqr.mimo import draw_channel, tone_response

    lp = draw_channel(2, 3, 2, np.random.default_rng(5))
    worst = 0.0
    for line in lines[1:]:
        rec = json.loads(line)
        Q = np.array(rec["Q"])[..., 0] + 1j * np.array(rec["Q"])[..., 1]
        R = np.array(rec["R"])[..., 0] + 1j * np.array(rec["R"])[..., 1]
        H = tone_response(lp, [rec["tone"]], 16)[0]
        worst = max(worst, float(np.max(np.abs(Q @ R - H))))
    assert len(lines) == 17
    assert worst < 1e-10


def test_qrd_config_file_and_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m_t": 2, "m_r": 2, "L": 1, "N": 8, "D": 8,
                               "algorithm": "I", "seed": 1}))
    out = tmp_path / "o.jsonl"
    assert run(["qrd", "--config", cfg, "--out", out]) == 0
    cfg.write_text(json.dumps({"m_t": 2, "m_r": 2, "L": 1, "N": 8, "D": 8,
                               "bogus": True}))
    assert run(["qrd", "--config", cfg, "--out", out]) == 2


def test_qrd_mmse_needs_sigma(tmp_path):
    args = ["qrd", "--mt", 2, "--mr", 2, "-L", 1, "-N", 8, "-D", 8,
            "--algorithm", "I_MMSE", "--out", tmp_path / "o.jsonl"]
    assert run(args) == 2
    assert run(args + ["--sigma-w", 0.4]) == 0


def test_qrd_infeasible_schedule(tmp_path):
    assert run(["qrd", "--mt", 4, "--mr", 4, "-L", 3, "-N", 16, "-D", 16,
                "--out", tmp_path / "o.jsonl"]) == 3


# ---------------------------------------------------------------------------
# ber


def test_ber_csv_and_rerun(tmp_path):
    cfg = tmp_path / "ber.json"
    cfg.write_text(json.dumps({
        "m_t": 2, "m_r": 2, "L": 2, "N": 16, "D": 16,
        "snrs_db": [9.0, 15.0], "min_bits": 2000, "min_errors": 0,
        "seed": 3,
    }))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["ber", "--config", cfg, "--out", a]) == 0
    assert run(["ber", "--config", cfg, "--out", b]) == 0
    assert read_bytes(a) == read_bytes(b)
    header, rows = parse_csv(a)
    assert header["algorithm"] == "I"
    assert "trials" in header
    assert [r["snr_db"] for r in rows] == ["9", "15"]
    for r in rows:
        assert int(r["bits"]) >= 2000
        assert float(r["ci_low"]) <= float(r["ber"]) <= float(r["ci_high"])


def test_ber_svg(tmp_path):
    cfg = tmp_path / "ber.json"
    cfg.write_text(json.dumps({
        "m_t": 2, "m_r": 2, "L": 1, "N": 8, "D": 8,
        "snrs_db": [6.0, 12.0], "min_bits": 1000, "min_errors": 0,
    }))
    svg = tmp_path / "curve.svg"
    assert run(["ber", "--config", cfg, "--out", tmp_path / "c.csv",
                "--svg", svg]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and "polyline" in text


def test_ber_config_not_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["ber", "--config", bad, "--out", tmp_path / "o.csv"]) == 2


def test_ber_missing_config(tmp_path):
    assert run(["ber", "--config", tmp_path / "nope.json",
                "--out", tmp_path / "o.csv"]) == 4


# ---------------------------------------------------------------------------
# interp-design


def test_interp_design_fir_row(tmp_path):
    out = tmp_path / "d.csv"
    assert run(["interp-design", "-B", 32, "-R", 31, "--b-prime", 8,
                "--v1", 21, "--v2", 39, "--out", out]) == 0
    _, rows = parse_csv(out)
    assert rows[0]["mult_per_target"] == "1"


def test_interp_design_needs_target_grid(tmp_path):
    # -B alone says nothing about where the targets live
    assert run(["interp-design", "-B", 32, "--b-prime", 8, "--v1", 1,
                "--v2", 1, "--out", tmp_path / "d.csv"]) == 2


# ---------------------------------------------------------------------------
# process-level behavior


def cli_env(**extra):
    env = {k: v for k, v in os.environ.items()}
    env.update(extra)
    return env


def test_threads_env_reaches_blas_caps(tmp_path):
    code = ("import polyqr.cli, os;"
            "print(os.environ.get('OMP_NUM_THREADS'),"
            " os.environ.get('OPENBLAS_NUM_THREADS'))")
    res = subprocess.run(
        [sys.executable, "-c", code],
        env=cli_env(POLYQR_THREADS="3"), capture_output=True, text=True,
    )
    assert res.stdout.split() == ["3", "3"]


def test_version_exits_zero():
    res = subprocess.run(
        [sys.executable, "-m", "polyqr.cli", "--version"],
        capture_output=True, text=True,
    )
    assert res.returncode == 0
    assert res.stdout.strip()


def test_threads_flag_in_header(tmp_path):
    out = tmp_path / "c.csv"
    assert run(["cost", "--table2", "--threads", 2, "--out", out]) == 0
    header, _ = parse_csv(out)
    assert header["threads"] == "2"
