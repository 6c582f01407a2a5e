import json

import numpy as np
import pytest

from delaylab.cli import main

DEMO = {
    "model": {"type": "scalar", "a": 1.0},
    "schedule": {"switch_times": [0, 2, 3, 5], "delay": 1.0, "horizon": 5.0},
    "envelope": {"M": 1.0, "mu": 1.0},
    "feedback": {"mode": "delayed", "b_values": [0.5]},
    "run": {"h": 0.001, "t_end": 5.0},
}

PERIODIC = {
    "model": {"type": "scalar", "a": 1.0},
    "schedule": {"T0": 2.0, "T_tilde": 1.0, "n_cycles": 10, "delay": 1.0},
    "envelope": {"M": 1.0, "mu": 1.0},
    "feedback": {"mode": "delayed", "b_values": [0.1]},
    "certify": {"theorems": ["exponential_general"]},
}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_simulate_row_count_and_summary(tmp_path, capsys):
    cfg = write_config(tmp_path, DEMO)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 5001 + 1  # data rows + header
    assert "final norm" in capsys.readouterr().out
    checks = json.loads((tmp_path / "inequalities.json").read_text())
    assert all(c["pass"] for c in checks if c["applicable"])


def test_simulate_deterministic_outputs(tmp_path):
    cfg = write_config(tmp_path, DEMO)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["simulate", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()
    assert (out1 / "inequalities.json").read_bytes() == (out2 / "inequalities.json").read_bytes()


def test_simulate_adjusts_misaligned_step(tmp_path, capsys):
    payload = json.loads(json.dumps(DEMO))
    payload["run"]["h"] = 0.003  # tau/h not an integer
    cfg = write_config(tmp_path, payload)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert "step adjusted" in capsys.readouterr().err
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 5 * 334 + 1 + 1  # h = 1/334


def test_missing_section_exits_2(tmp_path, capsys):
    payload = {k: v for k, v in DEMO.items() if k != "model"}
    cfg = write_config(tmp_path, payload)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "model" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    payload = json.loads(json.dumps(DEMO))
    payload["run"]["stepsize"] = 0.1
    cfg = write_config(tmp_path, payload)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "stepsize" in capsys.readouterr().err


def test_certify_exit_codes(tmp_path):
    cfg = write_config(tmp_path, PERIODIC)
    assert main(["certify", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "certificates.json").read_text())
    assert report[0]["predicted"]["alpha"] == pytest.approx(0.2077907, abs=1e-6)

    hot = json.loads(json.dumps(PERIODIC))
    hot["feedback"]["b_values"] = [1.0]
    assert main(["certify", "--config", write_config(tmp_path, hot, "hot.json"),
                 "--out", str(tmp_path)]) == 3

    late = json.loads(json.dumps(PERIODIC))
    late["schedule"]["delay"] = 3.0  # T0 < tau: precondition unmet
    assert main(["certify", "--config", write_config(tmp_path, late, "late.json"),
                 "--out", str(tmp_path)]) == 4


def test_certify_series_with_pattern(tmp_path):
    payload = json.loads(json.dumps(PERIODIC))
    payload["certify"] = {
        "theorems": ["asymptotic_general", "asymptotic_small_delay"],
        "n_cycles": 10,
        "pattern": {"kind": "periodic"},
    }
    cfg = write_config(tmp_path, payload)
    assert main(["certify", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "certificates.json").read_text())
    assert {r["verdict"] for r in report} == {"certified_asymptotic_pattern"}


def test_sweep_monotone_and_crossing(tmp_path, capsys):
    cfg = write_config(tmp_path, PERIODIC)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path),
                 "--axis", "B_bar", "--values", "lin:0:0.5:11"]) == 0
    assert "d crosses 1" in capsys.readouterr().out
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "value,d,alpha,verdict"
    d = [float(r.split(",")[1]) for r in rows[1:]]
    assert all(np.diff(d) >= 0)


def test_sweep_t0_nonincreasing(tmp_path):
    cfg = write_config(tmp_path, PERIODIC)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path),
                 "--axis", "T0", "--values", "1.5,2,2.5,3"]) == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()[1:]
    d = [float(r.split(",")[1]) for r in rows]
    assert all(np.diff(d) <= 0)


def test_sweep_empty_values(tmp_path):
    cfg = write_config(tmp_path, PERIODIC)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path),
                 "--axis", "B_bar", "--values", ""]) == 0
    assert (tmp_path / "sweep.csv").read_text() == "value,d,alpha,verdict\n"


def test_sweep_unknown_axis_exits_2(tmp_path):
    cfg = write_config(tmp_path, PERIODIC)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path),
                 "--axis", "gamma", "--values", "1,2"]) == 2


def test_sweep_threads_match_serial(tmp_path):
    cfg = write_config(tmp_path, PERIODIC)
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "s1"),
          "--axis", "B_bar", "--values", "0,0.1,0.2,0.3"])
    main(["sweep", "--config", cfg, "--out", str(tmp_path / "s2"),
          "--axis", "B_bar", "--values", "0,0.1,0.2,0.3", "--threads", "4"])
    assert ((tmp_path / "s1" / "sweep.csv").read_bytes()
            == (tmp_path / "s2" / "sweep.csv").read_bytes())


def test_validate_writes_report(tmp_path):
    cfg = write_config(tmp_path, PERIODIC)
    assert main(["validate", "--config", cfg, "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "validate.json").read_text())
    assert payload["t_star"] == 0.0
    assert payload["hypotheses"]["even_geq_tau"] == [True] * 10


def test_emit_states_flag(tmp_path):
    cfg = write_config(tmp_path, DEMO)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path),
                 "--emit-states"]) == 0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header.endswith("state_0")


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 2
