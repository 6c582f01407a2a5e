#!/usr/bin/env python3
"""Scalar demo: u' = -u + 0.5 u(t-1) on [2,3), feedback off elsewhere.

Writes trajectory.csv and inequalities.json to --out (default ./out_scalar)
and prints the certificate for the periodic continuation of the schedule.
"""

import argparse
import json
import pathlib
import tempfile

from delaylab.cli import main as cli_main

CONFIG = {
    "model": {"type": "scalar", "a": 1.0},
    "schedule": {"switch_times": [0, 2, 3, 5], "delay": 1.0, "horizon": 5.0},
    "envelope": {"M": 1.0, "mu": 1.0},
    "feedback": {"mode": "delayed", "b_values": [0.5]},
    "run": {"h": 0.001, "t_end": 5.0},
}

CERTIFY = {
    "model": {"type": "scalar", "a": 1.0},
    "schedule": {"T0": 2.0, "T_tilde": 1.0, "n_cycles": 10, "delay": 1.0},
    "envelope": {"M": 1.0, "mu": 1.0},
    "feedback": {"mode": "delayed", "b_values": [0.5]},
    "certify": {
        "theorems": ["asymptotic_general", "asymptotic_small_delay",
                     "exponential_general", "exponential_small_delay"],
        "n_cycles": 10,
        "pattern": {"kind": "periodic"},
    },
}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out_scalar")
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(CONFIG, fh)
        sim_cfg = fh.name
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(CERTIFY, fh)
        cert_cfg = fh.name

    print("== simulate ==")
    cli_main(["simulate", "--config", sim_cfg, "--out", str(out), "--emit-states"])
    print("== certify (periodic continuation, b = 0.5) ==")
    code = cli_main(["certify", "--config", cert_cfg, "--out", str(out)])
    print(f"certify exit code: {code}")
    print(f"artifacts in {out}/")


if __name__ == "__main__":
    main()
