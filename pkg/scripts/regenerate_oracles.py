#!/usr/bin/env python3
"""Recompute every frozen constant used by the test suite.

Prints name = value pairs; compare against the constants embedded in
tests/test_integrator.py and tests/test_acceptance.py.
"""

import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from oracles import demo_lyapunov, demo_solution, euler_scalar_delayed, long_odd_solution_t5


def main():
    u = euler_scalar_delayed(1.0, 0.5, [0, 2, 3, 5], 1.0, 1e-6, 5.0)
    print(f"EULER_ORACLE_U5    = {u[-1]:.17g}")
    print(f"demo closed form   = {demo_solution(5.0):.17g}")
    print(f"long-odd u(5)      = {long_odd_solution_t5():.17g}")

    d = math.exp(0.2) * (math.exp(-2.0) + 0.1)
    print(f"D_GENERAL          = {d:.17g}")
    print(f"ALPHA_GENERAL      = {math.log(1.0 / d) / 6.0:.17g}")
    d_sq = math.exp(0.2) * (math.exp(-4.0) + 0.1)
    print(f"D_SQUARED          = {d_sq:.17g}")

    for t in (1.5, 2.0, 2.5, 3.0, 4.0):
        print(f"F({t})             = {demo_lyapunov(t):.17g}")

    small = math.exp(0.5) * (1.25 - math.exp(-0.5))
    print(f"small factor (0.5,1,0.25) = {small:.17g}")
    print(f"general factor            = {math.e * 0.75:.17g}")


if __name__ == "__main__":
    main()
