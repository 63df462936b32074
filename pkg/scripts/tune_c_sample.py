"""Sweep the sample-count constant for the two frozen experiments.

Quadratic lane: p = p_i = 2, 400 x 8 matrix in groups of 2, eps = 0.25;
success means the eigen-pencil interval lies inside [0.75, 1.25].
MSN lane: 2000 groups of 2, n = 6, eps = 0.1; success means the sparsified
solve's objective is within 1.1 of the full solve's.

Usage: python3 scripts/tune_c_sample.py [--seeds 20]
"""

import argparse

import numpy as np

from blocklewis.instances import random_grouped, random_msn
from blocklewis.msn import solve_msn, solve_msn_sparsified
from blocklewis.rng import stream
from blocklewis.sampling import build_plan, draw_sparsifier, exact_distortion_quadratic
from blocklewis.solvers import blw_convert, contractive_blw


def quadratic_rate(c, seeds, eps=0.25, delta=0.1):
    ok, counts = 0, []
    for seed in range(seeds):
        g = random_grouped(stream(seed, "instances"), 400, 8, 2)
        cert = blw_convert(g, contractive_blw(g))
        plan = build_plan(cert, eps, delta, c)
        lo, hi = exact_distortion_quadratic(g, draw_sparsifier(g, plan, stream(seed, "draws")))
        ok += (1 - eps <= lo) and (hi <= 1 + eps)
        counts.append(plan.m_tilde)
    return ok / seeds, int(np.median(counts))


def msn_rate(c, seeds, eps=0.1, delta=0.1):
    ok, counts = 0, []
    for seed in range(seeds):
        inst = random_msn(stream(seed, "instances"), 2000, 6)
        full = solve_msn(inst, 1e-6).objective
        sol = solve_msn_sparsified(inst, eps, delta, c, stream(seed, "draws"))
        ok += sol.objective <= (1 + eps) * full
        counts.append(sol.info["m_tilde"])
    return ok / seeds, int(np.median(counts))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=20)
    args = parser.parse_args()
    print("lane       c_sample   success  median m_tilde")
    for c in (0.005, 0.01, 0.02, 0.03, 0.04):
        rate, count = quadratic_rate(c, args.seeds)
        print(f"quadratic  {c:<9g}  {rate:7.2f}  {count}")
    for c in (5e-5, 1e-4, 2.5e-4, 5e-4):
        rate, count = msn_rate(c, args.seeds)
        print(f"msn        {c:<9g}  {rate:7.2f}  {count}")


if __name__ == "__main__":
    main()
