#!/usr/bin/env python3
"""
Fast-fail reproduction of the closed-form scenarios.

Usage:
  python scripts/reproduce_scenarios.py
  python scripts/reproduce_scenarios.py --only constant,counterexamples --L 5
"""
from __future__ import annotations

import argparse
import itertools
import sys

import numpy as np

from nfg.equilibrium_solver import (
    constant_solution,
    construct_admissible,
    kink_counterexample,
    periodic_solution,
    quadratic_counterexample,
)
from nfg.errors import GameError
from nfg.game_model import constant_slope_spec
from nfg.hj_system import hj_residual
from nfg.utils.config import cfg_get, load_cfg

SCENARIOS = ("constant", "counterexamples", "example2")


def check_constant(L: float, cfg: dict, failures: list[str]) -> None:
    """The nu-limit reproduces p = kappa for constant slopes."""
    for k1, k2 in [(1.0, 2.0), (2.0, 1.0), (-1.0, 2.0)]:
        spec = constant_slope_spec(k1, k2, C=2.0, L=L)
        sol = construct_admissible(spec, nu_max=cfg_get(cfg, "solver.nu_max", 1024))
        err = float(np.max(np.abs(sol.p - [k1, k2])))
        if err > 1e-8:
            failures.append(f"constant ({k1:g}, {k2:g}): max |p - kappa| = {err:.3e}")
        exact = constant_solution(k1, k2, L=L, C=2.0)
        res = float(np.max(np.abs(hj_residual(spec, exact.grid, exact.u, exact.p))))
        if res > 1e-10:
            failures.append(f"constant ({k1:g}, {k2:g}): exact HJ residual = {res:.3e}")
        if not sol.audit.passed:
            failures.append(f"constant ({k1:g}, {k2:g}): audit failed {sol.audit.reasons}")


def check_counterexamples(L: float, cfg: dict, failures: list[str]) -> None:
    for name, build, expected in (
        ("kink", kink_counterexample, ("A3",)),
        ("quadratic", quadratic_counterexample, ("A2",)),
    ):
        _, sol = build(L)
        if sol.audit.reasons != expected:
            failures.append(f"{name} counterexample: expected {expected}, got {sol.audit.reasons}")


def check_example2(L: float, cfg: dict, failures: list[str]) -> None:
    """Three periodic solutions for kappa = 1, pairwise apart."""
    sols = {a: periodic_solution(1.0, a, L=max(L, 20.0), C=2.0) for a in (0.25, 0.5, 0.75)}
    for a, sol in sols.items():
        if sol.meta["closure_error"] >= 1e-6:
            failures.append(f"example2 alpha={a}: closure error {sol.meta['closure_error']:.3e}")
        if not sol.audit.passed:
            failures.append(f"example2 alpha={a}: audit failed {sol.audit.reasons}")
    for (a, sa), (b, sb) in itertools.combinations(sols.items(), 2):
        gap = float(np.max(np.abs(sa.p - sb.p)))
        if gap <= 0.1:
            failures.append(f"example2 alpha={a} vs {b}: sup-distance only {gap:.3e}")


CHECKS = {
    "constant": check_constant,
    "counterexamples": check_counterexamples,
    "example2": check_example2,
}


def parse_args() -> argparse.Namespace:
    p = argparse.ArgumentParser(description="Reproduce the closed-form scenarios")
    p.add_argument("--only", default=",".join(SCENARIOS), help="Comma-separated subset of scenarios")
    p.add_argument("--L", type=float, default=5.0)
    return p.parse_args()


def main():
    args = parse_args()
    cfg = load_cfg()
    selected = [s.strip() for s in args.only.split(",") if s.strip()]
    unknown = [s for s in selected if s not in CHECKS]
    if unknown:
        print(f"[FATAL] unknown scenario(s): {', '.join(unknown)}", file=sys.stderr)
        sys.exit(1)

    print(f"[reproduce] scenarios={','.join(selected)} L={args.L:g}")
    failures: list[str] = []
    for name in selected:
        CHECKS[name](args.L, cfg, failures)
        print(f"[reproduce] {name} done")

    if failures:
        print("\n[REPRODUCE FAIL] One or more scenarios did not reproduce:")
        for i, f in enumerate(failures, 1):
            print(f" {i:02d}. {f}")
        sys.exit(2)

    print("[reproduce] All scenarios reproduced ✔")


if __name__ == "__main__":
    try:
        main()
    except GameError as e:
        print(f"[FATAL][{type(e).__name__}] {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    except Exception as e:
        print(f"[FATAL] {type(e).__name__}: {e}", file=sys.stderr)
        sys.exit(1)
