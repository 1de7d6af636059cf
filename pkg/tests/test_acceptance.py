"""Acceptance criteria 1-10, one test each.

Each test records one ``PASS``/``FAIL`` line; the lines are printed in the
pytest terminal summary.  Run this file directly
(``python tests/test_acceptance.py``) for just these criteria.
"""
import sys
import time

import numpy as np
import pytest

from superfund import berezin, verify
from superfund.fundsol import classical_sequence, generalized_fundsol, helmholtz_sequence, nu_super

LINES = []


def _record(number, title, ok, note=""):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({note})" if note else "")
    LINES.append(line)
    return ok


def _all_pass(reports):
    bad = [r for r in reports if not r.passed]
    return not bad, (bad[0].witness if bad else f"{len(reports)} checks")


def test_criterion_01_exact_annihilation():
    t0 = time.perf_counter()
    ok, note = _all_pass(verify.annihilation_suite(verify.DEFAULT_GRID))
    elapsed = time.perf_counter() - t0
    assert _record(1, "exact annihilation, m<=7 n<=3 k<=3", ok and elapsed < 10,
                   f"{note}, {elapsed:.2f}s")


def test_criterion_02_order_relations():
    ok, note = _all_pass(verify.order_relations_suite(verify.DEFAULT_GRID))
    assert _record(2, "order descent and low-order reductions", ok, note)


def test_criterion_03_oracle_equivalence():
    t0 = time.perf_counter()
    ok, note = _all_pass(verify.oracle_equivalence_suite(m_max=3, n_max=2, degree_max=6, trials=20, seed=0))
    elapsed = time.perf_counter() - t0
    assert _record(3, "radial engine vs coordinates, power rules s<=4", ok and elapsed < 30,
                   f"{note}, {elapsed:.2f}s")


def test_criterion_04_binomial_recurrence():
    rep = verify.lemma_bruteforce(30, 30)
    assert _record(4, "binomial closed form vs recurrence, k,l<=30", rep.passed, rep.witness or "")


def test_criterion_05_linear_system():
    rep = verify.iterated_system_check(6, 4)
    assert _record(5, "weights solve the iterated system, n<=6 k<=4", rep.passed, rep.witness or "")


def test_criterion_06_distributional_delta():
    t0 = time.perf_counter()
    worst = {2: 0.0, 4: 0.0}
    ok = True
    for m, n in [(1, 1), (3, 1), (3, 2)]:
        battery = berezin.default_battery(m, n)
        ok &= len(battery) >= 5
        for order, rtol in ((2, 1e-4), (4, 1e-3)):
            rep = berezin.distributional_check(nu_super(m, n, order), battery, rtol)
            ok &= rep.passed
            worst[order] = max(worst[order], rep.worst.rel_error)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    assert _record(6, "distributional delta, orders 2 and 4", ok,
                   f"worst rel {worst[2]:.1e} / {worst[4]:.1e}, {elapsed:.2f}s")


def test_criterion_07_convolution_residual():
    rho = berezin.gaussian_test_function(1, 1, [
        {"type": "gaussian", "center": [0.3], "width": 0.5, "grassmann_mask": "11", "amplitude": 1.0},
        {"type": "gaussian", "center": [-0.2], "width": 0.4, "grassmann_mask": "00", "amplitude": 0.5}])
    grid = np.linspace(-1.5, 1.5, 31)
    res = berezin.convolution_residual(nu_super(1, 1, 2), rho, grid, h=1e-3)
    assert _record(7, "convolution solves the super Poisson equation, m=1 n=1",
                   res.max_rel <= 1e-3, f"max rel residual {res.max_rel:.1e}")


def test_criterion_08_expansion_ratio():
    ok, note = _all_pass(verify.expansion_suite((3, 5, 7), 3))
    assert _record(8, "binomial expansion proportional to the kernel", ok, note)


def test_criterion_09_fermionic_obstruction():
    reports = [verify.fermionic_no_solution(n) for n in (1, 2, 3)]
    ok = all(r.passed and r.detail["result"] == "UNSAT" and r.detail["certificate"] for r in reports)
    sat = verify.fermionic_no_solution(2, verify.xf_squared_target(2), "SAT")
    ok &= sat.passed and sat.detail["result"] == "SAT"
    assert _record(9, "no purely fermionic fundamental solution; degree-2 target solvable", ok,
                   "ranks " + ", ".join(f"{r.detail['rank_A']}<{r.detail['rank_Ab']}" for r in reports))


def test_criterion_10_generalized_operators():
    ok = True
    for m, n, k in [(1, 1, 1), (3, 1, 1), (3, 2, 2), (5, 3, 1), (7, 2, 3)]:
        ok &= generalized_fundsol(classical_sequence(m, 2 * (n + k)), n, k) == nu_super(m, n, 2 * k).expr
    lam = 1.3
    kernel = generalized_fundsol(helmholtz_sequence(lam), 1, 1)
    rep = berezin.distributional_check(kernel, berezin.default_battery(1, 1), 1e-3,
                                       operator=lambda phi: phi.laplace() + phi.scale(-lam ** 2))
    ok &= rep.passed
    assert _record(10, "generalized construction; super Helmholtz at m=1", ok,
                   f"Helmholtz worst rel {rep.worst.rel_error:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
