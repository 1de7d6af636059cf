import json

import pytest

from superfund import verify
from superfund.fundsol import ClassicalFundSeq, nu_super
from superfund.radial import RadialExpr


def test_annihilation_examples():
    assert verify.annihilation_check(3, 1, 1).passed
    for m in (1, 3, 5):
        for k in (1, 2, 3):
            assert verify.annihilation_check(m, 0, k).passed


def _perturbed(m, n, order):
    """Kernel with a_1 replaced by a_1 + 1 (even orders only)."""
    expr = nu_super(m, n, order).expr
    if order % 2 == 0 and n >= 1:
        k = order // 2
        extra = ClassicalFundSeq(m, n)[2 + 2 * k] * RadialExpr.term(m, n, 0, 0, 2 * n - 2)
        expr = expr + extra
    return expr


def test_perturbed_coefficient_fails_with_witness():
    rep = verify.annihilation_check(3, 1, 1, factory=_perturbed)
    assert rep.status == verify.FAIL
    assert rep.witness and rep.witness.startswith("Delta^k")


def test_fail_requires_witness():
    with pytest.raises(ValueError):
        verify.CheckReport("x", {}, verify.FAIL)


def test_default_grid_annihilation():
    reports = verify.annihilation_suite()
    assert len(reports) == 48 and all(r.passed for r in reports)


def test_order_relations():
    assert all(r.passed for r in verify.order_relations_suite())


def test_binomial_bruteforce_and_system():
    assert verify.lemma_bruteforce(30, 30).passed
    assert verify.iterated_system_check(6, 4).passed


def test_expansion_suite():
    assert all(r.passed for r in verify.expansion_suite())


def test_fermionic_obstruction():
    for n in (1, 2, 3):
        rep = verify.fermionic_no_solution(n)
        assert rep.passed and rep.detail["result"] == "UNSAT"
        assert rep.detail["rank_Ab"] == rep.detail["rank_A"] + 1
        assert rep.detail["certificate"]
    one = verify.fermionic_no_solution(1)
    assert one.detail["rank_A"] == 1  # image spanned by constants


def test_fermionic_low_degree_targets():
    sat = verify.fermionic_no_solution(2, verify.xf_squared_target(2), "SAT")
    assert sat.passed and sat.detail["result"] == "SAT"
    assert sat.detail["solution"] == {"1111": "-1/4"}
    # a single pair x`_1 x`_2 is not reachable either: the image is spanned by
    # the symmetric pair sum and constants
    single = verify.fermionic_no_solution(2, {0b0011: 1})
    assert single.detail["result"] == "UNSAT"


def test_laplace_f_matrix_kills_top_degree():
    A = verify.laplace_f_matrix(2)
    assert A.shape == (16, 16)
    assert all(A[15, j] == 0 for j in range(16))


def test_power_rules():
    for m in (1, 2, 3):
        for n in (0, 1, 2):
            assert verify.power_rule_check(m, n).passed


def test_reports_are_stable():
    a = verify.reports_to_json(verify.SUITES["fermionic"](ns=(1, 2)))
    b = verify.reports_to_json(verify.SUITES["fermionic"](ns=(1, 2)))
    assert a == b
    assert "elapsed" not in a
    assert json.loads(a)[0]["status"] == "PASS"
