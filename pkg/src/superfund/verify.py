"""Verification suites: exact annihilation, order relations, oracle equivalence
between the radial calculus and coordinates, the b_l closed form, and the
purely fermionic obstruction.
"""
from __future__ import annotations

import itertools
import json
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import sympy

from superfund import core_algebra as ca
from superfund.coefficient import Coefficient
from superfund.fundsol import (coeff_a, coeff_b, coeff_b_bruteforce, iterated_system_residual,
                               nu_super, nu_super_even_closed_form, nu_super_odd_closed_form,
                               coeff_a_first_order, expansion_check,
                               nu1_first_order_form, nu2_first_order_form)
from superfund.radial import (RadialExpr, radial_dirac, radial_laplace, radial_laplace_b,
                              radial_laplace_f, radial_multiply, to_coordinates)

PASS, FAIL = "PASS", "FAIL"

DEFAULT_GRID = {"m": (1, 3, 5, 7), "n": (0, 1, 2, 3), "k": (1, 2, 3)}


@dataclass
class CheckReport:
    check_id: str
    params: dict
    status: str
    witness: Optional[str] = None
    cost: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in (PASS, FAIL):
            raise ValueError(f"bad status {self.status!r}")
        if self.status == FAIL and not self.witness:
            raise ValueError("a failing check must carry a witness")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_json_obj(self, timing: bool = False) -> dict:
        cost = dict(self.cost)
        if not timing:
            cost.pop("elapsed", None)
        return {"check": self.check_id, "params": self.params, "status": self.status,
                "witness": self.witness, "cost": cost, "detail": self.detail}


def reports_to_json(reports: Sequence[CheckReport], timing: bool = False) -> str:
    return json.dumps([r.to_json_obj(timing) for r in reports], sort_keys=True, indent=1)


def _first_term(expr: RadialExpr) -> str:
    (alpha, xvec, beta), c = expr.sorted_terms()[0]
    return f"({c}) r^{alpha} xb^{xvec} xf^{beta}"


def _iter_grid(grid) -> Iterable[Tuple[int, int, int]]:
    grid = grid or DEFAULT_GRID
    return itertools.product(grid["m"], grid["n"], grid["k"])


KernelFactory = Callable[[int, int, int], RadialExpr]


def _default_factory(m: int, n: int, order: int) -> RadialExpr:
    return nu_super(m, n, order).expr


def annihilation_check(m: int, n: int, k: int, factory: KernelFactory = _default_factory) -> CheckReport:
    t0 = time.perf_counter()
    even = factory(m, n, 2 * k)
    e = even
    for _ in range(k):
        e = radial_laplace(e)
    odd = factory(m, n, 2 * k + 1)
    o = odd
    for _ in range(2 * k + 1):
        o = radial_dirac(o)
    cost = {"elapsed": time.perf_counter() - t0,
            "terms": len(even.terms) + len(odd.terms)}
    params = {"m": m, "n": n, "k": k}
    if not e.is_zero():
        return CheckReport("annihilation", params, FAIL, "Delta^k: " + _first_term(e), cost)
    if not o.is_zero():
        return CheckReport("annihilation", params, FAIL, "d_x^(2k+1): " + _first_term(o), cost)
    return CheckReport("annihilation", params, PASS, cost=cost)


def annihilation_suite(grid=None, factory: KernelFactory = _default_factory) -> List[CheckReport]:
    return [annihilation_check(m, n, k, factory) for m, n, k in _iter_grid(grid)]


def order_relations_suite(grid=None) -> List[CheckReport]:
    """Delta nu_2k = nu_2k-2, d_x nu_2k+2 = nu_2k+1, and the k = 1 / k = 0 reductions."""
    out = []
    for m, n, k in _iter_grid(grid):
        t0 = time.perf_counter()
        params = {"m": m, "n": n, "k": k}
        witness = None
        even = nu_super(m, n, 2 * k).expr
        if k >= 2:
            diff = radial_laplace(even) - nu_super(m, n, 2 * k - 2).expr
            if not diff.is_zero():
                witness = "Delta descent: " + _first_term(diff)
        if witness is None:
            diff = radial_dirac(nu_super(m, n, 2 * k + 2).expr) - nu_super(m, n, 2 * k + 1).expr
            if not diff.is_zero():
                witness = "Dirac descent: " + _first_term(diff)
        if witness is None and k == 1:
            diff = nu2_first_order_form(m, n) - even
            if not diff.is_zero():
                witness = "k=1 reduction: " + _first_term(diff)
        if witness is None and k == 1:
            first = nu1_first_order_form(m, n)
            diff = nu_super_odd_closed_form(m, n, 0) - first
            if diff.is_zero():
                diff = radial_dirac(nu2_first_order_form(m, n)) - first
            if not diff.is_zero():
                witness = "k=0 Dirac reduction: " + _first_term(diff)
        cost = {"elapsed": time.perf_counter() - t0, "terms": len(even.terms)}
        out.append(CheckReport("order_relations", params, FAIL if witness else PASS, witness, cost))
    return out


def iterated_system_check(n_max: int = 6, k_max: int = 4) -> CheckReport:
    t0 = time.perf_counter()
    for n in range(0, n_max + 1):
        for k in range(1, k_max + 1):
            a = [coeff_a(n, k, l) for l in range(n + 1)]
            res = iterated_system_residual(n, k, a)
            for l, v in enumerate(res, start=1):
                if v != 0:
                    return CheckReport("linear_system", {"n_max": n_max, "k_max": k_max}, FAIL,
                                       f"n={n} k={k} l={l}: residual {v}",
                                       {"elapsed": time.perf_counter() - t0})
    return CheckReport("linear_system", {"n_max": n_max, "k_max": k_max}, PASS,
                       cost={"elapsed": time.perf_counter() - t0})


def lemma_bruteforce(k_max: int = 30, l_max: int = 30) -> CheckReport:
    t0 = time.perf_counter()
    params = {"k_max": k_max, "l_max": l_max}
    for k in range(1, k_max + 1):
        for l in range(0, l_max + 1):
            if coeff_b(k, l) != coeff_b_bruteforce(k, l):
                return CheckReport("lemma", params, FAIL,
                                   f"k={k} l={l}: {coeff_b(k, l)} != {coeff_b_bruteforce(k, l)}",
                                   {"elapsed": time.perf_counter() - t0})
    return CheckReport("lemma", params, PASS,
                       cost={"elapsed": time.perf_counter() - t0, "pairs": k_max * (l_max + 1)})


def expansion_suite(ms: Sequence[int] = (3, 5, 7), n_max: int = 3) -> List[CheckReport]:
    out = []
    for m in ms:
        for n in range(n_max + 1):
            rep = expansion_check(m, n)
            witness = None if rep.passed else "ratios " + ", ".join(str(r) for r in rep.ratios)
            out.append(CheckReport("expansion_proportionality", {"m": m, "n": n},
                                   PASS if rep.passed else FAIL, witness,
                                   detail={"ratio": str(rep.ratios[0])}))
    return out


# -- purely fermionic obstruction ----------------------------------------

def laplace_f_matrix(n: int) -> sympy.Matrix:
    """Matrix of Delta_f on the Grassmann basis, columns indexed by input mask."""
    dim = 1 << (2 * n)
    A = sympy.zeros(dim, dim)
    for mask in range(dim):
        el = ca.SuperElement(0, n, {((), mask, 0, (0,) * 2 * n): Coefficient(1)})
        for g, c in ca.laplace_fermionic(el).grassmann_sectors().items():
            A[g, mask] += sympy.Rational(c.q.numerator, c.q.denominator)
    return A


def fermionic_no_solution(n: int, target: Optional[Dict[int, Fraction]] = None,
                          expect: Optional[str] = None) -> CheckReport:
    """Decide whether ``Delta_f g = target`` has a Grassmann polynomial solution.

    The default target is ``x`_1 ... x`_2n``.  UNSAT comes with ranks and a
    left null vector y (``y A = 0``, ``y . target != 0``); SAT comes with g.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    t0 = time.perf_counter()
    dim = 1 << (2 * n)
    if target is None:
        target = {dim - 1: Fraction(1)}
        expect = expect or "UNSAT"
    A = laplace_f_matrix(n)
    b = sympy.zeros(dim, 1)
    for mask, c in target.items():
        b[mask] = sympy.Rational(Fraction(c).numerator, Fraction(c).denominator)
    rank_a = A.rank()
    rank_ab = A.row_join(b).rank()
    params = {"n": n, "target": {ca._bits(k, 2 * n): str(Fraction(v)) for k, v in sorted(target.items())}}
    detail = {"dim": dim, "rank_A": int(rank_a), "rank_Ab": int(rank_ab)}
    if rank_ab > rank_a:
        result = "UNSAT"
        y = None
        for v in A.T.nullspace():
            if (v.T * b)[0] != 0:
                y = v
                break
        ok = y is not None and all(x == 0 for x in (y.T * A))
        detail["certificate"] = {ca._bits(i, 2 * n): str(y[i]) for i in range(dim) if y[i] != 0} if y is not None else None
    else:
        result = "SAT"
        sol, params_free = A.gauss_jordan_solve(b)
        sol = sol.subs({p: 0 for p in params_free})
        ok = (A * sol - b).is_zero_matrix
        detail["solution"] = {ca._bits(i, 2 * n): str(sol[i]) for i in range(dim) if sol[i] != 0}
    detail["result"] = result
    cost = {"elapsed": time.perf_counter() - t0, "dim": dim}
    witness = None
    if not ok:
        witness = "certificate failed verification"
    elif expect is not None and result != expect:
        witness = f"expected {expect}, got {result}"
    return CheckReport("fermionic_no_solution", params, FAIL if witness else PASS, witness, cost, detail)


def xf_squared_target(n: int) -> Dict[int, Fraction]:
    """``xf^2 = sum_j x`_{2j-1} x`_{2j}`` as a mask map."""
    return {3 << (2 * j): Fraction(1) for j in range(n)}


# -- oracle equivalence ---------------------------------------------------

def _single_terms(m: int, n: int, degree_max: int):
    for alpha in range(0, degree_max + 1, 2):
        for xvec in (0, 1):
            for beta in range(2 * n + 1):
                yield RadialExpr.term(m, n, alpha, xvec, beta)


def _random_radial(rng: random.Random, m: int, n: int, alphas: Sequence[int], size: int) -> RadialExpr:
    out = RadialExpr.zero(m, n)
    for _ in range(size):
        c = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        out = out + RadialExpr.term(m, n, rng.choice(alphas), rng.randint(0, 1),
                                    rng.randint(0, 2 * n), c)
    return out


def _compare(check_id, params, pairs, t0) -> CheckReport:
    for label, left, right in pairs:
        if left != right:
            return CheckReport(check_id, params, FAIL, label, {"elapsed": time.perf_counter() - t0})
    return CheckReport(check_id, params, PASS, cost={"elapsed": time.perf_counter() - t0,
                                                      "comparisons": len(pairs)})


def power_rule_check(m: int, n: int, s_max: int = 4) -> CheckReport:
    """d_x x^(2s) = 2s x^(2s-1), d_x x^(2s+1) = (M+2s) x^(2s), in both engines."""
    t0 = time.perf_counter()
    M = m - 2 * n
    x = ca.vector_variable(m, n)
    powers = [ca.SuperElement.one(m, n)]
    for _ in range(2 * s_max + 1):
        powers.append(powers[-1] * x)
    xr = RadialExpr.term(m, n, 0, 1, 0) + RadialExpr.term(m, n, 0, 0, 1)
    rpowers = [RadialExpr.term(m, n)]
    for _ in range(2 * s_max + 1):
        rpowers.append(radial_multiply(rpowers[-1], xr))
    pairs = []
    for s in range(s_max + 1):
        if s:
            pairs.append((f"coordinates, even s={s}", ca.dirac(powers[2 * s]), powers[2 * s - 1] * (2 * s)))
            pairs.append((f"radial, even s={s}", radial_dirac(rpowers[2 * s]), rpowers[2 * s - 1].scale(2 * s)))
        pairs.append((f"coordinates, odd s={s}", ca.dirac(powers[2 * s + 1]), powers[2 * s] * (M + 2 * s)))
        pairs.append((f"radial, odd s={s}", radial_dirac(rpowers[2 * s + 1]), rpowers[2 * s].scale(M + 2 * s)))
    for k in range(2 * s_max + 2):
        pairs.append((f"radial power {k} expands correctly", to_coordinates(rpowers[k]), powers[k]))
    return _compare("power_rules", {"m": m, "n": n, "s_max": s_max}, pairs, t0)


def oracle_equivalence_suite(m_max: int = 3, n_max: int = 2, degree_max: int = 6,
                             trials: int = 20, seed: int = 0) -> List[CheckReport]:
    rng = random.Random(seed)
    out = []
    for m in range(1, m_max + 1):
        for n in range(0, n_max + 1):
            t0 = time.perf_counter()
            pairs = []
            for t in _single_terms(m, n, degree_max):
                coords = to_coordinates(t)
                label = _first_term(t)
                pairs.append(("dirac " + label, to_coordinates(radial_dirac(t)), ca.dirac(coords)))
                pairs.append(("laplace " + label, to_coordinates(radial_laplace(t)), ca.laplace(coords)))
                pairs.append(("dirac^2 " + label, ca.dirac(ca.dirac(coords)), ca.laplace(coords)))
            for i in range(trials):
                f = _random_radial(rng, m, n, range(0, degree_max + 1, 2), 4)
                g = _random_radial(rng, m, n, range(-9, degree_max + 1), 4)
                pairs.append((f"random polynomial {i}", to_coordinates(radial_dirac(f)),
                               ca.dirac(to_coordinates(f))))
                pairs.append((f"random product {i}", to_coordinates(radial_multiply(f, f)),
                               to_coordinates(f) * to_coordinates(f)))
                pairs.append((f"random dirac^2 {i}", radial_dirac(radial_dirac(g)), radial_laplace(g)))
                pairs.append((f"random commute {i}", radial_laplace_b(radial_laplace_f(g)),
                              radial_laplace_f(radial_laplace_b(g))))
            out.append(_compare("oracle_equivalence",
                                {"m": m, "n": n, "degree_max": degree_max, "trials": trials, "seed": seed},
                                pairs, t0))
            out.append(power_rule_check(m, n))
    return out


SUITES = {
    "annihilation": lambda **kw: annihilation_suite(kw.get("grid")),
    "orders": lambda **kw: order_relations_suite(kw.get("grid")),
    "oracle": lambda **kw: oracle_equivalence_suite(seed=kw.get("seed", 0),
                                                    trials=kw.get("trials", 20)),
    "lemma": lambda **kw: [lemma_bruteforce(kw.get("k_max", 30), kw.get("l_max", 30))],
    "system": lambda **kw: [iterated_system_check()],
    "expansion": lambda **kw: expansion_suite(),
    "fermionic": lambda **kw: [fermionic_no_solution(n) for n in kw.get("ns", (1, 2, 3))]
    + [fermionic_no_solution(n, xf_squared_target(n), "SAT") for n in kw.get("ns", (1, 2, 3)) if n >= 2],
}
