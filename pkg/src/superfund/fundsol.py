"""Fundamental solutions of powers of the super Laplace and Dirac operators.

Classical kernels on R^m (odd m) are single radial terms ``r^(2l-m) / gamma``;
the superspace kernels are finite combinations of them with powers of the
fermionic vector variable.  Everything is exact.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from superfund.coefficient import Coefficient, binomial, gamma_half
from superfund.radial import (RadialExpr, radial_dirac, radial_laplace, radial_laplace_b,
                              radial_partial_b)

__all__ = [
    "UnsupportedDimension", "ContractViolation", "FundamentalSolution", "ClassicalFundSeq",
    "GeneralizedSeq", "NumericKernel", "gamma", "nu_classical", "coeff_a_first_order",
    "coeff_a", "coeff_b", "coeff_b_bruteforce", "nu_super", "nu_super_even_closed_form",
    "nu_super_odd_closed_form", "nu2_gamma_form", "nu2_first_order_form",
    "nu1_first_order_form", "expansion_check",
    "generalized_fundsol", "classical_sequence", "helmholtz_sequence",
    "iterated_system_residual",
]


class UnsupportedDimension(ValueError):
    pass


class ContractViolation(ValueError):
    def __init__(self, order: int, detail: str = ""):
        super().__init__(f"sequence contract fails at order {order}" + (f": {detail}" if detail else ""))
        self.order = order


def _require_odd(m: int):
    if m < 1 or m % 2 == 0:
        raise UnsupportedDimension(f"closed forms need odd m >= 1, got m={m}")


def gamma(m: int, l: int) -> Coefficient:
    """Normalizing constant of the classical polyharmonic kernel of order 2l+2.

    ``(-1)^(l+1) (2-m) 4^l l! Gamma(l+2-m/2)/Gamma(2-m/2) * 2 pi^(m/2)/Gamma(m/2)``
    """
    _require_odd(m)
    if l < 0:
        raise ValueError("l must be non-negative")
    ratio = Fraction(1)
    for i in range(l):
        ratio *= Fraction(4 - m + 2 * i, 2)  # Gamma(z+1)/Gamma(z) = z, z = 2 - m/2 + i
    sphere = Coefficient(2, m) / gamma_half(m)  # 2 pi^(m/2) / Gamma(m/2)
    sign = 1 if (l + 1) % 2 == 0 else -1
    return sphere * (sign * (2 - m) * 4 ** l * math.factorial(l) * ratio)


def nu_classical(m: int, order: int, n: int = 0) -> RadialExpr:
    """Classical kernel of ``Delta_b^l`` (order 2l) or ``Delta_b^l d_xb`` (order 2l+1).

    Odd orders are the bosonic Dirac derivative of the next even one.  The
    result is embedded over ``(m, n)`` so it can be combined with fermionic
    factors.
    """
    _require_odd(m)
    if order < 1:
        raise ValueError("order must be >= 1")
    if order % 2 == 0:
        l = order // 2
        return RadialExpr.term(m, n, 2 * l - m, 0, 0, Coefficient(1) / gamma(m, l - 1))
    return radial_partial_b(nu_classical(m, order + 1, n))


class ClassicalFundSeq:
    """Memoized classical sequence for one odd m."""

    def __init__(self, m: int, n: int = 0):
        _require_odd(m)
        self.m = m
        self.n = n
        self._entries: Dict[int, RadialExpr] = {}
        self._lock = threading.Lock()

    def __getitem__(self, order: int) -> RadialExpr:
        with self._lock:
            if order not in self._entries:
                self._entries[order] = nu_classical(self.m, order, self.n)
            return self._entries[order]

    def check_descent(self, max_l: int) -> bool:
        return all(radial_laplace_b(self[2 * l]) == self[2 * l - 2] for l in range(2, max_l + 1))


def coeff_a_first_order(n: int, k: int) -> Fraction:
    """``4^k k! / (n-k)!``, the weights of the Laplace kernel."""
    if not 0 <= k <= n:
        raise ValueError(f"index {k} outside 0..{n}")
    return Fraction(4 ** k * math.factorial(k), math.factorial(n - k))


def coeff_a_recurrence(n: int) -> List[Fraction]:
    """Same weights from ``a_k = 4k(n-k+1) a_{k-1}``, ``a_0 = 1/n!``."""
    a = [Fraction(1, math.factorial(n))]
    for k in range(1, n + 1):
        a.append(4 * k * (n - k + 1) * a[-1])
    return a


def coeff_a(n: int, k: int, l: int) -> Fraction:
    """Weight of ``nu_{2l+2k} xf^(2n-2l)`` in the kernel of ``Delta^k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 <= l <= n:
        raise ValueError(f"index {l} outside 0..{n}")
    return Fraction(4 ** l * math.factorial(l + k - 1),
                    math.factorial(n - l) * math.factorial(k - 1))


def coeff_b(k: int, l: int) -> Fraction:
    return Fraction(math.comb(l + k - 1, l))


def coeff_b_bruteforce(k: int, l: int) -> Fraction:
    """Solve ``sum_j b_{l-j} C(k,j) (-1)^j = 0`` forward from ``b_0 = 1``."""
    b = [Fraction(1)]
    for i in range(1, l + 1):
        s = Fraction(0)
        for j in range(1, min(k, i) + 1):
            s += b[i - j] * math.comb(k, j) * (-1) ** j
        b.append(-s)
    return b[l]


def iterated_system_residual(n: int, k: int, a: Sequence[Fraction]) -> List[Fraction]:
    """Left-hand sides of the linear conditions on ``a_l`` for ``1 <= l <= n``."""
    out = []
    for l in range(1, n + 1):
        s = Fraction(0)
        for j in range(0, k + 1):
            if l - j < 0:
                break
            s += (a[l - j] * math.comb(k, j) * 4 ** j * (-1) ** j
                  * Fraction(math.factorial(n - l + j), math.factorial(n - l))
                  * Fraction(math.factorial(l), math.factorial(l - j)))
        out.append(s)
    return out


@dataclass(frozen=True)
class FundamentalSolution:
    m: int
    n: int
    order: int
    expr: RadialExpr
    provenance: str

    def to_json_obj(self) -> dict:
        obj = self.expr.to_json_obj()
        obj.update(order=self.order, provenance=self.provenance)
        return obj


def _xf_power(m: int, n: int, beta: int) -> RadialExpr:
    return RadialExpr.term(m, n, 0, 0, beta)


def nu_super_even_closed_form(m: int, n: int, k: int) -> RadialExpr:
    """``sum_l a_l nu_{2l+2k} xf^(2n-2l)`` with the polyharmonic weights."""
    seq = ClassicalFundSeq(m, n)
    out = RadialExpr.zero(m, n)
    for l in range(n + 1):
        out = out + (seq[2 * l + 2 * k] * _xf_power(m, n, 2 * n - 2 * l)).scale(coeff_a(n, k, l))
    return out


def odd_weights(n: int, k: int) -> List[Tuple[int, int, int, Fraction]]:
    """Rows (l, classical order, xf power, weight) of the kernel of ``Delta^k d_x``."""
    rows = []
    for l in range(n + 1):
        if l < n:
            rows.append((l, 2 * l + 2 * k + 2, 2 * n - 2 * l - 1,
                         Fraction(2 * 4 ** l * math.factorial(l + k),
                                  math.factorial(n - l - 1) * math.factorial(k))))
        rows.append((l, 2 * l + 2 * k + 1, 2 * n - 2 * l,
                     -Fraction(4 ** l * math.factorial(l + k), math.factorial(n - l) * math.factorial(k))))
    return rows


def nu_super_odd_closed_form(m: int, n: int, k: int) -> RadialExpr:
    """Kernel of ``Delta^k d_x`` written out term by term."""
    seq = ClassicalFundSeq(m, n)
    out = RadialExpr.zero(m, n)
    for _, order, power, w in odd_weights(n, k):
        out = out + (seq[order] * _xf_power(m, n, power)).scale(w)
    return out


def nu2_first_order_form(m: int, n: int) -> RadialExpr:
    """Laplace kernel from the first-order weights ``4^k k!/(n-k)!``."""
    seq = ClassicalFundSeq(m, n)
    out = RadialExpr.zero(m, n)
    for k in range(n + 1):
        out = out + (seq[2 * k + 2] * _xf_power(m, n, 2 * n - 2 * k)).scale(coeff_a_first_order(n, k))
    return out


def nu1_first_order_form(m: int, n: int) -> RadialExpr:
    """Dirac kernel written with the first-order weights."""
    seq = ClassicalFundSeq(m, n)
    out = RadialExpr.zero(m, n)
    for k in range(n):
        w = Fraction(2 * 4 ** k * math.factorial(k), math.factorial(n - k - 1))
        out = out + (seq[2 * k + 2] * _xf_power(m, n, 2 * n - 2 * k - 1)).scale(w)
    for k in range(n + 1):
        out = out - (seq[2 * k + 1] * _xf_power(m, n, 2 * n - 2 * k)).scale(coeff_a_first_order(n, k))
    return out


class DerivationMismatch(AssertionError):
    pass


def nu_super(m: int, n: int, order: int) -> FundamentalSolution:
    """Fundamental solution of ``d_x^order`` on R^(m|2n), m odd.

    Odd orders are computed twice, from the closed form and as the Dirac
    derivative of the next even kernel; the two must agree exactly.
    """
    _require_odd(m)
    if n < 0:
        raise ValueError("n must be non-negative")
    if order < 1:
        raise ValueError("order must be >= 1")
    if order % 2 == 0:
        k = order // 2
        return FundamentalSolution(m, n, order, nu_super_even_closed_form(m, n, k),
                                   "polyharmonic closed form")
    k = (order - 1) // 2
    closed = nu_super_odd_closed_form(m, n, k)
    derived = radial_dirac(nu_super_even_closed_form(m, n, k + 1))
    if closed != derived:
        raise DerivationMismatch(f"odd kernel mismatch at m={m}, n={n}, order={order}")
    return FundamentalSolution(m, n, order, closed, "dirac closed form")


def nu2_gamma_form(m: int, n: int) -> RadialExpr:
    """Laplace kernel for odd m rewritten through Gamma ratios.

    ``Gamma(m/2)/(2(2-m)pi^(m/2)) * sum_k (-1)^(k+1)/(n-k)!
    * Gamma(2-m/2)/Gamma(k+2-m/2) * r^(2k+2-m) xf^(2n-2k)``
    """
    _require_odd(m)
    front = gamma_half(m) / Coefficient(2 * (2 - m), m)
    out = RadialExpr.zero(m, n)
    for k in range(n + 1):
        ratio = gamma_half(4 - m) / gamma_half(2 * k + 4 - m)
        c = front * ratio * Fraction((-1) ** (k + 1), math.factorial(n - k))
        out = out + RadialExpr.term(m, n, 2 * k + 2 - m, 0, 2 * n - 2 * k, c)
    return out


@dataclass
class ExpansionReport:
    m: int
    n: int
    kernel_coeffs: List[Coefficient]
    binomial_coeffs: List[Fraction]
    ratios: List[Coefficient]
    magnitude_ratios: List[Coefficient]
    sign_ratios: List[int]
    passed: bool

    def to_json_obj(self) -> dict:
        return {
            "m": self.m, "n": self.n, "passed": self.passed,
            "ratios": [str(r) for r in self.ratios],
            "magnitude_ratios": [str(r) for r in self.magnitude_ratios],
            "sign_ratios": self.sign_ratios,
        }


def expansion_check(m: int, n: int) -> ExpansionReport:
    """Compare the Laplace kernel with the expansion of ``(x^2)^(1 - M/2)``.

    The expansion gives ``binom(1-M/2, k) xf^(2k) / (xb^2)^(M/2-1+k)``.  With
    ``xb^2 = -r^2`` the factor ``(-1)^(-(M/2-1+k))`` splits into a global phase
    and ``(-1)^k``; the comparison keeps the ``(-1)^k`` and drops the phase.
    Terms are matched on equal powers of r and xf.
    """
    _require_odd(m)
    M = m - 2 * n
    kernel = nu_super(m, n, 2).expr
    top = Fraction(2 - M, 2)
    kc, bc, ratios, mags, signs = [], [], [], [], []
    for k in range(n + 1):
        # r^(-(M - 2 + 2k)) xf^(2k)
        alpha = -(M - 2 + 2 * k)
        c = kernel.terms.get((alpha, 0, 2 * k), Coefficient(0))
        b = binomial(top, k) * (-1) ** k
        kc.append(c)
        bc.append(b)
        if b == 0:
            ratios.append(Coefficient(0))
            mags.append(Coefficient(0))
            signs.append(0)
            continue
        ratio = c / b
        ratios.append(ratio)
        mags.append(Coefficient(abs(c.q) / abs(b), c.pi2))
        signs.append((1 if c.q > 0 else -1 if c.q < 0 else 0) * (1 if b > 0 else -1))
    passed = (all(not r.is_zero() for r in ratios)
              and all(r == ratios[0] for r in ratios)
              and all(g == mags[0] for g in mags)
              and len(set(signs)) == 1)
    return ExpansionReport(m, n, kc, bc, ratios, mags, signs, passed)


# -- generalized operators L + Delta_f ----------------------------------

RadialFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class NumericKernel:
    """Kernel whose coefficient of ``xf^beta`` is a numeric radial function."""
    m: int
    n: int
    sectors: Dict[int, RadialFn]

    def __call__(self, beta: int, r) -> np.ndarray:
        f = self.sectors.get(beta)
        r = np.asarray(r, dtype=float)
        return np.zeros_like(r) if f is None else f(r)

    def scale(self, c: float) -> "NumericKernel":
        return NumericKernel(self.m, self.n,
                             {b: (lambda r, f=f: c * f(r)) for b, f in self.sectors.items()})


@dataclass
class GeneralizedSeq:
    """Caller-supplied kernels ``mu_2, mu_4, ...`` with ``L mu_2k = mu_2k-2``.

    ``entries`` maps the order 2k to a :class:`RadialExpr` (symbolic) or a
    vectorized radial function (numeric).  ``apply_l`` acts on an entry:
    symbolically it returns a RadialExpr, numerically it receives the entry
    and sample radii and returns values there.
    """
    m: int
    entries: Dict[int, Union[RadialExpr, RadialFn]]
    apply_l: Callable
    numeric: bool = False
    rtol: float = 1e-6
    sample_radii: Sequence[float] = field(default_factory=lambda: (0.3, 0.7, 1.1, 1.9, 2.6))

    def check_contract(self, max_order: int):
        for order in range(4, max_order + 1, 2):
            if order not in self.entries or order - 2 not in self.entries:
                raise ContractViolation(order, "missing entry")
            if self.numeric:
                r = np.asarray(self.sample_radii, dtype=float)
                got = self.apply_l(self.entries[order], r)
                want = self.entries[order - 2](r)
                scale = max(1.0, float(np.max(np.abs(want))))
                if not np.all(np.abs(got - want) <= self.rtol * scale):
                    raise ContractViolation(order, f"max deviation {np.max(np.abs(got - want)):.3e}")
            elif self.apply_l(self.entries[order]) != self.entries[order - 2]:
                raise ContractViolation(order)


def generalized_fundsol(seq: GeneralizedSeq, n: int, k: int):
    """``sum_l 4^l (l+k-1)!/((n-l)!(k-1)!) mu_{2l+2k} xf^(2n-2l)`` for ``(L + Delta_f)^k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    top = 2 * (n + k)
    seq.check_contract(top)
    if not seq.numeric:
        out = RadialExpr.zero(seq.m, n)
        for l in range(n + 1):
            e = seq.entries[2 * l + 2 * k]
            lifted = RadialExpr(seq.m, n, e.terms)
            out = out + (lifted * _xf_power(seq.m, n, 2 * n - 2 * l)).scale(coeff_a(n, k, l))
        return out
    sectors = {}
    for l in range(n + 1):
        w = float(coeff_a(n, k, l))
        f = seq.entries[2 * l + 2 * k]
        sectors[2 * n - 2 * l] = (lambda r, f=f, w=w: w * f(r))
    return NumericKernel(seq.m, n, sectors)


def classical_sequence(m: int, max_order: int) -> GeneralizedSeq:
    entries = {o: nu_classical(m, o) for o in range(2, max_order + 1, 2)}
    return GeneralizedSeq(m, entries, radial_laplace_b)


def radial_laplacian_fd(f: RadialFn, r: np.ndarray, m: int, h: float = 1e-4) -> np.ndarray:
    """Bosonic Laplacian ``-(f'' + (m-1) f'/r)`` of a radial function by central differences."""
    fp, f0, fm = f(r + h), f(r), f(r - h)
    d2 = (fp - 2 * f0 + fm) / h ** 2
    d1 = (fp - fm) / (2 * h)
    return -(d2 + (m - 1) * d1 / r)


def helmholtz_sequence(lam: float, m: int = 1) -> GeneralizedSeq:
    """Kernels of ``(Delta_b - lam^2)^k`` on the line, k = 1, 2.

    ``mu_2 = -sin(lam r)/(2 lam)`` and
    ``mu_4 = (sin(lam r) - lam r cos(lam r))/(4 lam^3)``; the second has zero
    slope at the origin so that applying the operator produces no extra
    point mass.
    """
    if m != 1:
        raise UnsupportedDimension("Helmholtz kernels are provided for m = 1 only")
    lam = float(lam)

    def mu2(r):
        return -np.sin(lam * r) / (2 * lam)

    def mu4(r):
        return (np.sin(lam * r) - lam * r * np.cos(lam * r)) / (4 * lam ** 3)

    def apply_l(f, r):
        return radial_laplacian_fd(f, r, m) - lam ** 2 * f(r)

    return GeneralizedSeq(m, {2: mu2, 4: mu4}, apply_l, numeric=True, rtol=1e-6)
