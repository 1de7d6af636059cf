"""Closed-form calculus on sums of ``c * r^alpha * xb^eps * xf^beta``.

Here ``xb`` is the bosonic vector variable (``xb^2 = -r^2``), ``xf`` the
fermionic one (``xf^(2n+1) = 0``) and ``xb xf = -xf xb``.  Every kernel built
in :mod:`superfund.fundsol` lives in this span.  The rewrite rules are checked
against :mod:`superfund.core_algebra` on polynomial inputs by the test suite.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Dict, Iterable, Tuple

import numpy as np

from superfund import core_algebra as ca
from superfund.coefficient import Coefficient, format_rational

__all__ = [
    "RadialExpr", "NotExpandable", "SingularPoint", "radial_multiply", "radial_dirac",
    "radial_laplace_b", "radial_laplace_f", "radial_laplace", "radial_partial_b",
    "radial_partial_f", "to_coordinates", "eval_numeric",
]

Key = Tuple[int, int, int]  # (alpha, xvec, beta)


class NotExpandable(ValueError):
    """The expression has a non-polynomial power of r."""


class SingularPoint(ValueError):
    """Evaluation at the origin of a term with negative power of r."""


class RadialExpr:
    """Immutable sum of radial terms over a fixed ``(m, n)``."""

    __slots__ = ("m", "n", "terms")

    def __init__(self, m: int, n: int, terms: Dict[Key, Coefficient] | None = None):
        self.m = m
        self.n = n
        clean = {}
        for (alpha, xvec, beta), c in (terms or {}).items():
            if not isinstance(c, Coefficient):
                c = Coefficient(c)
            if c.is_zero() or beta > 2 * n:
                continue
            if beta < 0 or xvec not in (0, 1):
                raise ValueError(f"malformed radial term {(alpha, xvec, beta)}")
            clean[(int(alpha), int(xvec), int(beta))] = c
        self.terms = clean

    @classmethod
    def term(cls, m: int, n: int, alpha: int = 0, xvec: int = 0, beta: int = 0,
             c=1) -> "RadialExpr":
        return cls(m, n, {(alpha, xvec, beta): c if isinstance(c, Coefficient) else Coefficient(c)})

    @classmethod
    def zero(cls, m: int, n: int) -> "RadialExpr":
        return cls(m, n)

    def _check(self, other: "RadialExpr"):
        if (self.m, self.n) != (other.m, other.n):
            raise ca.DimensionMismatch(
                f"radial expressions over ({self.m},{self.n}) and ({other.m},{other.n})")

    def __add__(self, other):
        if isinstance(other, (int, Fraction, Coefficient)):
            other = RadialExpr.term(self.m, self.n, c=other)
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return RadialExpr(self.m, self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return RadialExpr(self.m, self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RadialExpr):
            return radial_multiply(self, other)
        if isinstance(other, (int, Fraction, Coefficient)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Coefficient)):
            return self.scale(other)
        return NotImplemented

    def scale(self, c) -> "RadialExpr":
        return RadialExpr(self.m, self.n, {k: v * c for k, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, RadialExpr):
            return NotImplemented
        return (self.m, self.n) == (other.m, other.n) and self.terms == other.terms

    def __hash__(self):
        return hash((self.m, self.n, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __repr__(self):
        return f"RadialExpr(m={self.m}, n={self.n}, {self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (alpha, xvec, beta), c in self.sorted_terms():
            s = f"({c})"
            if alpha:
                s += f"*r^{alpha}"
            if xvec:
                s += "*xb"
            if beta:
                s += f"*xf^{beta}"
            parts.append(s)
        return " + ".join(parts)

    # -- serialization ------------------------------------------------
    def to_json_obj(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "terms": [{"q": format_rational(c.q), "pi_pow": c.pi2, "alpha": a,
                       "xvec": x, "beta": b}
                      for (a, x, b), c in self.sorted_terms()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RadialExpr":
        return cls(obj["m"], obj["n"], {
            (t["alpha"], t["xvec"], t["beta"]): Coefficient(Fraction(t["q"]), t["pi_pow"])
            for t in obj["terms"]})

    @classmethod
    def from_json(cls, text: str) -> "RadialExpr":
        return cls.from_json_obj(json.loads(text))


def _accumulate(out: Dict[Key, Coefficient], key: Key, c: Coefficient):
    if c.is_zero():
        return
    out[key] = out[key] + c if key in out else c


def radial_multiply(a: RadialExpr, b: RadialExpr) -> RadialExpr:
    """Graded product: ``xf^beta xb = (-1)^beta xb xf^beta`` and ``xb^2 = -r^2``."""
    a._check(b)
    out: Dict[Key, Coefficient] = {}
    for (a1, e1, b1), c1 in a.terms.items():
        for (a2, e2, b2), c2 in b.terms.items():
            beta = b1 + b2
            if beta > 2 * a.n:
                continue
            c = c1 * c2
            if b1 & 1 and e2:
                c = -c
            alpha = a1 + a2
            if e1 and e2:
                c = -c
                alpha += 2
            _accumulate(out, (alpha, e1 ^ e2, beta), c)
    return RadialExpr(a.m, a.n, out)


def radial_partial_b(f: RadialExpr) -> RadialExpr:
    """``sum_j e_j d/dx_j`` (the bosonic Dirac operator, no sign)."""
    m = f.m
    out: Dict[Key, Coefficient] = {}
    for (alpha, xvec, beta), c in f.terms.items():
        if xvec:
            # d_xb(r^a xb) = -(a + m) r^a
            _accumulate(out, (alpha, 0, beta), c * (-(alpha + m)))
        else:
            # d_xb(r^a) = a r^(a-2) xb
            _accumulate(out, (alpha - 2, 1, beta), c * alpha)
    return RadialExpr(f.m, f.n, out)


def _fermionic_power_derivative(beta: int, n: int) -> int:
    # d_xf(xf^(2s)) = 2s xf^(2s-1);  d_xf(xf^(2s+1)) = (2s - 2n) xf^(2s)
    if beta % 2 == 0:
        return beta
    return beta - 1 - 2 * n


def radial_partial_f(f: RadialExpr) -> RadialExpr:
    """Fermionic Dirac operator; its generators anticommute past ``xb``."""
    out: Dict[Key, Coefficient] = {}
    for (alpha, xvec, beta), c in f.terms.items():
        if beta == 0:
            continue
        k = _fermionic_power_derivative(beta, f.n)
        if xvec:
            k = -k
        _accumulate(out, (alpha, xvec, beta - 1), c * k)
    return RadialExpr(f.m, f.n, out)


def radial_dirac(f: RadialExpr) -> RadialExpr:
    """Super Dirac operator ``d_xf - d_xb``."""
    return radial_partial_f(f) - radial_partial_b(f)


def radial_laplace_b(f: RadialExpr) -> RadialExpr:
    """``-sum d^2/dx_j^2`` acting on the radial factor."""
    m = f.m
    out: Dict[Key, Coefficient] = {}
    for (alpha, xvec, beta), c in f.terms.items():
        if xvec:
            k = -alpha * (alpha + m)
        else:
            k = -alpha * (alpha + m - 2)
        _accumulate(out, (alpha - 2, xvec, beta), c * k)
    return RadialExpr(f.m, f.n, out)


def radial_laplace_f(f: RadialExpr) -> RadialExpr:
    """``4 sum d/dx`_{2j-1} d/dx`_{2j}`` acting on powers of ``xf``."""
    n = f.n
    out: Dict[Key, Coefficient] = {}
    for (alpha, xvec, beta), c in f.terms.items():
        if beta < 2:
            continue
        k = _fermionic_power_derivative(beta, n) * _fermionic_power_derivative(beta - 1, n)
        _accumulate(out, (alpha, xvec, beta - 2), c * k)
    return RadialExpr(f.m, f.n, out)


def radial_laplace(f: RadialExpr) -> RadialExpr:
    return radial_laplace_b(f) + radial_laplace_f(f)


def to_coordinates(f: RadialExpr, degree_bound: int = ca.DEFAULT_DEGREE_BOUND) -> ca.SuperElement:
    """Expand a polynomial radial expression into coordinates."""
    m, n = f.m, f.n
    r2 = ca.radius_squared(m, n)
    xb = ca.bosonic_vector(m, n)
    xf = ca.fermionic_vector(m, n)
    out = ca.SuperElement(m, n, degree_bound=degree_bound)
    for (alpha, xvec, beta), c in f.sorted_terms():
        if alpha < 0 or alpha % 2:
            raise NotExpandable(f"r^{alpha} is not a polynomial")
        t = ca.SuperElement.scalar(m, n, c)
        t.degree_bound = degree_bound
        t = t * (r2 ** (alpha // 2))
        if xvec:
            t = t * xb
        t = t * (xf ** beta)
        out = out + t
    return out


def eval_numeric(f: RadialExpr, point) -> Dict[Tuple[int, int], object]:
    """Numeric value per ``(xvec, beta)`` sector at a point of R^m.

    Scalar sectors map to floats; ``xvec`` sectors map to the m-vector of
    components multiplying ``e_1 .. e_m``.
    """
    p = np.asarray(point, dtype=float).reshape(-1)
    if p.shape[0] != f.m:
        raise ca.DimensionMismatch(f"point has {p.shape[0]} coordinates, expected {f.m}")
    r = float(np.sqrt(np.dot(p, p)))
    out: Dict[Tuple[int, int], object] = {}
    for (alpha, xvec, beta), c in f.sorted_terms():
        if r == 0.0 and alpha < 0:
            raise SingularPoint(f"r^{alpha} is singular at the origin")
        v = float(c) * (r ** alpha if alpha else 1.0)
        key = (xvec, beta)
        if xvec:
            out[key] = out.get(key, np.zeros(f.m)) + v * p
        else:
            out[key] = out.get(key, 0.0) + v
    return out


def from_terms(m: int, n: int, rows: Iterable[Tuple[int, int, int, Coefficient]]) -> RadialExpr:
    out: Dict[Key, Coefficient] = {}
    for alpha, xvec, beta, c in rows:
        _accumulate(out, (alpha, xvec, beta), c)
    return RadialExpr(m, n, out)


def pi_float(pi2: int) -> float:
    return math.pi ** (pi2 / 2)
