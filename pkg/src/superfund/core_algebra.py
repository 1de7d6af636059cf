"""Coordinate-level elements of the superspace algebra.

An element is a finite sum of monomials

    x^a  *  x`_{i1} ... x`_{ik}  *  e_{j1} ... e_{jl}  *  e`_1^{w1} ... e`_{2n}^{w2n}

with exact coefficients.  The commuting variables ``x_i`` commute with
everything, the Grassmann variables ``x`_j`` anticommute among themselves and
commute with every Clifford generator, the orthogonal generators satisfy
``e_j e_k + e_k e_j = -2 delta_jk``, the symplectic generators pair up as
``e`_{2j-1} e`_{2j} - e`_{2j} e`_{2j-1} = 1`` (all other symplectic pairs
commute), and ``e_j`` anticommutes with every ``e`_k``.

Symplectic words are kept in ascending normal order; the Weyl part is
infinite dimensional, so products whose symplectic degree exceeds
``degree_bound`` are refused.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Tuple

from superfund.coefficient import Coefficient, format_rational

__all__ = [
    "DEFAULT_DEGREE_BOUND", "DimensionMismatch", "EmptyAlgebra",
    "DegreeBoundExceeded", "SuperElement", "multiply", "vector_variable",
    "partial_bosonic", "partial_fermionic", "dirac", "laplace",
    "laplace_bosonic", "laplace_fermionic", "grassmann_sign",
]

DEFAULT_DEGREE_BOUND = 16

# (x_exp, g_mask, e_mask, w_exp)
Monomial = Tuple[Tuple[int, ...], int, int, Tuple[int, ...]]


class DimensionMismatch(ValueError):
    pass


class EmptyAlgebra(ValueError):
    pass


class DegreeBoundExceeded(ValueError):
    pass


def _popcount(v: int) -> int:
    return bin(v).count("1")


def grassmann_sign(left: int, right: int) -> int:
    """Sign of reordering ``left * right`` (two sorted odd words) into one sorted word."""
    swaps = 0
    r = right
    while r:
        low = r & -r
        j = low.bit_length() - 1
        swaps += _popcount(left >> (j + 1))
        r ^= low
    return -1 if swaps & 1 else 1


@lru_cache(maxsize=None)
def _weyl_pair(p1: int, q1: int, p2: int, q2: int) -> Tuple[Tuple[int, int, int], ...]:
    # (a^p1 b^q1)(a^p2 b^q2) with ab - ba = 1:
    # b^q a^p = sum_k C(q,k) C(p,k) k! (-1)^k a^(p-k) b^(q-k)
    out = []
    for k in range(min(q1, p2) + 1):
        c = math.comb(q1, k) * math.comb(p2, k) * math.factorial(k)
        if k & 1:
            c = -c
        out.append((c, p1 + p2 - k, q1 + q2 - k))
    return tuple(out)


@lru_cache(maxsize=200_000)
def _monomial_product(a: Monomial, b: Monomial) -> Tuple[Tuple[int, Monomial], ...]:
    xa, ga, ea, wa = a
    xb, gb, eb, wb = b
    if ga & gb:
        return ()
    sign = grassmann_sign(ga, gb)
    # move W_a to the right of E_b: each e` anticommutes with each e
    if (sum(wa) * _popcount(eb)) & 1:
        sign = -sign
    # orthogonal blade product, e_j^2 = -1
    sign *= grassmann_sign(ea, eb)
    if _popcount(ea & eb) & 1:
        sign = -sign
    x = tuple(i + j for i, j in zip(xa, xb))
    g = ga | gb
    e = ea ^ eb
    # symplectic part: independent Weyl pairs
    words: List[Tuple[int, Tuple[int, ...]]] = [(sign, ())]
    for j in range(0, len(wa), 2):
        pair = _weyl_pair(wa[j], wa[j + 1], wb[j], wb[j + 1])
        words = [(c * cp, w + (p, q)) for c, w in words for cp, p, q in pair]
    return tuple((c, (x, g, e, w)) for c, w in words)


class SuperElement:
    """Immutable exact element of the algebra over a fixed ``(m, n)``."""

    __slots__ = ("m", "n", "terms", "degree_bound")

    def __init__(self, m: int, n: int, terms: Dict[Monomial, Coefficient] | None = None,
                 degree_bound: int = DEFAULT_DEGREE_BOUND):
        self.m = m
        self.n = n
        self.degree_bound = degree_bound
        clean = {}
        for k, c in (terms or {}).items():
            if not isinstance(c, Coefficient):
                c = Coefficient(c)
            if not c.is_zero():
                clean[k] = c
        self.terms = clean

    # -- constructors -------------------------------------------------
    def _unit_key(self, x=None, g=0, e=0, w=None) -> Monomial:
        return (tuple(x or (0,) * self.m), g, e, tuple(w or (0,) * (2 * self.n)))

    @classmethod
    def scalar(cls, m: int, n: int, value=1) -> "SuperElement":
        el = cls(m, n)
        return cls(m, n, {el._unit_key(): Coefficient(value) if not isinstance(value, Coefficient) else value})

    @classmethod
    def one(cls, m: int, n: int) -> "SuperElement":
        return cls.scalar(m, n, 1)

    @classmethod
    def x(cls, m: int, n: int, i: int) -> "SuperElement":
        """Commuting variable ``x_i`` (1-based)."""
        _check_index(i, m, "x")
        exp = [0] * m
        exp[i - 1] = 1
        return cls(m, n, {(tuple(exp), 0, 0, (0,) * 2 * n): Coefficient(1)})

    @classmethod
    def grassmann(cls, m: int, n: int, j: int) -> "SuperElement":
        """Anticommuting variable ``x`_j`` (1-based, j <= 2n)."""
        _check_index(j, 2 * n, "x`")
        return cls(m, n, {((0,) * m, 1 << (j - 1), 0, (0,) * 2 * n): Coefficient(1)})

    @classmethod
    def e(cls, m: int, n: int, i: int) -> "SuperElement":
        _check_index(i, m, "e")
        return cls(m, n, {((0,) * m, 0, 1 << (i - 1), (0,) * 2 * n): Coefficient(1)})

    @classmethod
    def e_symplectic(cls, m: int, n: int, j: int) -> "SuperElement":
        _check_index(j, 2 * n, "e`")
        w = [0] * (2 * n)
        w[j - 1] = 1
        return cls(m, n, {((0,) * m, 0, 0, tuple(w)): Coefficient(1)})

    # -- arithmetic ---------------------------------------------------
    def _same_space(self, other: "SuperElement"):
        if (self.m, self.n) != (other.m, other.n):
            raise DimensionMismatch(
                f"elements over R^({self.m}|{2 * self.n}) and R^({other.m}|{2 * other.n})")

    def _coerce(self, other) -> "SuperElement":
        if isinstance(other, SuperElement):
            self._same_space(other)
            return other
        if isinstance(other, (int, Fraction, Coefficient)):
            return SuperElement.scalar(self.m, self.n, other)
        raise TypeError(f"cannot combine SuperElement with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return SuperElement(self.m, self.n, out, self.degree_bound)

    __radd__ = __add__

    def __neg__(self):
        return SuperElement(self.m, self.n, {k: -c for k, c in self.terms.items()},
                            self.degree_bound)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, SuperElement):
            return multiply(self, other)
        if isinstance(other, (int, Fraction, Coefficient)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Coefficient)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int):
        out = SuperElement.one(self.m, self.n)
        for _ in range(k):
            out = multiply(out, self)
        return out

    def scale(self, c) -> "SuperElement":
        return SuperElement(self.m, self.n, {k: v * c for k, v in self.terms.items()},
                            self.degree_bound)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SuperElement.scalar(self.m, self.n, other)
        if not isinstance(other, SuperElement):
            return NotImplemented
        return (self.m, self.n) == (other.m, other.n) and self.terms == other.terms

    def __hash__(self):
        return hash((self.m, self.n, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        return f"SuperElement(m={self.m}, n={self.n}, {len(self.terms)} terms)"

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})*{_monomial_str(k)}" for k, c in sorted(self.terms.items()))

    def grassmann_sectors(self) -> Dict[int, Coefficient]:
        """Map Grassmann mask -> coefficient for a constant, Clifford-free element."""
        out = {}
        for (x, g, e, w), c in self.terms.items():
            if any(x) or e or any(w):
                raise ValueError("element is not a pure Grassmann constant")
            out[g] = c
        return out

    # -- serialization ------------------------------------------------
    def to_json_obj(self) -> dict:
        rows = []
        for (x, g, e, w), c in sorted(self.terms.items()):
            rows.append({
                "q": format_rational(c.q),
                "pi_pow": c.pi2,
                "x_exp": list(x),
                "g_mask": _bits(g, 2 * self.n),
                "e_mask": _bits(e, self.m),
                "w_exp": list(w),
            })
        return {"m": self.m, "n": self.n, "terms": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SuperElement":
        m, n = obj["m"], obj["n"]
        terms = {}
        for row in obj["terms"]:
            key = (tuple(row["x_exp"]), _unbits(row["g_mask"]), _unbits(row["e_mask"]),
                   tuple(row["w_exp"]))
            terms[key] = Coefficient(Fraction(row["q"]), row["pi_pow"])
        return cls(m, n, terms)

    @classmethod
    def from_json(cls, text: str) -> "SuperElement":
        return cls.from_json_obj(json.loads(text))


def _bits(mask: int, length: int) -> str:
    # index 1 first
    return "".join("1" if mask >> i & 1 else "0" for i in range(length))


def _unbits(s: str) -> int:
    return sum(1 << i for i, ch in enumerate(s) if ch == "1")


def _monomial_str(key: Monomial) -> str:
    x, g, e, w = key
    parts = [f"x{i + 1}^{p}" if p > 1 else f"x{i + 1}" for i, p in enumerate(x) if p]
    parts += [f"x`{i + 1}" for i in range(g.bit_length()) if g >> i & 1]
    parts += [f"e{i + 1}" for i in range(e.bit_length()) if e >> i & 1]
    parts += [f"e`{i + 1}^{p}" if p > 1 else f"e`{i + 1}" for i, p in enumerate(w) if p]
    return "*".join(parts) or "1"


def _check_index(i: int, size: int, name: str):
    if not 1 <= i <= size:
        raise IndexError(f"{name} index {i} out of range 1..{size}")


def multiply(a: SuperElement, b: SuperElement) -> SuperElement:
    """Normal-ordered product ``a * b``."""
    a._same_space(b)
    bound = min(a.degree_bound, b.degree_bound)
    out: Dict[Monomial, Coefficient] = {}
    for ka, ca in a.terms.items():
        for kb, cb in b.terms.items():
            for s, key in _monomial_product(ka, kb):
                if sum(key[3]) > bound:
                    raise DegreeBoundExceeded(
                        f"symplectic degree {sum(key[3])} exceeds bound {bound}")
                c = ca * cb * s
                if key in out:
                    out[key] = out[key] + c
                else:
                    out[key] = c
    return SuperElement(a.m, a.n, out, bound)


def vector_variable(m: int, n: int) -> SuperElement:
    """``x = sum x_i e_i + sum x`_j e`_j``."""
    if m < 0 or n < 0:
        raise ValueError("dimensions must be non-negative")
    if m == 0 and n == 0:
        raise EmptyAlgebra("R^(0|0) carries no vector variable")
    return bosonic_vector(m, n) + fermionic_vector(m, n)


def bosonic_vector(m: int, n: int) -> SuperElement:
    out = SuperElement(m, n)
    for i in range(1, m + 1):
        out = out + multiply(SuperElement.x(m, n, i), SuperElement.e(m, n, i))
    return out


def fermionic_vector(m: int, n: int) -> SuperElement:
    out = SuperElement(m, n)
    for j in range(1, 2 * n + 1):
        out = out + multiply(SuperElement.grassmann(m, n, j), SuperElement.e_symplectic(m, n, j))
    return out


def radius_squared(m: int, n: int) -> SuperElement:
    """``r^2 = x_1^2 + ... + x_m^2`` as a scalar polynomial."""
    out = SuperElement(m, n)
    for i in range(m):
        x = [0] * m
        x[i] = 2
        out = out + SuperElement(m, n, {(tuple(x), 0, 0, (0,) * 2 * n): Coefficient(1)})
    return out


def partial_bosonic(f: SuperElement, i: int) -> SuperElement:
    """Formal derivative in ``x_i`` (1-based)."""
    _check_index(i, f.m, "x")
    out = {}
    for (x, g, e, w), c in f.terms.items():
        p = x[i - 1]
        if p:
            nx = x[:i - 1] + (p - 1,) + x[i:]
            out[(nx, g, e, w)] = c * p
    return SuperElement(f.m, f.n, out, f.degree_bound)


def partial_fermionic(f: SuperElement, j: int) -> SuperElement:
    """Left Grassmann derivative in ``x`_j`` (1-based)."""
    _check_index(j, 2 * f.n, "x`")
    bit = 1 << (j - 1)
    out = {}
    for (x, g, e, w), c in f.terms.items():
        if g & bit:
            if _popcount(g & (bit - 1)) & 1:
                c = -c
            out[(x, g ^ bit, e, w)] = c
    return SuperElement(f.m, f.n, out, f.degree_bound)


@lru_cache(maxsize=None)
def _generators(m: int, n: int):
    es = [SuperElement.e(m, n, i) for i in range(1, m + 1)]
    eps = [SuperElement.e_symplectic(m, n, j) for j in range(1, 2 * n + 1)]
    return es, eps


def dirac(f: SuperElement) -> SuperElement:
    """``2 sum_j (e`_{2j} d/dx`_{2j-1} - e`_{2j-1} d/dx`_{2j}) - sum_j e_j d/dx_j``."""
    es, eps = _generators(f.m, f.n)
    out = SuperElement(f.m, f.n, degree_bound=f.degree_bound)
    for j in range(1, f.n + 1):
        out = out + 2 * multiply(eps[2 * j - 1], partial_fermionic(f, 2 * j - 1))
        out = out - 2 * multiply(eps[2 * j - 2], partial_fermionic(f, 2 * j))
    for i in range(1, f.m + 1):
        out = out - multiply(es[i - 1], partial_bosonic(f, i))
    return out


def laplace_bosonic(f: SuperElement) -> SuperElement:
    out = SuperElement(f.m, f.n, degree_bound=f.degree_bound)
    for i in range(1, f.m + 1):
        out = out - partial_bosonic(partial_bosonic(f, i), i)
    return out


def laplace_fermionic(f: SuperElement) -> SuperElement:
    out = SuperElement(f.m, f.n, degree_bound=f.degree_bound)
    for j in range(1, f.n + 1):
        out = out + 4 * partial_fermionic(partial_fermionic(f, 2 * j), 2 * j - 1)
    return out


def laplace(f: SuperElement) -> SuperElement:
    """Super Laplacian from its coordinate formula (no Clifford products)."""
    return laplace_bosonic(f) + laplace_fermionic(f)


def terms_of(elements: Iterable[SuperElement]) -> int:
    return sum(len(e.terms) for e in elements)
