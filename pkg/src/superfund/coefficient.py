"""Exact scalars of the form q * pi**(h/2) with q rational.

Half-integer Gamma values are handled by :func:`gamma_half`, which returns the
rational part and the power of sqrt(pi) separately, so no floating point ever
enters the kernel constants.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Number = Union[int, Fraction]


class PiPowerMismatch(ValueError):
    """Raised when adding coefficients that carry different powers of pi."""


class Coefficient:
    """Exact scalar ``q * pi**(pi2 / 2)``.

    ``pi2`` is the power of pi counted in halves, so ``pi2 = 3`` means
    ``pi**1.5``.
    """

    __slots__ = ("q", "pi2")

    def __init__(self, q: Number = 0, pi2: int = 0):
        self.q = Fraction(q)
        self.pi2 = int(pi2)

    @property
    def pi_pow(self) -> Fraction:
        return Fraction(self.pi2, 2)

    def is_zero(self) -> bool:
        return self.q == 0

    def __add__(self, other):
        if not isinstance(other, Coefficient):
            other = Coefficient(other)
        if self.pi2 != other.pi2:
            if self.q == 0:
                return other
            if other.q == 0:
                return self
            raise PiPowerMismatch(
                f"cannot add pi^({self.pi2}/2) and pi^({other.pi2}/2) terms")
        return Coefficient(self.q + other.q, self.pi2)

    __radd__ = __add__

    def __neg__(self):
        return Coefficient(-self.q, self.pi2)

    def __sub__(self, other):
        if not isinstance(other, Coefficient):
            other = Coefficient(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Coefficient):
            return Coefficient(self.q * other.q, self.pi2 + other.pi2)
        return Coefficient(self.q * Fraction(other), self.pi2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Coefficient):
            return Coefficient(self.q / other.q, self.pi2 - other.pi2)
        return Coefficient(self.q / Fraction(other), self.pi2)

    def __rtruediv__(self, other):
        return Coefficient(other) / self

    def __eq__(self, other):
        if isinstance(other, Coefficient):
            if self.q == 0 and other.q == 0:
                return True
            return self.q == other.q and self.pi2 == other.pi2
        if isinstance(other, (int, Fraction)):
            return self.q == other and (self.pi2 == 0 or self.q == 0)
        return NotImplemented

    def __hash__(self):
        if self.q == 0:
            return hash(0)
        return hash((self.q, self.pi2))

    def __float__(self):
        return float(self.q) * math.pi ** (self.pi2 / 2)

    def __repr__(self):
        if self.pi2 == 0:
            return f"Coefficient({self.q})"
        return f"Coefficient({self.q}, pi^({self.pi2}/2))"

    def __str__(self):
        if self.pi2 == 0:
            return str(self.q)
        p = self.pi_pow
        return f"{self.q}*pi^{p}"


def gamma_half(twice_z: int) -> Coefficient:
    """Gamma(twice_z / 2) exactly, as a rational times a power of sqrt(pi).

    Integer arguments give ``(z-1)!``; half-integer arguments reduce to
    Gamma(1/2) = sqrt(pi) through Gamma(z+1) = z Gamma(z).  Poles raise.
    """
    if twice_z % 2 == 0:
        z = twice_z // 2
        if z <= 0:
            raise ValueError(f"Gamma has a pole at {z}")
        return Coefficient(math.factorial(z - 1))
    # walk from 1/2 to twice_z/2 in unit steps
    value = Fraction(1)
    z = Fraction(1, 2)
    target = Fraction(twice_z, 2)
    while z < target:
        value *= z
        z += 1
    while z > target:
        z -= 1
        value /= z
    return Coefficient(value, 1)


def binomial(top: Number, k: int) -> Fraction:
    """Generalized binomial coefficient with rational top argument."""
    if k < 0:
        return Fraction(0)
    top = Fraction(top)
    out = Fraction(1)
    for i in range(k):
        out *= (top - i) / (i + 1)
    return out


def parse_rational(text: str) -> Fraction:
    return Fraction(text)


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"
