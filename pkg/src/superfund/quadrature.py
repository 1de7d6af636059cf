"""Tensor Gauss rules in spherical coordinates for integrands of the form
``K(|x|) g(x)`` on R^m, with K possibly singular (but integrable) at 0.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


class QuadratureError(RuntimeError):
    """Raised when refinement fails to reach the requested tolerance."""

    def __init__(self, msg, worst=None):
        super().__init__(msg)
        self.worst = worst


class DivergenceError(ValueError):
    """The radial weight is not integrable at the origin."""


def sphere_area(m: int) -> float:
    """Surface measure of S^(m-1); counts the two points of S^0 for m = 1."""
    return 2 * math.pi ** (m / 2) / math.gamma(m / 2)


@lru_cache(maxsize=64)
def _legendre(order: int):
    x, w = roots_legendre(order)
    return x, w


def composite_legendre(breaks: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = _legendre(order)
    a = breaks[:-1, None]
    b = breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def radial_breaks(radius: float, scale: float, refine: int = 1, grading: int = 6) -> np.ndarray:
    """Panel breakpoints on [0, radius]: uniform panels of width about
    ``scale / (2 refine)`` plus a geometric cluster toward the origin."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    h = scale / (2.0 * refine)
    npan = max(2, int(math.ceil(radius / h)))
    uniform = np.linspace(0.0, radius, npan + 1)
    first = uniform[1]
    graded = first * 0.25 ** np.arange(1, grading + 1)
    return np.unique(np.concatenate([uniform, graded]))


@lru_cache(maxsize=64)
def axis_rule(m: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes t and weights for ``int_{S^(m-1)} F(omega . u) d omega`` as a 1-D rule in t.

    For m = 1 the sphere is {-1, +1}.  Weights include the area of S^(m-2).
    """
    if m == 1:
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])
    a = (m - 3) / 2.0
    t, w = roots_jacobi(order, a, a)
    return t, w * sphere_area(m - 1)


@lru_cache(maxsize=32)
def sphere_rule(m: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Product rule on S^(m-1) built recursively from Gauss-Jacobi rules."""
    if m == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    t, w = roots_jacobi(order, (m - 3) / 2.0, (m - 3) / 2.0)
    sub, sw = sphere_rule(m - 1, order)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    pts = np.concatenate([np.repeat(t, len(sw))[:, None],
                          (s[:, None, None] * sub[None, :, :]).reshape(-1, m - 1)], axis=1)
    wts = (w[:, None] * sw[None, :]).ravel()
    return pts, wts


def radial_nodes(radius: float, scale: float, refine: int, order: int = 16):
    return composite_legendre(radial_breaks(radius, scale, refine), order)


def refine_until(evaluate: Callable[[int], np.ndarray], tol: float, max_refine: int = 16):
    """Evaluate at refine levels 1, 2, 4, ... until successive results agree to ``tol``.

    Returns (value, error estimate).  ``evaluate`` may return an array; the
    worst entry drives convergence.
    """
    prev = np.asarray(evaluate(1), dtype=float)
    level = 2
    while level <= max_refine:
        cur = np.asarray(evaluate(level), dtype=float)
        err = np.abs(cur - prev)
        if np.all(np.isfinite(cur)) and np.all(err <= tol):
            return cur, err
        prev = cur
        level *= 2
    worst = int(np.argmax(np.where(np.isfinite(err), err, np.inf))) if np.ndim(err) else None
    raise QuadratureError(f"quadrature did not reach tolerance {tol:g}", worst=worst)
