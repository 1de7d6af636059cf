"""Berezin integration, the super Dirac delta, distributional pairing and the
convolution solver.

Grassmann parts are handled exactly on bitmasks; only the bosonic integrals
over R^m are numeric.  Test functions are sums of Gaussian pieces
``P(|x-c|^2) exp(-|x-c|^2 / (2 w^2))`` so that every power of the Laplacian
stays in closed form.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from superfund import _kernels
from superfund import core_algebra as ca
from superfund.fundsol import FundamentalSolution, NumericKernel, UnsupportedDimension
from superfund.quadrature import (DivergenceError, QuadratureError, axis_rule, radial_nodes,
                                  refine_until, sphere_area, sphere_rule)
from superfund.radial import RadialExpr

DEFAULT_TOL = 1e-6


# -- Grassmann bookkeeping ----------------------------------------------

def left_derivative(mask: int, j: int) -> Optional[Tuple[int, int]]:
    """Left derivative in generator j (0-based bit) of a monomial: (sign, new mask) or None."""
    bit = 1 << j
    if not mask & bit:
        return None
    sign = -1 if bin(mask & (bit - 1)).count("1") & 1 else 1
    return sign, mask ^ bit


def full_mask(n: int) -> int:
    return (1 << (2 * n)) - 1


@lru_cache(maxsize=None)
def xf_power_sectors(n: int, beta: int) -> Dict[int, Fraction]:
    """Grassmann expansion of an even power of the fermionic vector variable."""
    if beta % 2:
        raise ValueError("odd powers of xf carry symplectic generators and have no scalar expansion")
    el = ca.fermionic_vector(0, n) ** beta
    return {g: c.q for g, c in el.grassmann_sectors().items()}


# -- bosonic coefficient functions --------------------------------------

@dataclass(frozen=True)
class GaussianPiece:
    """``P(q) exp(-q / (2 width^2))`` with ``q = |x - center|^2`` and P ascending coefficients."""
    center: Tuple[float, ...]
    width: float
    poly: Tuple[float, ...]

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        q = np.sum((pts - np.asarray(self.center)) ** 2, axis=1)
        return npoly.polyval(q, self.poly) * np.exp(-q / (2 * self.width ** 2))

    def laplacian(self) -> "GaussianPiece":
        """Euclidean Laplacian (positive sign convention)."""
        m = len(self.center)
        s = 1.0 / (2 * self.width ** 2)
        f = np.asarray(self.poly, dtype=float)
        g = npoly.polysub(npoly.polyder(f) if len(f) > 1 else [0.0], s * f)
        gp = npoly.polyder(g) if len(g) > 1 else np.array([0.0])
        h2 = npoly.polysub(gp, s * g)
        out = npoly.polyadd(npoly.polymul([0.0, 4.0], h2), 2 * m * g)
        return GaussianPiece(self.center, self.width, tuple(np.trim_zeros(out, "b")) or (0.0,))

    def scale(self, c: float) -> "GaussianPiece":
        return GaussianPiece(self.center, self.width, tuple(c * p for p in self.poly))


@dataclass(frozen=True)
class GaussianSum:
    """Finite sum of Gaussian pieces over R^m."""
    m: int
    pieces: Tuple[GaussianPiece, ...] = ()

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(pts.shape[0])
        for p in self.pieces:
            out = out + p(pts)
        return out

    def __add__(self, other: "GaussianSum") -> "GaussianSum":
        return GaussianSum(self.m, self.pieces + other.pieces)

    def scale(self, c: float) -> "GaussianSum":
        return GaussianSum(self.m, tuple(p.scale(c) for p in self.pieces))

    def laplace_b(self) -> "GaussianSum":
        """Bosonic Laplacian ``-sum d^2/dx_j^2``."""
        return GaussianSum(self.m, tuple(p.laplacian().scale(-1.0) for p in self.pieces))

    @property
    def support_radius(self) -> float:
        return max((math.sqrt(sum(c * c for c in p.center)) + 14 * p.width for p in self.pieces),
                   default=1.0)

    @property
    def scale_length(self) -> float:
        return min((p.width for p in self.pieces), default=1.0)


@dataclass(frozen=True)
class CallableFunction:
    """Arbitrary vectorized function R^m -> R vanishing outside ``support_radius``."""
    m: int
    fn: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    laplacian_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, pts) -> np.ndarray:
        return np.asarray(self.fn(np.atleast_2d(np.asarray(pts, dtype=float))), dtype=float)

    def __add__(self, other):
        if not isinstance(other, CallableFunction):
            return NotImplemented
        return CallableFunction(self.m, lambda p: self.fn(p) + other.fn(p),
                                max(self.support_radius, other.support_radius))

    def scale(self, c: float) -> "CallableFunction":
        lap = None if self.laplacian_fn is None else (lambda p: c * self.laplacian_fn(p))
        return CallableFunction(self.m, lambda p: c * self.fn(p), self.support_radius, lap)

    def laplace_b(self) -> "CallableFunction":
        if self.laplacian_fn is None:
            raise NotImplementedError("no Laplacian supplied for this function")
        lap = self.laplacian_fn
        return CallableFunction(self.m, lambda p: -lap(p), self.support_radius)

    @property
    def scale_length(self) -> float:
        return self.support_radius / 8.0


BosonicFunction = Union[GaussianSum, CallableFunction]


@dataclass(frozen=True)
class SuperTestFunction:
    """Grassmann-valued test function: mask over 2n generators -> bosonic function."""
    m: int
    n: int
    coeffs: Mapping[int, BosonicFunction] = field(default_factory=dict)

    def __post_init__(self):
        for mask in self.coeffs:
            if mask < 0 or mask > full_mask(self.n):
                raise ValueError(f"Grassmann mask {mask} outside R^(.|{2 * self.n})")
        if self.support_radius <= 0:
            raise ValueError("support radius must be positive")

    @property
    def support_radius(self) -> float:
        return max((f.support_radius for f in self.coeffs.values()), default=1.0)

    def sector(self, mask: int) -> Optional[BosonicFunction]:
        return self.coeffs.get(mask)

    def __add__(self, other: "SuperTestFunction") -> "SuperTestFunction":
        out = dict(self.coeffs)
        for k, f in other.coeffs.items():
            out[k] = out[k] + f if k in out else f
        return SuperTestFunction(self.m, self.n, out)

    def scale(self, c: float) -> "SuperTestFunction":
        return SuperTestFunction(self.m, self.n, {k: f.scale(c) for k, f in self.coeffs.items()})

    def laplace_b(self) -> "SuperTestFunction":
        return SuperTestFunction(self.m, self.n, {k: f.laplace_b() for k, f in self.coeffs.items()})

    def laplace_f(self) -> "SuperTestFunction":
        out: Dict[int, BosonicFunction] = {}
        for mask, f in self.coeffs.items():
            for j in range(self.n):
                d = left_derivative(mask, 2 * j + 1)
                if d is None:
                    continue
                d2 = left_derivative(d[1], 2 * j)
                if d2 is None:
                    continue
                term = f.scale(4.0 * d[0] * d2[0])
                out[d2[1]] = out[d2[1]] + term if d2[1] in out else term
        return SuperTestFunction(self.m, self.n, out)

    def laplace(self) -> "SuperTestFunction":
        return self.laplace_b() + self.laplace_f()

    def laplace_power(self, k: int) -> "SuperTestFunction":
        out = self
        for _ in range(k):
            out = out.laplace()
        return out

    def values_at(self, point) -> Dict[int, float]:
        p = np.asarray(point, dtype=float).reshape(1, -1)
        return {mask: float(f(p)[0]) for mask, f in sorted(self.coeffs.items())}

    def scalar_at(self, point) -> float:
        f = self.coeffs.get(0)
        return 0.0 if f is None else float(f(np.asarray(point, dtype=float).reshape(1, -1))[0])


def gaussian_test_function(m: int, n: int, pieces: Iterable[dict]) -> SuperTestFunction:
    """Build a test function from piece descriptions
    ``{type: "gaussian", center, width, grassmann_mask, amplitude}``."""
    sectors: Dict[int, List[GaussianPiece]] = {}
    for spec in pieces:
        if spec.get("type", "gaussian") != "gaussian":
            raise ValueError(f"unknown test function type {spec.get('type')!r}")
        center = tuple(float(c) for c in np.atleast_1d(spec.get("center", [0.0] * m)))
        if len(center) != m:
            raise ca.DimensionMismatch(f"center has {len(center)} coordinates, expected {m}")
        width = float(spec.get("width", 1.0))
        if width <= 0:
            raise ValueError("width must be positive")
        mask = spec.get("grassmann_mask", 0)
        if isinstance(mask, str):
            mask = int(mask[::-1], 2) if mask else 0
        piece = GaussianPiece(center, width, (float(spec.get("amplitude", 1.0)),))
        sectors.setdefault(int(mask), []).append(piece)
    return SuperTestFunction(m, n, {k: GaussianSum(m, tuple(v)) for k, v in sectors.items()})


def load_battery(path_or_obj, m: int, n: int) -> List[SuperTestFunction]:
    """Battery file: a JSON list whose items are a piece object or a list of pieces."""
    obj = path_or_obj
    if isinstance(path_or_obj, str):
        with open(path_or_obj, encoding="utf-8") as fh:
            obj = json.load(fh)
    out = []
    for item in obj:
        pieces = item if isinstance(item, list) else [item]
        out.append(gaussian_test_function(m, n, pieces))
    return out


def load_source(path_or_obj, m: int, n: int) -> SuperTestFunction:
    obj = path_or_obj
    if isinstance(path_or_obj, str):
        with open(path_or_obj, encoding="utf-8") as fh:
            obj = json.load(fh)
    pieces = obj if isinstance(obj, list) else [obj]
    return gaussian_test_function(m, n, pieces)


# -- bosonic quadrature -------------------------------------------------

RadialWeight = Callable[[np.ndarray], np.ndarray]


def _power_weight(terms: Sequence[Tuple[int, float]], m: int) -> RadialWeight:
    for alpha, _ in terms:
        if alpha + m <= 0:
            raise DivergenceError(f"r^{alpha} is not integrable near 0 in dimension {m}")

    def w(r):
        out = np.zeros_like(r)
        for alpha, c in terms:
            out += c * r ** (alpha + m - 1)
        return out
    return w


def _kernel_weight(fn: Callable[[np.ndarray], np.ndarray], m: int) -> RadialWeight:
    return lambda r: fn(r) * r ** (m - 1)


def _integrate_against(weight: RadialWeight, g: BosonicFunction, m: int, tol: float,
                       offsets=None, shift_radius: float = 0.0) -> np.ndarray:
    """``int K(|z|) g(z + shift) dz`` for one or several shifts.

    For Gaussian sums the shift enters only through the distance between the
    shift point and each piece center, passed as ``offsets`` (one row per
    evaluation, one column per piece).
    """
    if isinstance(g, GaussianSum):
        pieces = g.pieces
        if offsets is None:
            offsets = np.array([[math.sqrt(sum(c * c for c in p.center)) for p in pieces]])
        offsets = np.atleast_2d(offsets)
        radius = float(np.max(offsets)) + 14 * max(p.width for p in pieces) if pieces else 1.0
        scale = g.scale_length

        def evaluate(level):
            r, wr = radial_nodes(radius, scale, level)
            t, wt = axis_rule(m, 24 * level)
            kr = wr * weight(r)
            total = np.zeros(offsets.shape[0])
            for i, p in enumerate(pieces):
                total += _kernels.contract_gaussian(r, kr, t, wt, offsets[:, i], p.width,
                                                    np.asarray(p.poly))
            return total
    else:
        if offsets is not None:
            raise NotImplementedError("shifted integration needs Gaussian coefficients")
        radius = g.support_radius + shift_radius

        def evaluate(level):
            r, wr = radial_nodes(radius, g.scale_length, level)
            dirs, wd = sphere_rule(m, 8 * level) if m > 1 else sphere_rule(1, 1)
            kr = wr * weight(r)
            pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, m)
            vals = g(pts).reshape(len(r), len(wd))
            return np.array([kr @ (vals @ wd)])

    value, err = refine_until(evaluate, tol)
    if not np.all(np.isfinite(value)):
        raise DivergenceError("integral is not finite")
    return value


def bosonic_integral(g: BosonicFunction, m: int, tol: float = DEFAULT_TOL) -> float:
    return float(_integrate_against(_power_weight([(0, 1.0)], m), g, m, tol)[0])


def berezin_integral(f: SuperTestFunction, tol: float = DEFAULT_TOL) -> float:
    """Top Grassmann coefficient (``d/dx`_1`` applied first) integrated over R^m."""
    top = f.coeffs.get(full_mask(f.n))
    if top is None:
        return 0.0
    return bosonic_integral(top, f.m, tol)


# -- kernels as Grassmann-graded radial weights -------------------------

def kernel_sectors(kernel, m: int) -> Dict[int, RadialWeight]:
    """Radial weight ``K_beta(r) r^(m-1)`` for each even power beta of xf."""
    if isinstance(kernel, FundamentalSolution):
        kernel = kernel.expr
    if isinstance(kernel, RadialExpr):
        by_beta: Dict[int, List[Tuple[int, float]]] = {}
        for (alpha, xvec, beta), c in kernel.sorted_terms():
            if xvec or beta % 2:
                raise ValueError("only scalar (even-order) kernels can be paired")
            by_beta.setdefault(beta, []).append((alpha, float(c)))
        return {b: _power_weight(t, m) for b, t in by_beta.items()}
    if isinstance(kernel, NumericKernel):
        for b in kernel.sectors:
            if b % 2:
                raise ValueError("only scalar (even-order) kernels can be paired")
        return {b: _kernel_weight(fn, m) for b, fn in kernel.sectors.items()}
    raise TypeError(f"unsupported kernel type {type(kernel).__name__}")


@dataclass
class Pairing:
    value: float
    contributions: Dict[int, float]  # test-function mask -> contribution


def pair(kernel, f: SuperTestFunction, tol: float = DEFAULT_TOL) -> Pairing:
    """``int_B kernel * f`` with the kernel on the left."""
    n, m = f.n, f.m
    top = full_mask(n)
    weights = kernel_sectors(kernel, m)
    contrib: Dict[int, float] = {}
    for beta, weight in sorted(weights.items()):
        for a, c in xf_power_sectors(n, beta).items():
            b = top ^ a
            g = f.coeffs.get(b)
            if g is None:
                continue
            sign = ca.grassmann_sign(a, b)
            val = float(c) * sign * float(_integrate_against(weight, g, m, tol)[0])
            contrib[b] = contrib.get(b, 0.0) + val
    return Pairing(sum(contrib.values()), contrib)


# -- the super Dirac delta ----------------------------------------------

def delta_pair(f: SuperTestFunction, y) -> Dict[int, float]:
    """``<delta(x - y), f(x)>`` with a purely bosonic shift: every sector of f at y."""
    return f.values_at(y)


@lru_cache(maxsize=None)
def _shift_product(n: int) -> ca.SuperElement:
    """``prod_j (x`_j - y`_j)`` in the doubled Grassmann algebra (x` bits first)."""
    out = ca.SuperElement.one(0, 2 * n)
    for j in range(1, 2 * n + 1):
        out = out * (ca.SuperElement.grassmann(0, 2 * n, j)
                     - ca.SuperElement.grassmann(0, 2 * n, 2 * n + j))
    return out


def _berezin_over(el: ca.SuperElement, first: int, count: int) -> ca.SuperElement:
    # generator `first` is differentiated first, then first+1, ...
    for j in range(first, first + count):
        el = ca.partial_fermionic(el, j)
    return el


def delta_pair_shifted(f_sectors: Mapping[int, Fraction], n: int) -> Dict[int, Fraction]:
    """Symbolic ``int_B dx` prod(x`_j - y`_j) f(x`)`` for constant Grassmann data.

    ``f_sectors`` maps x`-masks to exact numbers; the result maps y`-masks
    (on bits 0..2n-1) to exact numbers and equals ``f_sectors``.
    """
    f_el = ca.SuperElement(0, 2 * n, {((), mask, 0, (0,) * 4 * n): ca.Coefficient(c)
                                       for mask, c in f_sectors.items()})
    out = _berezin_over(_shift_product(n) * f_el, 1, 2 * n)
    res = {}
    for g, c in out.grassmann_sectors().items():
        res[g >> (2 * n)] = c.q
    return res


def mollified_delta(m: int, n: int, sigma: float) -> NumericKernel:
    """``(2 pi sigma^2)^(-m/2) exp(-r^2 / (2 sigma^2)) xf^(2n)/n!``."""
    norm = (2 * math.pi * sigma ** 2) ** (-m / 2) / math.factorial(n)
    return NumericKernel(m, n, {2 * n: lambda r: norm * np.exp(-r ** 2 / (2 * sigma ** 2))})


# -- distributional checks ----------------------------------------------

@dataclass
class DistributionalResult:
    index: int
    value: float
    target: float
    rel_error: float
    passed: bool
    contributions: Dict[int, float]


@dataclass
class DistributionalReport:
    m: int
    n: int
    order: int
    tol: float
    results: List[DistributionalResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def worst(self) -> Optional[DistributionalResult]:
        return max(self.results, key=lambda r: r.rel_error, default=None)

    def to_json_obj(self) -> dict:
        return {
            "m": self.m, "n": self.n, "order": self.order, "tol": self.tol,
            "passed": self.passed,
            "results": [{
                "index": r.index, "value": r.value, "target": r.target,
                "rel_error": r.rel_error, "passed": r.passed,
                "sectors": {ca._bits(k, 2 * self.n): v for k, v in sorted(r.contributions.items())},
            } for r in self.results],
        }


def distributional_check(candidate, battery: Sequence[SuperTestFunction], rtol: float = 1e-4,
                         operator: Optional[Callable[[SuperTestFunction], SuperTestFunction]] = None,
                         quad_tol: float = 1e-10) -> DistributionalReport:
    """Check ``<candidate, P phi>_B = phi_scalar(0)`` over a battery.

    P defaults to ``Delta^k`` for an even-order candidate of order 2k.
    """
    if isinstance(candidate, FundamentalSolution):
        m, n, order = candidate.m, candidate.n, candidate.order
        if order % 2:
            raise ValueError("distributional check needs an even-order candidate")
        if m % 2 == 0:
            raise UnsupportedDimension("even m is not supported")
    else:
        m, n, order = candidate.m, candidate.n, 0
    if operator is None:
        if not order:
            raise ValueError("an operator is required for numeric kernels")
        k = order // 2
        operator = lambda phi: phi.laplace_power(k)  # noqa: E731
    results = []
    for i, phi in enumerate(battery):
        if (phi.m, phi.n) != (m, n):
            raise ca.DimensionMismatch("test function dimensions do not match the candidate")
        p = pair(candidate, operator(phi), quad_tol)
        target = phi.scalar_at(np.zeros(m))
        # a vanishing target (no scalar sector at 0) is compared absolutely
        rel = abs(p.value - target) / abs(target) if target else abs(p.value)
        results.append(DistributionalResult(i, p.value, target, rel, rel <= rtol, p.contributions))
    return DistributionalReport(m, n, order, rtol, results)


def default_battery(m: int, n: int) -> List[SuperTestFunction]:
    """Five Gaussian-based test functions with nonzero scalar value at the origin."""
    top = full_mask(n)
    zero = [0.0] * m
    off = [0.0] * m
    off[0] = 0.6
    diag = [0.3 * (-1) ** i for i in range(m)]
    b = []
    b.append([{"center": zero, "width": 1.0, "amplitude": 1.0}])
    b.append([{"center": zero, "width": 0.7, "amplitude": 1.0},
              {"center": zero, "width": 0.7, "amplitude": 1.0, "grassmann_mask": top}])
    b.append([{"center": off, "width": 0.8, "amplitude": 2.0},
              {"center": diag, "width": 0.5, "amplitude": -0.5, "grassmann_mask": top}])
    pieces = [{"center": diag, "width": 0.9, "amplitude": 1.5}]
    for j in range(n):
        pieces.append({"center": off, "width": 0.6, "amplitude": 0.8,
                       "grassmann_mask": 3 << (2 * j)})
    b.append(pieces)
    pieces = [{"center": zero, "width": 1.3, "amplitude": 0.7},
              {"center": off, "width": 0.5, "amplitude": 0.4}]
    if n:
        pieces.append({"center": diag, "width": 0.7, "amplitude": 1.1, "grassmann_mask": 1})
        pieces.append({"center": zero, "width": 1.1, "amplitude": -0.9, "grassmann_mask": top})
    b.append(pieces)
    return load_battery(b, m, n)


# -- convolution ---------------------------------------------------------

@lru_cache(maxsize=None)
def _convolution_table(n: int, beta: int) -> Dict[Tuple[int, int], Fraction]:
    """Exact weights T[(a, b)]: contribution of source sector b to solution sector a
    through ``((x` - y`)^2)^(beta/2)``, Berezin-integrated over y`."""
    nn = 2 * n
    diff2 = ca.SuperElement(0, nn)
    for j in range(1, n + 1):
        u = ca.SuperElement.grassmann(0, nn, 2 * j - 1) - ca.SuperElement.grassmann(0, nn, nn + 2 * j - 1)
        v = ca.SuperElement.grassmann(0, nn, 2 * j) - ca.SuperElement.grassmann(0, nn, nn + 2 * j)
        diff2 = diff2 + u * v
    power = diff2 ** (beta // 2)
    table: Dict[Tuple[int, int], Fraction] = {}
    for b in range(1 << nn):
        src = ca.SuperElement(0, nn, {((), b << nn, 0, (0,) * 2 * nn): ca.Coefficient(1)})
        out = _berezin_over(power * src, nn + 1, nn)
        for a, c in out.grassmann_sectors().items():
            table[(a, b)] = c.q
    return table


@dataclass
class ConvolutionResult:
    m: int
    n: int
    grid: np.ndarray
    sectors: Dict[int, np.ndarray]

    def to_json_obj(self) -> dict:
        return {
            "m": self.m, "n": self.n,
            "grid": self.grid.tolist(),
            "sectors": {ca._bits(k, 2 * self.n): v.tolist() for k, v in sorted(self.sectors.items())},
        }


def convolve_solve(nu, rho: SuperTestFunction, grid, tol: float = 1e-12) -> ConvolutionResult:
    """``f(x) = int_B nu(x - y) rho(y)`` sampled on ``grid`` (shape (N, m) or (N,) for m = 1)."""
    m, n = rho.m, rho.n
    if isinstance(nu, FundamentalSolution):
        if nu.m % 2 == 0:
            raise UnsupportedDimension("even m is not supported")
        if (nu.m, nu.n) != (m, n):
            raise ca.DimensionMismatch("kernel and source live on different superspaces")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    if grid.shape[1] != m:
        raise ca.DimensionMismatch(f"grid has {grid.shape[1]} coordinates, expected {m}")
    weights = kernel_sectors(nu, m)
    sectors: Dict[int, np.ndarray] = {}
    for beta, weight in sorted(weights.items()):
        table = _convolution_table(n, beta)
        for b, g in sorted(rho.coeffs.items()):
            if not isinstance(g, GaussianSum):
                raise NotImplementedError("convolution sources must be Gaussian sums")
            hits = [(a, c) for (a, bb), c in table.items() if bb == b and c != 0]
            if not hits or not g.pieces:
                continue
            centers = np.array([p.center for p in g.pieces])
            offsets = np.linalg.norm(grid[:, None, :] - centers[None, :, :], axis=2)
            vals = _integrate_against(weight, g, m, tol, offsets=offsets)
            for a, c in hits:
                sectors[a] = sectors.get(a, np.zeros(len(grid))) + float(c) * vals
    return ConvolutionResult(m, n, grid, sectors)


def apply_laplace_f_sectors(sectors: Mapping[int, np.ndarray], n: int) -> Dict[int, np.ndarray]:
    out: Dict[int, np.ndarray] = {}
    for mask, v in sectors.items():
        for j in range(n):
            d = left_derivative(mask, 2 * j + 1)
            if d is None:
                continue
            d2 = left_derivative(d[1], 2 * j)
            if d2 is None:
                continue
            out[d2[1]] = out.get(d2[1], 0.0) + 4.0 * d[0] * d2[0] * v
    return out


@dataclass
class Residual:
    max_abs: float
    max_rel: float
    scale: float
    per_sector: Dict[int, float]


def convolution_residual(nu, rho: SuperTestFunction, grid, h: float = 1e-3,
                         tol: float = 1e-12) -> Residual:
    """``Delta f - rho`` on the grid: bosonic part by central differences, fermionic part exact."""
    m, n = rho.m, rho.n
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    pts = [grid]
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        pts += [grid + e, grid - e]
    stacked = np.concatenate(pts)
    f = convolve_solve(nu, rho, stacked, tol).sectors
    N = len(grid)
    lap: Dict[int, np.ndarray] = {}
    centre = {k: v[:N] for k, v in f.items()}
    for k, v in f.items():
        acc = np.zeros(N)
        for i in range(m):
            plus = v[N * (1 + 2 * i):N * (2 + 2 * i)]
            minus = v[N * (2 + 2 * i):N * (3 + 2 * i)]
            acc -= (plus - 2 * v[:N] + minus) / h ** 2
        lap[k] = acc
    for k, v in apply_laplace_f_sectors(centre, n).items():
        lap[k] = lap.get(k, np.zeros(N)) + v
    rho_vals = {k: g(grid) for k, g in rho.coeffs.items()}
    scale = max((float(np.max(np.abs(v))) for v in rho_vals.values()), default=0.0) or 1.0
    per_sector = {}
    for k in set(lap) | set(rho_vals):
        diff = lap.get(k, np.zeros(N)) - rho_vals.get(k, np.zeros(N))
        per_sector[k] = float(np.max(np.abs(diff)))
    worst = max(per_sector.values(), default=0.0)
    return Residual(worst, worst / scale, scale, per_sector)
