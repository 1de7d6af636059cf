"""Hot quadrature loops, compiled with numba when available.

Set ``SUPERFUND_DISABLE_NUMBA=1`` to force the pure numpy path.  Both paths
are always importable so they can be benchmarked against each other.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("SUPERFUND_DISABLE_NUMBA", "").lower() not in (
    "1", "true", "yes", "on")


def contract_gaussian_numpy(r, wr, t, wt, offsets, width, poly):
    """For each offset d: sum_i wr_i sum_j wt_j P(q_ij) exp(-q_ij / (2 width^2)),
    with q_ij = r_i^2 + d^2 - 2 r_i d t_j and P the polynomial ``poly`` (ascending).

    ``wr`` already carries the radial kernel and Jacobian.
    """
    offsets = np.asarray(offsets, dtype=np.float64)
    out = np.empty(offsets.shape[0])
    rr = r[:, None]
    tt = t[None, :]
    inv = 1.0 / (2.0 * width * width)
    for k in range(offsets.shape[0]):
        d = offsets[k]
        q = rr * rr + d * d - 2.0 * rr * d * tt
        np.maximum(q, 0.0, out=q)
        p = np.zeros_like(q)
        for c in poly[::-1]:
            p = p * q + c
        out[k] = wr @ ((p * np.exp(-q * inv)) @ wt)
    return out


def _contract_gaussian_loop(r, wr, t, wt, offsets, width, poly):
    nd = offsets.shape[0]
    nr = r.shape[0]
    nt = t.shape[0]
    npoly = poly.shape[0]
    inv = 1.0 / (2.0 * width * width)
    out = np.empty(nd)
    for k in range(nd):
        d = offsets[k]
        total = 0.0
        for i in range(nr):
            ri = r[i]
            base = ri * ri + d * d
            cross = 2.0 * ri * d
            s = 0.0
            for j in range(nt):
                q = base - cross * t[j]
                if q < 0.0:
                    q = 0.0
                p = 0.0
                for c in range(npoly - 1, -1, -1):
                    p = p * q + poly[c]
                s += wt[j] * p * np.exp(-q * inv)
            total += wr[i] * s
        out[k] = total
    return out


if numba is not None:
    contract_gaussian_numba = numba.njit(cache=True)(_contract_gaussian_loop)
else:  # pragma: no cover
    contract_gaussian_numba = None


def contract_gaussian(r, wr, t, wt, offsets, width, poly):
    args = (np.ascontiguousarray(r, dtype=np.float64), np.ascontiguousarray(wr, dtype=np.float64),
            np.ascontiguousarray(t, dtype=np.float64), np.ascontiguousarray(wt, dtype=np.float64),
            np.ascontiguousarray(np.atleast_1d(offsets), dtype=np.float64), float(width),
            np.ascontiguousarray(poly, dtype=np.float64))
    if USE_NUMBA:
        return contract_gaussian_numba(*args)
    return contract_gaussian_numpy(*args)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
