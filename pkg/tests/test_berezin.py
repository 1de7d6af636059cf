import math
import random
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from superfund import _kernels, berezin
from superfund import core_algebra as ca
from superfund.berezin import (SuperTestFunction, berezin_integral, convolution_residual, convolve_solve,
                               default_battery, delta_pair, delta_pair_shifted, distributional_check,
                               full_mask, gaussian_test_function, mollified_delta, pair,
                               xf_power_sectors)
from superfund.fundsol import nu_super
from superfund.quadrature import DivergenceError, axis_rule, sphere_area
from superfund.radial import RadialExpr, eval_numeric


def normal_piece(m, mask, amplitude=1.0, center=None, width=1.0):
    norm = (2 * math.pi * width ** 2) ** (-m / 2)
    return {"type": "gaussian", "center": center or [0.0] * m, "width": width,
            "grassmann_mask": mask, "amplitude": amplitude * norm}


@pytest.mark.parametrize("m,n", [(1, 1), (2, 1), (3, 1), (3, 2), (5, 3)])
def test_gaussian_top_integrates_to_one(m, n):
    f = gaussian_test_function(m, n, [normal_piece(m, full_mask(n))])
    assert abs(berezin_integral(f) - 1.0) < 1e-6


def test_mask_bitstring_reads_index_one_first():
    f = gaussian_test_function(1, 2, [normal_piece(1, "1000")])
    assert list(f.coeffs) == [1]


def test_no_top_sector_gives_zero():
    f = gaussian_test_function(3, 1, [normal_piece(3, 0), normal_piece(3, 1), normal_piece(3, 2)])
    assert berezin_integral(f) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fermionic_top_power(n):
    xf2 = ca.SuperElement.scalar(0, n, 0)
    for j in range(1, n + 1):
        xf2 = xf2 + ca.SuperElement.grassmann(0, n, 2 * j - 1) * ca.SuperElement.grassmann(0, n, 2 * j)
    sectors = (xf2 ** n).grassmann_sectors()
    assert {k: v.q for k, v in sectors.items()} == xf_power_sectors(n, 2 * n)
    pieces = [normal_piece(2, mask, float(c.q) / math.factorial(n)) for mask, c in sectors.items()]
    assert abs(berezin_integral(gaussian_test_function(2, n, pieces)) - 1.0) < 1e-6


def test_divergent_weight_rejected():
    f = gaussian_test_function(1, 0, [normal_piece(1, 0)])
    with pytest.raises(DivergenceError):
        pair(RadialExpr.term(1, 0, -1), f)


def test_quadrature_rules():
    for m in (2, 3, 4, 5):
        t, w = axis_rule(m, 12)
        assert abs(w.sum() - sphere_area(m)) < 1e-12
        # int_{S^(m-1)} t^2 = |S^(m-1)| / m
        assert abs(w @ t ** 2 - sphere_area(m) / m) < 1e-12


def test_delta_pair_evaluates():
    f = gaussian_test_function(3, 1, [{"center": [0.5, 0, 0], "width": 0.8, "amplitude": 2.0},
                                      {"center": [0, 0, 0], "width": 0.8, "amplitude": 1.5,
                                       "grassmann_mask": 3}])
    vals = delta_pair(f, [0, 0, 0])
    assert abs(vals[0] - 2.0 * math.exp(-0.25 / (2 * 0.64))) < 1e-15
    assert vals[3] == 1.5
    g = gaussian_test_function(3, 1, [{"center": [0, 0, 0], "width": 1.0}])
    assert set(delta_pair(g, [0.1, 0.2, 0.3])) == {0}


@pytest.mark.parametrize("n", [1, 2])
def test_grassmann_shift_reproduces(n):
    rng = random.Random(n)
    data = {mask: Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for mask in range(1 << (2 * n))}
    data = {k: v for k, v in data.items() if v}
    assert delta_pair_shifted(data, n) == data


@pytest.mark.parametrize("m,n", [(1, 1), (3, 1)])
def test_mollified_delta_converges(m, n):
    f = gaussian_test_function(m, n, [{"center": [0.2] * m, "width": 0.9, "amplitude": 1.0},
                                      {"center": [0.0] * m, "width": 0.5, "amplitude": 3.0,
                                       "grassmann_mask": full_mask(n)}])
    target = f.scalar_at(np.zeros(m))
    errs = []
    for sigma in (0.1, 0.05, 0.025):
        errs.append(abs(pair(mollified_delta(m, n, sigma), f, 1e-12).value - target))
    assert errs[0] > errs[1] > errs[2]
    # second order in sigma: each halving cuts the error by about 4
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_one_dimensional_pairing_by_parts():
    # <-|x|/2, -phi''> = phi(0) for phi = exp(-x^2/(2 s^2))
    f = gaussian_test_function(1, 0, [{"center": [0.0], "width": 0.7}])
    assert abs(pair(nu_super(1, 0, 2), f.laplace()).value - 1.0) < 1e-10


@pytest.mark.parametrize("m,n", [(1, 1), (3, 1), (3, 2), (5, 1)])
def test_distributional_delta(m, n):
    battery = default_battery(m, n)
    assert len(battery) >= 5
    assert distributional_check(nu_super(m, n, 2), battery, 1e-4).passed
    assert distributional_check(nu_super(m, n, 4), battery, 1e-3).passed


def test_spec_test_function_example():
    phi = gaussian_test_function(3, 1, [{"width": 1.0}, {"width": 1.0, "grassmann_mask": 3}])
    rep = distributional_check(nu_super(3, 1, 2), [phi], 1e-4)
    assert rep.passed and abs(rep.results[0].value - 1.0) < 1e-4


def test_doubled_candidate_fails():
    nu = nu_super(3, 1, 2)
    bad = replace(nu, expr=nu.expr.scale(2))
    rep = distributional_check(bad, default_battery(3, 1), 1e-4)
    assert not rep.passed
    for r in rep.results:
        assert abs(r.value / r.target - 2.0) < 1e-6


def _top(el):
    return el.grassmann_sectors().get(full_mask(el.n), ca.Coefficient(0))


@pytest.mark.parametrize("n", [1, 2])
def test_fermionic_laplacian_symmetric_under_berezin(n):
    rng = random.Random(7 + n)
    dim = 1 << (2 * n)
    for _ in range(20):
        u = ca.SuperElement(0, n, {((), k, 0, (0,) * 2 * n): Fraction(rng.randint(-3, 3)) for k in range(dim)})
        v = ca.SuperElement(0, n, {((), k, 0, (0,) * 2 * n): Fraction(rng.randint(-3, 3)) for k in range(dim)})
        assert _top(ca.laplace_fermionic(u) * v) == _top(u * ca.laplace_fermionic(v))


def test_convolution_of_zero_source():
    rho = SuperTestFunction(1, 1, {})
    out = convolve_solve(nu_super(1, 1, 2), rho, np.linspace(-1, 1, 5))
    assert all(not np.any(v) for v in out.sectors.values())
    rho = gaussian_test_function(1, 1, [{"width": 0.5, "amplitude": 0.0, "grassmann_mask": 3}])
    out = convolve_solve(nu_super(1, 1, 2), rho, np.linspace(-1, 1, 5))
    assert all(not np.any(v) for v in out.sectors.values())


def test_convolution_residual_small():
    rho = gaussian_test_function(1, 1, [{"center": [0.3], "width": 0.5, "grassmann_mask": 3},
                                        {"center": [-0.2], "width": 0.4, "amplitude": 0.5}])
    grid = np.linspace(-1.5, 1.5, 13)
    res = convolution_residual(nu_super(1, 1, 2), rho, grid, h=1e-3)
    assert res.max_rel <= 1e-3


def test_convolution_with_narrow_source_returns_kernel():
    sigma = 0.01
    rho = gaussian_test_function(1, 1, [normal_piece(1, 3, width=sigma)])
    grid = np.array([[0.6], [1.0], [-1.7]])
    nu = nu_super(1, 1, 2)
    out = convolve_solve(nu, rho, grid)
    for i, p in enumerate(grid):
        want = eval_numeric(nu.expr, p)
        scalar = want[(0, 0)]
        top = want[(0, 2)]  # xf^2 = x`_1 x`_2 at n = 1
        assert abs(out.sectors[0][i] - scalar) < 1e-3 * max(1, abs(scalar))
        assert abs(out.sectors[3][i] - top) < 1e-3 * max(1, abs(top))


def test_convolution_inverts_laplacian():
    phi = gaussian_test_function(1, 1, [{"center": [0.1], "width": 0.6, "amplitude": 1.0},
                                        {"center": [-0.3], "width": 0.4, "amplitude": 0.7,
                                         "grassmann_mask": 3}])
    grid = np.linspace(-1.2, 1.2, 9)
    out = convolve_solve(nu_super(1, 1, 2), phi.laplace(), grid)
    for mask, g in phi.coeffs.items():
        assert np.allclose(out.sectors[mask], g(grid[:, None]), atol=1e-8)


def test_numba_and_numpy_agree():
    rng = np.random.default_rng(0)
    r = np.sort(rng.uniform(0, 5, 40))
    wr = rng.uniform(0, 1, 40)
    t, wt = axis_rule(3, 16)
    offsets = rng.uniform(0, 2, 6)
    poly = np.array([1.0, -0.3, 0.05])
    a = _kernels.contract_gaussian_numpy(r, wr, t, wt, offsets, 0.7, poly)
    if _kernels.contract_gaussian_numba is None:
        pytest.skip("numba not installed")
    b = _kernels.contract_gaussian_numba(r, wr, t, wt, offsets, 0.7, poly)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_battery_file_format(tmp_path):
    path = tmp_path / "battery.json"
    path.write_text('[{"type": "gaussian", "center": [0, 0, 0], "width": 1.0, "grassmann_mask": "00",'
                    ' "amplitude": 1.0}, [{"type": "gaussian", "center": [0.2, 0, 0], "width": 0.6,'
                    ' "grassmann_mask": "11", "amplitude": 2.0}, {"type": "gaussian",'
                    ' "center": [0, 0, 0], "width": 0.9, "grassmann_mask": 0, "amplitude": 1.0}]]')
    battery = berezin.load_battery(str(path), 3, 1)
    assert len(battery) == 2
    assert distributional_check(nu_super(3, 1, 2), battery, 1e-4).passed
    with pytest.raises(ValueError):
        berezin.load_battery([{"type": "bump"}], 3, 1)


@pytest.mark.parametrize("flag,want", [("1", "numpy"), ("", "numba")])
def test_backend_env_flag(flag, want):
    import os
    import subprocess
    import sys
    if want == "numba" and _kernels.numba is None:
        pytest.skip("numba not installed")
    env = dict(os.environ, SUPERFUND_DISABLE_NUMBA=flag)
    code = "from superfund import _kernels; print(_kernels.backend())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == want
