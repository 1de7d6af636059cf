import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superfund import core_algebra as ca
from superfund.coefficient import Coefficient
from superfund.fundsol import nu_super
from superfund.radial import (NotExpandable, RadialExpr, SingularPoint, eval_numeric, radial_dirac,
                              radial_laplace, radial_laplace_b, radial_laplace_f, radial_multiply,
                              radial_partial_b, to_coordinates)

T = RadialExpr.term


def test_vector_square_is_minus_r2():
    xb = T(3, 0, 0, 1, 0)
    assert radial_multiply(xb, xb) == T(3, 0, 2, 0, 0, -1)


def test_truncation_above_top_power():
    assert radial_multiply(T(1, 2, 0, 0, 1), T(1, 2, 0, 0, 4)).is_zero()
    assert T(1, 1, 0, 0, 3).is_zero()


def test_bosonic_and_fermionic_vectors_anticommute():
    xb, xf = T(1, 1, 0, 1, 0), T(1, 1, 0, 0, 1)
    assert (radial_multiply(xb, xf) + radial_multiply(xf, xb)).is_zero()
    coords = to_coordinates(xb) * to_coordinates(xf) + to_coordinates(xf) * to_coordinates(xb)
    assert coords.is_zero()


def test_dirac_examples():
    # xb^2 = -r^2, so the vector square rule reads d_x(-r^2) = 2 xb
    assert radial_dirac(T(2, 0, 2, c=-1)) == T(2, 0, 0, 1, 0, 2)
    x = T(3, 1, 0, 1, 0) + T(3, 1, 0, 0, 1)
    assert radial_dirac(x) == T(3, 1, c=1)
    got = radial_dirac(T(3, 1, -1, 0, 2))
    assert got == T(3, 1, -1, 0, 1, 2) + T(3, 1, -3, 1, 2)


def test_bosonic_derivative_of_inverse_radius_matches_differences():
    # d_xb r^-1 = -r^-3 xb, compared against central differences of 1/|x|
    d = radial_partial_b(T(3, 0, -1))
    assert d == T(3, 0, -3, 1, 0, -1)
    p = np.array([0.4, -0.7, 1.1])
    h = 1e-6
    grad = np.array([(1 / np.linalg.norm(p + h * e) - 1 / np.linalg.norm(p - h * e)) / (2 * h)
                     for e in np.eye(3)])
    vec = eval_numeric(d, p)[(1, 0)]
    assert np.allclose(vec, grad, rtol=1e-7)


@pytest.mark.parametrize("m", [3, 5, 7])
def test_classical_kernel_harmonic(m):
    assert radial_laplace_b(T(m, 0, 2 - m)).is_zero()


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fermionic_laplacian_on_powers(n):
    for l in range(n):
        got = radial_laplace_f(T(1, n, 0, 0, 2 * n - 2 * l))
        assert got == T(1, n, 0, 0, 2 * n - 2 * l - 2, -4 * (n - l) * (l + 1))


def test_kernel_3_1_annihilated():
    nu = T(3, 1, -1, 0, 2, Coefficient(Fraction(1, 4), -2)) - T(3, 1, 1, 0, 0, Coefficient(Fraction(1, 2), -2))
    assert nu == nu_super(3, 1, 2).expr
    assert radial_laplace(nu).is_zero()
    # the two surviving pieces cancel
    assert radial_laplace_f(nu) == -radial_laplace_b(nu)
    assert radial_laplace_f(nu) == T(3, 1, -1, c=Coefficient(-1, -2))


def test_to_coordinates_examples():
    S = ca.SuperElement
    assert to_coordinates(T(2, 0, 2)) == S.x(2, 0, 1) ** 2 + S.x(2, 0, 2) ** 2
    g = lambda j: S.grassmann(0, 2, j)  # noqa: E731
    assert to_coordinates(T(0, 2, 0, 0, 2)) == g(1) * g(2) + g(3) * g(4)
    want = S.x(1, 1, 1) ** 2 * S.grassmann(1, 1, 1) * S.grassmann(1, 1, 2)
    assert to_coordinates(T(1, 1, 2, 0, 2)) == want
    with pytest.raises(NotExpandable):
        to_coordinates(T(3, 0, -1))


def test_eval_numeric():
    assert eval_numeric(T(3, 0, -1), [0, 0, 1])[(0, 0)] == 1.0
    nu = nu_super(3, 0, 2).expr
    assert abs(eval_numeric(nu, [0, 2, 0])[(0, 0)] - 1 / (8 * math.pi)) < 1e-15
    assert abs(1 / (8 * math.pi) - 0.0397887) < 1e-7
    assert np.isfinite(eval_numeric(T(3, 1, 4, 1, 2), [0, 0, 0])[(1, 2)]).all()
    with pytest.raises(SingularPoint):
        eval_numeric(nu, [0, 0, 0])


def test_json_roundtrip():
    nu = nu_super(5, 2, 3).expr
    assert RadialExpr.from_json(nu.to_json()) == nu
    assert [t["alpha"] for t in nu.to_json_obj()["terms"]] == sorted(t["alpha"] for t in nu.to_json_obj()["terms"])


@st.composite
def radial_exprs(draw, m, n, alphas):
    terms = {}
    for _ in range(draw(st.integers(1, 4))):
        key = (draw(st.sampled_from(alphas)), draw(st.integers(0, 1)), draw(st.integers(0, 2 * n)))
        terms[key] = Coefficient(Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4))))
    return RadialExpr(m, n, terms)


MN = [(m, n) for m in (1, 2, 3) for n in (0, 1, 2)]


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_oracle_equivalence_random(data):
    m, n = data.draw(st.sampled_from(MN))
    f = data.draw(radial_exprs(m, n, [0, 2, 4, 6]))
    assert to_coordinates(radial_dirac(f)) == ca.dirac(to_coordinates(f))
    assert to_coordinates(radial_laplace(f)) == ca.laplace(to_coordinates(f))


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_dirac_squared_and_commutation(data):
    m, n = data.draw(st.sampled_from(MN + [(5, 3)]))
    f = data.draw(radial_exprs(m, n, list(range(-7, 7))))
    assert radial_dirac(radial_dirac(f)) == radial_laplace(f)
    assert radial_laplace_b(radial_laplace_f(f)) == radial_laplace_f(radial_laplace_b(f))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_graded_commutation_with_vector(data):
    m, n = data.draw(st.sampled_from(MN))
    alpha = data.draw(st.integers(-5, 5))
    beta = data.draw(st.integers(0, 2 * n))
    xvec = data.draw(st.integers(0, 1))
    t = T(m, n, alpha, xvec, beta)
    xb = T(m, n, 0, 1, 0)
    sign = 1 if beta % 2 else -1
    assert (radial_multiply(xb, t) + radial_multiply(t, xb).scale(sign)).is_zero()
