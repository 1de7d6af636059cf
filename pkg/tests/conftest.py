import os
import sys
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from superfund import core_algebra as ca
from superfund.coefficient import Coefficient

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
GOLDEN = os.path.join(ROOT, "tests", "golden")


@st.composite
def monomials(draw, m, n, max_exp=2):
    x = tuple(draw(st.integers(0, max_exp)) for _ in range(m))
    g = draw(st.integers(0, (1 << (2 * n)) - 1))
    e = draw(st.integers(0, (1 << m) - 1))
    w = tuple(draw(st.integers(0, 1)) for _ in range(2 * n))
    return (x, g, e, w)


@st.composite
def elements(draw, m, n, max_terms=3, max_exp=2):
    terms = {}
    for key in draw(st.lists(monomials(m, n, max_exp), min_size=1, max_size=max_terms)):
        terms[key] = Coefficient(Fraction(draw(st.integers(-3, 3)), draw(st.integers(1, 3))))
    return ca.SuperElement(m, n, terms)


@pytest.fixture
def golden_dir():
    return GOLDEN


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
