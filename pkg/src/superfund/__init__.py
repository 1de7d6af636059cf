"""Fundamental solutions of the super Laplace and super Dirac operators on R^(m|2n)."""
from superfund.coefficient import Coefficient, PiPowerMismatch, gamma_half
from superfund.core_algebra import SuperElement, dirac, laplace
from superfund.fundsol import (ClassicalFundSeq, FundamentalSolution, GeneralizedSeq, coeff_a, coeff_b,
                               gamma, generalized_fundsol, nu_classical, nu_super)
from superfund.radial import RadialExpr, eval_numeric, radial_dirac, radial_laplace, to_coordinates

__version__ = "0.1.0"

__all__ = [
    "Coefficient", "PiPowerMismatch", "gamma_half",
    "SuperElement", "dirac", "laplace",
    "ClassicalFundSeq", "FundamentalSolution", "GeneralizedSeq", "coeff_a", "coeff_b", "gamma",
    "generalized_fundsol", "nu_classical", "nu_super",
    "RadialExpr", "eval_numeric", "radial_dirac", "radial_laplace", "to_coordinates",
]
