"""Numerical laboratory for the critical set {J_f = 0} of second-gradient maps.

Modules: regimes (exponent bookkeeping and classification), maps / folding /
dense / cantor (explicit constructions), calculus (finite-difference oracle),
quadrature and energy (singular integrals and energies), dimension (box
counting), verify (injectivity, degree, signs, mollification) and cli.
"""

from .regimes import RegimeParams, classify, derive_exponents, sweep
from .maps import BallMap, PowerProfile, RadialMap
from .folding import FoldingMap
from .dense import DenseMap
from .cantor import CantorMap, build_schedule
from .spec_io import map_from_spec

__all__ = ["RegimeParams", "classify", "derive_exponents", "sweep", "BallMap", "PowerProfile", "RadialMap",
           "FoldingMap", "DenseMap", "CantorMap", "build_schedule", "map_from_spec"]
