"""Exact series, associates and quantum βγ-systems over Q(q)."""

from .errors import *  # noqa: F401,F403
from .scalars import ONE, Q, ZERO, Scalar, binomial
from .series import LaurentSeries, MPoly, RationalExpr, SeriesXZ, Shape, WindowTable
from .associates import Associate, associate_from_p, p_from_associate, verify_associate
from .fockrep import BgModule, ModuleState, SystemKind, TruncPolicy, build_module, expansion_coeffs
from .eops import (
    Calculus,
    GeneratorField,
    IdentityField,
    LocalityRelation,
    MatrixField,
    Multiplier,
    YPhi,
    find_multiplier,
    product_window,
    y_phi,
)

__version__ = "0.1.0"
