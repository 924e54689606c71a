"""Operator-level procedures on the eventually-diagonal model."""

from .codim import (
    EXACT_TRACE,
    FREDHOLM_ORACLE,
    AtomMove,
    CodimResult,
    conjugate_projections,
    essential_codimension,
    essential_codimension_fredholm,
    redistribute,
)
from .diagonalize import (
    ConverseReport,
    Diagonalization,
    DiagonalizabilityReport,
    conjugation_residual,
    full_rank_converse_check,
    is_restricted_diagonalizable,
    restricted_diagonalize,
)
from .example310 import Example310Report, angles, example_310_diagnostics
from .model import (
    PROJECTION_SPECTRUM,
    EventuallyDiagonalOperator,
    ModelProjection,
    RestrictedUnitary,
    diagonal_indicator,
    diagonal_of,
    diagonal_operator,
    diagonal_projection,
    make_operator,
    make_projection,
    spectral_projection,
    spectral_projections,
    tails_agree,
)
from .trace import ArvesonIdentity, ExpectationDelta, expectation_delta, expectation_delta_diag

__all__ = [name for name in dir() if not name.startswith("_")]
