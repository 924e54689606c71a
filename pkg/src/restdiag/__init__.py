"""Essential codimension, renormalized sums and restricted diagonalization, computed exactly.

Operators are modelled as an exact Gaussian-rational corner block followed by
a periodic diagonal tail, so every difference that matters is finite rank and
the trace identities can be checked without rounding.
"""

from .exactcore import (
    DEFAULT_TOL,
    ExactMatrix,
    FloatMatrix,
    GaussianRational,
    annihilating_polynomial_check,
    is_normal_exact,
    numeric_rank,
    rational,
    unitary_defect,
)

__version__ = "0.1.0"
