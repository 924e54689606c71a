"""Eventually-diagonal operators: an exact corner block followed by a periodic diagonal tail.

The operator denoted by ``(spectrum, corner, tail)`` acts as ``corner`` on the
first ``s`` basis vectors and as ``diag(spectrum[tail[t mod p]])`` on basis
vector ``s + t``.  Two model operators have compact difference exactly when
their tails agree from some index on; every difference is then supported on a
finite block, which is what makes traces and codimensions exactly computable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..diagseq import LimSequence, SpectrumSet, TailSchedule, spectrum_set
from ..errors import DomainError, NotCompactError, ToleranceError, ValidationError
from ..exactcore import (
    DEFAULT_TOL,
    ExactMatrix,
    FloatMatrix,
    GaussianRational,
    annihilating_polynomial_check,
    gaussian,
    is_normal_exact,
    unitary_defect,
)

PROJECTION_SPECTRUM = SpectrumSet((GaussianRational(0), GaussianRational(1)))


def _schedule(tail) -> TailSchedule:
    return tail if isinstance(tail, TailSchedule) else TailSchedule(tuple(tail))


@dataclass(frozen=True, eq=False)
class EventuallyDiagonalOperator:
    """``corner ⊕ diag(tail)`` over a finite list of spectrum points.

    The constructor only checks structure.  Use :func:`make_operator` to also
    verify normality and, for finite-spectrum operators, that the corner is
    annihilated by the spectrum polynomial.
    """

    spectrum: SpectrumSet
    corner: ExactMatrix
    tail: TailSchedule
    finite_spectrum: bool = True

    def __post_init__(self):
        object.__setattr__(self, "spectrum", spectrum_set(self.spectrum))
        object.__setattr__(self, "tail", _schedule(self.tail))
        if not isinstance(self.corner, ExactMatrix):
            object.__setattr__(self, "corner", ExactMatrix(self.corner))
        if max(self.tail.pattern) >= len(self.spectrum):
            raise ValidationError(
                f"tail index {max(self.tail.pattern)} out of range for "
                f"a spectrum of {len(self.spectrum)} points"
            )

    @property
    def dim(self) -> int:
        return self.corner.dim

    def value_at(self, n: int) -> GaussianRational:
        """Tail value at global basis index ``n >= dim``."""
        if n < self.dim:
            raise IndexError("index lies inside the corner")
        return self.spectrum[self.tail.index_at(n - self.dim)]

    def tail_values(self, start: int, stop: int) -> list[GaussianRational]:
        return [self.value_at(n) for n in range(start, stop)]

    def ess_spectrum(self) -> frozenset:
        return frozenset(self.spectrum[i] for i in self.tail.indices())

    def extended(self, size: int):
        """The same operator with its corner grown to ``size`` by absorbing tail entries."""
        if size < self.dim:
            raise ValueError("cannot shrink a corner")
        if size == self.dim:
            return self
        corner = self.corner.extend(self.tail_values(self.dim, size))
        return type(self)(
            self.spectrum, corner, self.tail.rotated(size - self.dim), self.finite_spectrum
        )

    def block_float(self, size: int) -> np.ndarray:
        """Complex array of the leading ``size x size`` block."""
        n = self.dim
        out = np.zeros((size, size), dtype=complex)
        out[:n, :n] = self.corner.to_complex()
        for i in range(n, size):
            out[i, i] = complex(self.value_at(i))
        return out

    def block_trace(self, size: int) -> GaussianRational:
        """Exact trace of the leading ``size x size`` block."""
        t = self.corner.trace()
        for z in self.tail_values(self.dim, size):
            t = t + z
        return t

    def is_diagonal(self) -> bool:
        return self.corner.is_diagonal()

    def corner_frobenius(self) -> float:
        return float(np.linalg.norm(self.corner.to_complex(), "fro"))


@dataclass(frozen=True, eq=False)
class ModelProjection(EventuallyDiagonalOperator):
    """Model operator over the spectrum ``(0, 1)``; tail indices are the tail values."""

    def __post_init__(self):
        super().__post_init__()
        if self.spectrum.points != PROJECTION_SPECTRUM.points:
            raise ValidationError("a model projection has spectrum (0, 1)")


def make_projection(corner, tail: Sequence[int], check: bool = True) -> ModelProjection:
    """Model projection with the given corner and 0/1 tail pattern.

    With ``check`` the corner is verified to satisfy ``P = P* = P^2`` exactly.
    """
    if not isinstance(corner, ExactMatrix):
        corner = ExactMatrix(corner)
    if check:
        if not corner.is_hermitian():
            raise ValidationError("projection corner is not self-adjoint")
        if corner @ corner != corner:
            raise ValidationError("projection corner is not idempotent")
    return ModelProjection(PROJECTION_SPECTRUM, corner, _schedule(tail), True)


def diagonal_projection(mask: Sequence[bool], tail: Sequence[int]) -> ModelProjection:
    corner = ExactMatrix.diag([int(bool(b)) for b in mask])
    return ModelProjection(PROJECTION_SPECTRUM, corner, _schedule(tail), True)


def make_operator(spectrum, corner, tail, finite_spectrum: bool = True) -> EventuallyDiagonalOperator:
    """Validated model operator.

    Raises:
        ValidationError: the corner is not normal, a tail index is out of
            range, or (with ``finite_spectrum``) the corner has an eigenvalue
            outside ``spectrum``.
    """
    spec = spectrum_set(spectrum)
    if not isinstance(corner, ExactMatrix):
        corner = ExactMatrix(corner)
    op = EventuallyDiagonalOperator(spec, corner, _schedule(tail), finite_spectrum)
    if not is_normal_exact(corner):
        raise ValidationError("corner is not normal")
    if finite_spectrum and not annihilating_polynomial_check(corner, spec.points):
        raise ValidationError("corner has spectrum outside the declared points")
    return op


def diagonal_operator(spectrum, diag_indices: Sequence[int], tail) -> EventuallyDiagonalOperator:
    """Diagonal model operator whose corner entries are ``spectrum[diag_indices[i]]``."""
    spec = spectrum_set(spectrum)
    corner = ExactMatrix.diag([spec[k] for k in diag_indices])
    return EventuallyDiagonalOperator(spec, corner, _schedule(tail), True)


def diagonal_of(N: EventuallyDiagonalOperator) -> LimSequence:
    """Exact diagonal of ``N`` in the standard basis, as a sequence over ``N.spectrum``."""
    return LimSequence(tuple(N.corner.diagonal()), N.tail, N.spectrum)


def tails_agree(A: EventuallyDiagonalOperator, B: EventuallyDiagonalOperator) -> bool:
    """True iff the two tails coincide positionwise beyond both corners."""
    start = max(A.dim, B.dim)
    period = math.lcm(len(A.tail), len(B.tail))
    return all(A.value_at(n) == B.value_at(n) for n in range(start, start + period))


def require_compact(A, B, error=NotCompactError) -> int:
    """Common block size for ``A`` and ``B``; raises ``error`` when the tails never agree."""
    if not tails_agree(A, B):
        raise error("tails are not eventually equal, so the difference is not compact")
    return max(A.dim, B.dim)


def lagrange_factor(A: ExactMatrix, points: Sequence[GaussianRational], k: int) -> ExactMatrix:
    """``∏_{j≠k} (A - λ_j) / (λ_k - λ_j)`` in exact arithmetic."""
    lam = points[k]
    prod = None
    denom = GaussianRational(1)
    for j, mu in enumerate(points):
        if j == k:
            continue
        term = A.shift(mu)
        prod = term if prod is None else prod @ term
        denom = denom * (lam - mu)
        if prod.is_zero():
            return ExactMatrix.zeros(A.dim)
    if prod is None:
        return ExactMatrix.identity(A.dim)
    return prod.scale(1 / denom)


def spectral_projection(N: EventuallyDiagonalOperator, lam) -> ModelProjection:
    """Spectral projection of ``N`` for the eigenvalue ``lam``, by Lagrange interpolation."""
    if not N.finite_spectrum:
        raise DomainError("spectral projections need a finite-spectrum operator")
    k = N.spectrum.index(gaussian(lam))
    corner = lagrange_factor(N.corner, N.spectrum.points, k)
    tail = tuple(int(i == k) for i in N.tail.pattern)
    return ModelProjection(PROJECTION_SPECTRUM, corner, TailSchedule(tail), True)


def spectral_projections(N: EventuallyDiagonalOperator) -> list[ModelProjection]:
    return [spectral_projection(N, lam) for lam in N.spectrum]


def diagonal_indicator(N: EventuallyDiagonalOperator, lam) -> ModelProjection:
    """Spectral projection of a diagonal model operator, read off its entries."""
    if not N.is_diagonal():
        raise DomainError("operator is not diagonal")
    lam = gaussian(lam)
    mask = [z == lam for z in N.corner.diagonal()]
    tail = tuple(int(N.spectrum[i] == lam) for i in N.tail.pattern)
    return diagonal_projection(mask, tail)


@dataclass(frozen=True)
class RestrictedUnitary:
    """``corner_u ⊕ I``: a unitary of the form ``I + K`` with ``K`` finite rank."""

    corner_u: FloatMatrix
    defect: float = field(init=False)

    def __post_init__(self):
        d = unitary_defect(self.corner_u)
        if d > self.corner_u.tol:
            raise ToleranceError(f"unitary defect {d:.3e} exceeds tolerance {self.corner_u.tol:.1e}")
        object.__setattr__(self, "defect", d)

    @classmethod
    def identity(cls, n: int, tol: float = DEFAULT_TOL) -> "RestrictedUnitary":
        return cls(FloatMatrix(np.eye(n, dtype=complex), tol))

    @property
    def dim(self) -> int:
        return self.corner_u.dim

    @property
    def tol(self) -> float:
        return self.corner_u.tol

    def block(self, size: int) -> np.ndarray:
        """Leading ``size x size`` block of ``U`` (identity padded)."""
        n = self.dim
        if size < n:
            raise ValueError("block smaller than the unitary's corner")
        out = np.eye(size, dtype=complex)
        out[:n, :n] = self.corner_u.array
        return out

    def perturbation_hs_norm(self) -> float:
        """Hilbert-Schmidt norm of ``K = U - I``."""
        return float(np.linalg.norm(self.corner_u.array - np.eye(self.dim), "fro"))
