"""Seeded random model instances for the property suites and the ``gen`` command.

Generator ``householder-phase/1``:

* every trial draws from ``numpy.random.default_rng([seed, trial])``;
* exact unitaries are products of rational Householder reflections
  ``I - 2 v v^T / (v^T v)`` with integer ``v`` (entries in ``[-3, 3]``)
  and, for complex instances, a diagonal of Pythagorean phases
  ``(a + bi)/c`` drawn from a fixed table;
* projections and finite-spectrum corners are ``W D W*`` for such a ``W``
  and a random diagonal ``D``, so they are exactly self-adjoint, idempotent
  or normal without any rounding;
* restricted unitaries are the ``Q`` factor of ``I + 0.3 G`` with Gaussian
  ``G``, phase-fixed so that ``diag(R) > 0``.

Changing any of these rules changes instance streams; bump the identifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from gmpy2 import mpq

from ..diagseq import TailSchedule, hull_vertices
from ..errors import UsageError
from ..exactcore import ExactMatrix, FloatMatrix, GaussianRational
from ..opmodel.model import (
    PROJECTION_SPECTRUM,
    EventuallyDiagonalOperator,
    ModelProjection,
    RestrictedUnitary,
    diagonal_operator,
)

GENERATOR_ID = "householder-phase/1"
KINDS = ("projection-pair", "finite-spectrum-operator", "restricted-unitary")
MAX_DIM = 128
MAX_POINTS = 6

_PHASES = ((1, 0, 1), (0, 1, 1), (3, 4, 5), (4, 3, 5), (-3, 4, 5), (5, 12, 13), (-12, 5, 13), (8, 15, 17))


def rng_for(seed: int, trial: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


@dataclass(frozen=True)
class ExactBasis:
    """``W = Φ H_1 ... H_r`` restricted to the leading ``dim`` coordinates.

    ``vectors`` are the Householder vectors and ``phases`` the diagonal of
    ``Φ`` as ``(a, b, c)`` triples meaning ``(a + bi)/c``.
    """

    dim: int
    vectors: tuple[tuple[int, ...], ...]
    phases: Optional[tuple[tuple[int, int, int], ...]] = None

    def conjugate(self, A: ExactMatrix) -> ExactMatrix:
        """``W A W*``."""
        re, im = _parts(A, self.dim)
        for v in reversed(self.vectors):
            re, im = _reflect(re, v), (None if im is None else _reflect(im, v))
        if self.phases is not None:
            re, im = _phase(re, im, self.phases, inverse=False)
        return ExactMatrix._raw(re, im)

    def conjugate_inverse(self, A: ExactMatrix) -> ExactMatrix:
        """``W* A W``."""
        re, im = _parts(A, self.dim)
        if self.phases is not None:
            re, im = _phase(re, im, self.phases, inverse=True)
        for v in self.vectors:
            re, im = _reflect(re, v), (None if im is None else _reflect(im, v))
        return ExactMatrix._raw(re, im)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "vectors": [list(v) for v in self.vectors],
            "phases": None if self.phases is None else [list(p) for p in self.phases],
        }

    @classmethod
    def from_json(cls, obj) -> "ExactBasis":
        ph = obj.get("phases")
        return cls(
            int(obj["dim"]),
            tuple(tuple(int(x) for x in v) for v in obj["vectors"]),
            None if ph is None else tuple(tuple(int(x) for x in p) for p in ph),
        )


def _parts(A: ExactMatrix, dim: int):
    if A.dim != dim:
        raise ValueError(f"basis has dimension {dim}, matrix {A.dim}")
    return A.re.copy(), (None if A.is_real else A.im.copy())


def _reflect(A: np.ndarray, v: Sequence[int]) -> np.ndarray:
    """``H A H`` for ``H = I - 2 v v^T / s`` by rank-one updates."""
    v = np.array([mpq(x) for x in v], dtype=object)
    s = mpq(int(sum(int(x) * int(x) for x in v)))
    Av = A.dot(v)
    vA = v.dot(A)
    vAv = vA.dot(v)
    two_s = 2 / s
    return A - two_s * np.outer(v, vA) - two_s * np.outer(Av, v) + (4 * vAv / (s * s)) * np.outer(v, v)


def _phase(re, im, phases, inverse: bool):
    """Entrywise ``A_ij * p_i * conj(p_j)`` with ``p`` the phase diagonal (conjugated if inverse)."""
    pr = np.array([mpq(a, c) for a, b, c in phases], dtype=object)
    pi = np.array([mpq(b, c) for a, b, c in phases], dtype=object)
    if inverse:
        pi = -pi
    # w_ij = p_i conj(p_j)
    wr = np.outer(pr, pr) + np.outer(pi, pi)
    wi = np.outer(pi, pr) - np.outer(pr, pi)
    if im is None:
        return re * wr, re * wi
    return re * wr - im * wi, re * wi + im * wr


def random_basis(rng: np.random.Generator, dim: int, reflections: int = 1, complex_: bool = False) -> ExactBasis:
    vecs = []
    for _ in range(reflections):
        v = rng.integers(-3, 4, size=dim)
        if not v.any():
            v[rng.integers(dim)] = 1
        vecs.append(tuple(int(x) for x in v))
    phases = None
    if complex_:
        phases = tuple(_PHASES[int(i)] for i in rng.integers(0, len(_PHASES), size=dim))
    return ExactBasis(dim, tuple(vecs), phases)


def random_tail(rng: np.random.Generator, choices: Sequence[int], max_period: int = 4, cover: bool = False) -> tuple[int, ...]:
    """Random cyclic pattern over ``choices``; with ``cover`` every choice occurs."""
    choices = list(choices)
    if cover:
        period = int(rng.integers(len(choices), len(choices) + max_period))
        pat = choices + [choices[int(i)] for i in rng.integers(0, len(choices), size=period - len(choices))]
        rng.shuffle(pat)
        return tuple(int(x) for x in pat)
    period = int(rng.integers(1, max_period + 1))
    return tuple(int(choices[int(i)]) for i in rng.integers(0, len(choices), size=period))


def align_tail(pattern: Sequence[int], own_dim: int, common: int) -> TailSchedule:
    """Schedule for an operator with corner ``own_dim`` whose entry at global index ``g >= common`` is ``pattern[(g - common) % p]``."""
    return TailSchedule(tuple(pattern)).rotated(own_dim - common)


def random_spectrum(rng: np.random.Generator, m: int, complex_: bool = True, denom: int = 4) -> tuple[GaussianRational, ...]:
    pts: list[GaussianRational] = []
    while len(pts) < m:
        re = mpq(int(rng.integers(-2 * denom, 2 * denom + 1)), denom)
        im = mpq(int(rng.integers(-2 * denom, 2 * denom + 1)), denom) if complex_ else mpq(0)
        z = GaussianRational(re, im)
        if z not in pts:
            pts.append(z)
    return tuple(pts)


@dataclass(frozen=True)
class ProjectionInstance:
    projection: ModelProjection
    basis: ExactBasis
    mask: tuple[bool, ...]


def random_projection(
    rng: np.random.Generator,
    dim: int,
    tail: Sequence[int] | TailSchedule,
    rank: Optional[int] = None,
    reflections: int = 1,
    complex_: bool = False,
    basis: Optional[ExactBasis] = None,
) -> ProjectionInstance:
    """``W diag(mask) W* ⊕ diag(tail)`` with ``rank`` ones in ``mask``."""
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    mask = np.zeros(dim, dtype=bool)
    mask[rng.permutation(dim)[:rank]] = True
    if basis is None:
        basis = random_basis(rng, dim, reflections, complex_)
    D = ExactMatrix.diag([int(b) for b in mask])
    corner = basis.conjugate(D)
    P = ModelProjection(PROJECTION_SPECTRUM, corner, tail, True)
    return ProjectionInstance(P, basis, tuple(bool(b) for b in mask))


def _ones_between(tail: TailSchedule, start: int, stop: int) -> int:
    return sum(tail.index_at(t) for t in range(stop - start))


@dataclass(frozen=True)
class ProjectionPair:
    P: ProjectionInstance
    Q: ProjectionInstance
    codim: int
    common_dim: int


def random_projection_pair(
    rng: np.random.Generator,
    max_dim: int = 32,
    codim: Optional[str] = None,
    complex_prob: float = 0.25,
) -> ProjectionPair:
    """Pair with eventually equal tails.

    ``codim`` is ``None`` for an unconstrained pair, ``"zero"`` or
    ``"nonzero"`` to force the essential codimension.  The predicted value
    is computed from ranks and tail counts, independently of any trace.
    """
    n1 = int(rng.integers(1, max_dim + 1))
    n2 = int(rng.integers(1, max_dim + 1))
    n = max(n1, n2)
    pattern = random_tail(rng, (0, 1))
    t1, t2 = align_tail(pattern, n1, n), align_tail(pattern, n2, n)
    extra1 = _ones_between(t1, n1, n)
    extra2 = _ones_between(t2, n2, n)
    if codim == "zero":
        # r1 + extra1 = r2 + extra2 with 0 <= r2 <= n2; the range is never empty
        lo, hi = max(0, extra2 - extra1), min(n1, n2 + extra2 - extra1)
        r1 = int(rng.integers(lo, hi + 1))
        r2 = r1 + extra1 - extra2
    else:
        r1 = int(rng.integers(0, n1 + 1))
        if codim == "nonzero":
            base = r1 + extra1 - extra2
            r2 = int(rng.choice([r for r in range(n2 + 1) if r != base]))
        else:
            r2 = int(rng.integers(0, n2 + 1))
    cx = bool(rng.random() < complex_prob)
    P = random_projection(rng, n1, t1, r1, reflections=int(rng.integers(1, 3)), complex_=cx)
    Q = random_projection(rng, n2, t2, r2, reflections=int(rng.integers(1, 3)), complex_=cx)
    c = r1 + extra1 - r2 - extra2
    if codim == "zero":
        assert c == 0
    if codim == "nonzero":
        assert c != 0
    return ProjectionPair(P, Q, c, n)


@dataclass(frozen=True)
class OperatorInstance:
    operator: EventuallyDiagonalOperator
    basis: ExactBasis
    diag_indices: tuple[int, ...]


def random_operator(
    rng: np.random.Generator,
    max_dim: int = 32,
    m: Optional[int] = None,
    max_points: int = 4,
    spectrum: Optional[Sequence] = None,
    hull_tail: bool = False,
    dim: Optional[int] = None,
    tail: Optional[TailSchedule] = None,
    complex_prob: float = 0.3,
) -> OperatorInstance:
    """``W diag(λ_{idx}) W* ⊕ diag(tail)``, exactly normal with spectrum in the given points.

    With ``hull_tail`` the tail cycles through every hull vertex of the
    spectrum and nothing else.
    """
    if spectrum is None:
        if m is None:
            m = int(rng.integers(1, max_points + 1))
        spectrum = random_spectrum(rng, m, complex_=bool(rng.random() < 0.7))
    spectrum = tuple(GaussianRational.coerce(z) for z in spectrum)
    m = len(spectrum)
    if dim is None:
        dim = int(rng.integers(1, max_dim + 1))
    idx = tuple(int(i) for i in rng.integers(0, m, size=dim))
    if tail is None:
        if hull_tail:
            verts = hull_vertices(spectrum)
            tail = TailSchedule(random_tail(rng, [spectrum.index(v) for v in verts], cover=True))
        else:
            tail = TailSchedule(random_tail(rng, range(m)))
    basis = random_basis(rng, dim, int(rng.integers(1, 3)), complex_=bool(rng.random() < complex_prob))
    D = ExactMatrix.diag([spectrum[i] for i in idx])
    corner = basis.conjugate(D)
    N = EventuallyDiagonalOperator(spectrum, corner, tail, True)
    return OperatorInstance(N, basis, idx)


def random_diagonal_partner(
    rng: np.random.Generator, N: EventuallyDiagonalOperator, max_dim: int = 32
) -> EventuallyDiagonalOperator:
    """Diagonal operator over ``N.spectrum`` whose tail eventually equals that of ``N``."""
    n2 = int(rng.integers(1, max_dim + 1))
    n = max(N.dim, n2)
    pattern = N.tail.rotated(n - N.dim).pattern
    tail = align_tail(pattern, n2, n)
    idx = [int(i) for i in rng.integers(0, len(N.spectrum), size=n2)]
    return diagonal_operator(N.spectrum, idx, tail)


def random_restricted_unitary(rng: np.random.Generator, dim: int, tol: float = 1e-12) -> RestrictedUnitary:
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    Qm, R = np.linalg.qr(np.eye(dim) + 0.3 * G)
    d = np.diag(R)
    Qm = Qm * (d / np.abs(d))[None, :]
    return RestrictedUnitary(FloatMatrix(Qm, tol))


def generate_instance(kind: str, seed: int, dim: int = 8, m: int = 3, trial: int = 0):
    """Model object of the given kind, determined by ``(seed, trial, dim, m)``.

    ``projection-pair`` returns a :class:`ProjectionPair` with corners of
    size at most ``dim``; ``finite-spectrum-operator`` an
    :class:`OperatorInstance` with ``m`` spectrum points and corner size
    exactly ``dim``; ``restricted-unitary`` a :class:`RestrictedUnitary`.
    """
    if kind not in KINDS:
        raise UsageError(f"unknown instance kind {kind!r}; expected one of {', '.join(KINDS)}")
    if not 1 <= dim <= MAX_DIM:
        raise UsageError(f"corner dimension {dim} must lie in [1, {MAX_DIM}]")
    if not 1 <= m <= MAX_POINTS:
        raise UsageError(f"number of spectrum points {m} must lie in [1, {MAX_POINTS}]")
    rng = rng_for(seed, trial)
    if kind == "projection-pair":
        return random_projection_pair(rng, dim)
    if kind == "finite-spectrum-operator":
        return random_operator(rng, m=m, dim=dim)
    return random_restricted_unitary(rng, dim)
