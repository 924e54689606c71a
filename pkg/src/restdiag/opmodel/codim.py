"""Essential codimension of model projections and the constructions that use it."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import (
    DomainError,
    IllConditionedWarning,
    ObstructionError,
    PreconditionError,
    ToleranceError,
)
from ..exactcore import DEFAULT_TOL, ExactMatrix, FloatMatrix, numeric_rank
from .model import (
    PROJECTION_SPECTRUM,
    EventuallyDiagonalOperator,
    ModelProjection,
    RestrictedUnitary,
    diagonal_projection,
    require_compact,
)

EXACT_TRACE = "exact-trace"
FREDHOLM_ORACLE = "fredholm-oracle"


@dataclass(frozen=True)
class CodimResult:
    value: int
    method: str


def _check_projection(P):
    if not isinstance(P, EventuallyDiagonalOperator) or P.spectrum.points != PROJECTION_SPECTRUM.points:
        raise DomainError("expected a model projection over the spectrum (0, 1)")


def essential_codimension(P: ModelProjection, Q: ModelProjection) -> CodimResult:
    """``[P:Q]`` as the exact trace of ``P - Q`` over the block where they can differ."""
    _check_projection(P)
    _check_projection(Q)
    size = require_compact(P, Q)
    t = P.block_trace(size) - Q.block_trace(size)
    if t.im != 0 or t.re.denominator != 1:
        raise ArithmeticError(f"trace(P - Q) = {t} is not an integer; inputs are not projections")
    return CodimResult(int(t.re), EXACT_TRACE)


def _range_basis(block: np.ndarray, tol: float) -> np.ndarray:
    r = numeric_rank(FloatMatrix(block, tol))
    w, v = np.linalg.eigh((block + block.conj().T) / 2)
    return v[:, np.argsort(w)[::-1][:r]]


def _rank_with_warning(M: np.ndarray, tol: float) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] > 0:
        thresh = tol * s[0]
        if np.any((s > thresh / 10) & (s < thresh * 10)):
            warnings.warn(
                "singular value within a factor 10 of the rank threshold",
                IllConditionedWarning,
                stacklevel=3,
            )
    return numeric_rank(FloatMatrix(M if M.shape[0] == M.shape[1] else _square(M), tol), tol)


def _square(M: np.ndarray) -> np.ndarray:
    n = max(M.shape)
    out = np.zeros((n, n), dtype=complex)
    out[: M.shape[0], : M.shape[1]] = M
    return out


def essential_codimension_fredholm(
    P: ModelProjection, Q: ModelProjection, tol: float = DEFAULT_TOL
) -> CodimResult:
    """``[P:Q]`` as the index of ``QP : PH -> QH``, from numeric ranks on the common block.

    Independent of :func:`essential_codimension`: orthonormal bases of the two
    ranges come from float eigendecompositions and the kernel dimensions of
    the compressed map and its adjoint from singular values.
    """
    _check_projection(P)
    _check_projection(Q)
    size = require_compact(P, Q)
    Bp = _range_basis(P.block_float(size), tol)
    Bq = _range_basis(Q.block_float(size), tol)
    rp, rq = Bp.shape[1], Bq.shape[1]
    M = Bq.conj().T @ Bp
    rank_qp = _rank_with_warning(M, tol) if rp and rq else 0
    rank_pq = _rank_with_warning(M.conj().T, tol) if rp and rq else 0
    kernel = rp - rank_qp
    cokernel = rq - rank_pq
    return CodimResult(kernel - cokernel, FREDHOLM_ORACLE)


def _diag_mask(Q: ModelProjection, size: int) -> list[bool]:
    if not Q.is_diagonal():
        raise PreconditionError("redistribution needs diagonal target projections")
    Qe = Q.extended(size)
    return [z == 1 for z in Qe.corner.diagonal()]


@dataclass(frozen=True)
class AtomMove:
    source: int
    target: int
    atoms: tuple[int, ...]


def redistribute(
    pairs: Sequence[tuple[ModelProjection, ModelProjection]],
    log: Optional[list] = None,
) -> list[ModelProjection]:
    """Shift diagonal atoms between the ``Q_k`` until every ``[P_k:Q'_k]`` is zero.

    Repeatedly takes the first ``i`` with negative and first ``j`` with
    positive codimension and moves ``min(-[P_i:Q_i], [P_j:Q_j])`` atoms, the
    lowest-indexed ones of ``Q_i``, over to ``Q_j``.  Each move is appended to
    ``log`` when given.
    """
    pairs = list(pairs)
    if not pairs:
        return []
    codims = [essential_codimension(P, Q).value for P, Q in pairs]
    if sum(codims) != 0:
        raise PreconditionError(f"essential codimensions {codims} do not sum to zero")
    size = max(max(P.dim, Q.dim) for P, Q in pairs)
    masks = [_diag_mask(Q, size) for _, Q in pairs]
    tails = [Q.extended(size).tail.pattern for _, Q in pairs]
    for i in range(size):
        if sum(m[i] for m in masks) > 1:
            raise PreconditionError(f"target projections overlap at basis index {i}")

    while True:
        neg = next((k for k, c in enumerate(codims) if c < 0), None)
        pos = next((k for k, c in enumerate(codims) if c > 0), None)
        if neg is None or pos is None:
            break
        r = min(-codims[neg], codims[pos])
        atoms = [i for i, b in enumerate(masks[neg]) if b][:r]
        assert len(atoms) == r, "not enough atoms to move"
        for i in atoms:
            masks[neg][i] = False
            masks[pos][i] = True
        codims[neg] += r
        codims[pos] -= r
        if log is not None:
            log.append(AtomMove(neg, pos, tuple(atoms)))
    assert all(c == 0 for c in codims)
    return [diagonal_projection(m, t) for m, t in zip(masks, tails)]


def _joint_basis(blocks: Sequence[np.ndarray], label_tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal eigenbasis of ``Σ (k+1) P_k`` with each vector labelled by its ``k``."""
    A = sum((k + 1) * b for k, b in enumerate(blocks))
    A = (A + A.conj().T) / 2
    w, v = np.linalg.eigh(A)
    labels = np.rint(w).astype(int) - 1
    if np.any(np.abs(w - np.rint(w)) > label_tol) or np.any(labels < 0) or np.any(labels >= len(blocks)):
        raise PreconditionError("projections are not mutually orthogonal with sum I")
    return v, labels


def conjugate_projections(
    pairs: Sequence[tuple[ModelProjection, ModelProjection]],
    tol: float = DEFAULT_TOL,
) -> RestrictedUnitary:
    """Unitary ``U = I ⊕ W`` with ``U P_k U* = Q_k`` for every pair.

    If the ``P_k`` do not already sum to the identity, the complementary pair
    ``(I - ΣP_k, I - ΣQ_k)`` is added.

    Raises:
        ObstructionError: some ``[P_k:Q_k]`` is nonzero, so no such unitary exists.
        NotCompactError: some pair has tails that never agree.
    """
    pairs = list(pairs)
    if not pairs:
        raise PreconditionError("need at least one pair")
    for k, (P, Q) in enumerate(pairs):
        c = essential_codimension(P, Q).value
        if c != 0:
            raise ObstructionError(k, c)
    size = max(max(P.dim, Q.dim) for P, Q in pairs)
    Pe = [P.extended(size) for P, _ in pairs]
    Qe = [Q.extended(size) for _, Q in pairs]
    if all(p.corner == q.corner for p, q in zip(Pe, Qe)):
        return RestrictedUnitary.identity(size, tol)

    eye = ExactMatrix.identity(size)
    sum_p = sum((p.corner for p in Pe[1:]), Pe[0].corner)
    sum_q = sum((q.corner for q in Qe[1:]), Qe[0].corner)
    p_blocks = [p.corner.to_complex() for p in Pe]
    q_blocks = [q.corner.to_complex() for q in Qe]
    if sum_p != eye or sum_q != eye:
        p_blocks.append((eye - sum_p).to_complex())
        q_blocks.append((eye - sum_q).to_complex())

    Vp, lp = _joint_basis(p_blocks)
    Vq, lq = _joint_basis(q_blocks)
    W = np.zeros((size, size), dtype=complex)
    for k in range(len(p_blocks)):
        bp, bq = Vp[:, lp == k], Vq[:, lq == k]
        if bp.shape[1] != bq.shape[1]:
            raise ObstructionError(k, bp.shape[1] - bq.shape[1])
        W += bq @ bp.conj().T

    U = RestrictedUnitary(FloatMatrix(W, tol))
    for k, (p, q) in enumerate(zip(p_blocks, q_blocks)):
        err = np.linalg.norm(W @ p @ W.conj().T - q, "fro")
        if err > tol:
            raise ToleranceError(f"pair {k}: conjugation residual {err:.3e} exceeds {tol:.1e}")
    return U
