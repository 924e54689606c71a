"""Restricted diagonalization of finite-spectrum model operators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..diagseq import hull_vertices
from ..errors import PreconditionError, ToleranceError
from ..exactcore import DEFAULT_TOL, GaussianRational
from ..lattice import build_kmodule, independence_check
from .codim import AtomMove, conjugate_projections, essential_codimension, redistribute
from .model import (
    EventuallyDiagonalOperator,
    ModelProjection,
    RestrictedUnitary,
    diagonal_indicator,
    diagonal_operator,
    diagonal_projection,
    spectral_projections,
)
from .trace import expectation_delta_diag


def conjugation_residual(U: RestrictedUnitary, N, N_prime) -> float:
    """Frobenius norm of ``U N U* - N'`` on the common block."""
    size = max(U.dim, N.dim, N_prime.dim)
    u = U.block(size)
    return float(np.linalg.norm(u @ N.block_float(size) @ u.conj().T - N_prime.block_float(size), "fro"))


@dataclass(frozen=True)
class Diagonalization:
    unitary: RestrictedUnitary
    diagonal: EventuallyDiagonalOperator
    residual: float
    offdiag_residual: float
    initial_codims: tuple[int, ...]
    moves: tuple[AtomMove, ...] = field(default=())

    def __iter__(self):
        return iter((self.unitary, self.diagonal))


def _greedy_targets(P: list[ModelProjection]) -> list[int]:
    """For each corner index the ``k`` with the largest ``<P_k e_i, e_i>``, ties to lower ``k``."""
    diags = [p.corner.diagonal() for p in P]
    n = P[0].dim
    owner = []
    for i in range(n):
        best = 0
        for k in range(1, len(P)):
            if diags[k][i].re > diags[best][i].re:
                best = k
        owner.append(best)
    return owner


def restricted_diagonalize(N: EventuallyDiagonalOperator, tol: float = DEFAULT_TOL) -> Diagonalization:
    """Unitary ``U = I + K`` (``K`` finite rank) and diagonal ``N'`` with ``U N U* = N'``.

    Diagonal candidates come from a greedy assignment of corner atoms to the
    spectral projections; their codimensions are then balanced to zero by
    :func:`redistribute` and the unitary is built by
    :func:`conjugate_projections`.
    """
    if not N.finite_spectrum:
        raise PreconditionError("restricted diagonalization needs a finite-spectrum operator")
    P = spectral_projections(N)
    owner = _greedy_targets(P)
    Q = [
        diagonal_projection([o == k for o in owner], p.tail.pattern) for k, p in enumerate(P)
    ]
    initial = tuple(essential_codimension(p, q).value for p, q in zip(P, Q))
    log: list[AtomMove] = []
    Q_final = redistribute(list(zip(P, Q)), log=log)
    U = conjugate_projections(list(zip(P, Q_final)), tol)

    size = Q_final[0].dim
    idx = [next(k for k, q in enumerate(Q_final) if q.corner[i, i] == 1) for i in range(size)]
    N_ext = N.extended(size)
    N_prime = diagonal_operator(N.spectrum, idx, N_ext.tail)

    u = U.block(size)
    conj = u @ N_ext.block_float(size) @ u.conj().T
    residual = float(np.linalg.norm(conj - N_prime.block_float(size), "fro"))
    offdiag = float(np.linalg.norm(conj - np.diag(np.diag(conj)), "fro"))
    scale = 1 + N.corner_frobenius()
    if residual > tol * scale:
        raise ToleranceError(f"diagonalization residual {residual:.3e} exceeds {tol * scale:.3e}")
    return Diagonalization(U, N_prime, residual, offdiag, initial, tuple(log))


@dataclass(frozen=True)
class DiagonalizabilityReport:
    lim_member: bool
    ess_spectrum: frozenset
    hull_vertices: tuple[GaussianRational, ...]
    verdict: bool
    cross_check_residual: Optional[float] = None


def is_restricted_diagonalizable(
    N: EventuallyDiagonalOperator, cross_check: bool = True, tol: float = DEFAULT_TOL
) -> DiagonalizabilityReport:
    """Whether the diagonal of ``N`` accumulates summably at the hull vertices of its essential spectrum.

    The prefix of a model diagonal is finite, so membership only depends on
    the tail values.  When the verdict is true and ``cross_check`` is set,
    :func:`restricted_diagonalize` is run and its residual recorded.
    """
    if not N.finite_spectrum:
        raise PreconditionError("needs a finite-spectrum operator")
    ess = N.ess_spectrum()
    verts = tuple(hull_vertices(sorted(ess, key=lambda z: (z.re, z.im))))
    lim_member = ess <= set(verts)
    verdict = lim_member and ess == frozenset(verts)
    residual = None
    if verdict and cross_check:
        residual = restricted_diagonalize(N, tol).residual
    return DiagonalizabilityReport(lim_member, ess, verts, verdict, residual)


@dataclass(frozen=True)
class ConverseReport:
    hypothesis_met: bool
    unitary: Optional[RestrictedUnitary]
    residual: Optional[float]
    codims: Optional[tuple[int, ...]]
    reason: str = ""


def full_rank_converse_check(
    N: EventuallyDiagonalOperator,
    N_prime: EventuallyDiagonalOperator,
    tol: float = DEFAULT_TOL,
) -> ConverseReport:
    """Recover ``U`` with ``U N U* = N'`` from a zero trace when the differences are independent.

    Returns a report with ``hypothesis_met=False`` (and no unitary) when the
    generators ``λ_1 - λ_j`` are dependent.

    Raises:
        PreconditionError: ``trace E(N - N')`` is nonzero.
    """
    K = build_kmodule(N.spectrum.points)
    if not independence_check(K):
        return ConverseReport(
            False, None, None, None,
            reason=f"differences of the spectrum have rank {K.rank} < {len(N.spectrum) - 1}",
        )
    ident = expectation_delta_diag(N, N_prime, K)
    if ident.trace != 0:
        raise PreconditionError(f"trace E(N - N') = {ident.trace} is not zero")
    assert all(c == 0 for c in ident.codims), "independence forces every codimension to vanish"
    P = spectral_projections(N)
    Q = [diagonal_indicator(N_prime, lam) for lam in N.spectrum]
    U = conjugate_projections(list(zip(P, Q)), tol)
    residual = conjugation_residual(U, N, N_prime)
    if residual > tol * (1 + N.corner_frobenius()):
        raise ToleranceError(f"conjugation residual {residual:.3e} too large")
    return ConverseReport(True, U, residual, ident.codims)
