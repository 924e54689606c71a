"""Diagonal differences ``E(UNU* - N)`` and ``E(N - N')`` and their traces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError, NotTraceClassError
from ..exactcore import GaussianRational
from ..lattice import Certificate, KModule, build_kmodule, membership
from .codim import essential_codimension
from .model import (
    EventuallyDiagonalOperator,
    RestrictedUnitary,
    diagonal_indicator,
    require_compact,
    spectral_projection,
)


@dataclass(frozen=True)
class ExpectationDelta:
    """Diagonal of ``E(UNU* - N)`` on the leading block (it vanishes beyond).

    ``first_term`` is the diagonal of ``KN + NK*`` and ``second_term`` that of
    ``KNK*`` where ``K = U - I``; for diagonal ``N`` the first term equals
    ``E(K + K*) N``, which is ``first_term_diagonal_form``.
    """

    diagonal: np.ndarray
    trace: complex
    first_term: np.ndarray
    second_term: np.ndarray
    first_term_diagonal_form: np.ndarray
    n_is_diagonal: bool
    block_size: int


def expectation_delta(N: EventuallyDiagonalOperator, U: RestrictedUnitary) -> ExpectationDelta:
    size = max(N.dim, U.dim)
    n = N.block_float(size)
    u = U.block(size)
    k = u - np.eye(size)
    delta = np.diag(u @ n @ u.conj().T - n).copy()
    first = np.diag(k @ n + n @ k.conj().T).copy()
    second = np.diag(k @ n @ k.conj().T).copy()
    kd = np.diag(k)
    literal = (kd + kd.conj()) * np.diag(n)
    return ExpectationDelta(
        diagonal=delta,
        trace=complex(delta.sum()),
        first_term=first,
        second_term=second,
        first_term_diagonal_form=literal,
        n_is_diagonal=N.is_diagonal(),
        block_size=size,
    )


@dataclass(frozen=True)
class ArvesonIdentity:
    """Exact ``trace E(N - N')`` together with the codimensions that account for it.

    ``codims[k]`` is ``[P_k : Q_k]`` for the ``k``-th point of ``N.spectrum``.
    """

    trace: GaussianRational
    codims: tuple[int, ...]
    certificate: Certificate
    lattice: KModule

    def codim_certificate(self) -> Certificate:
        return Certificate(self.codims)


def expectation_delta_diag(
    N: EventuallyDiagonalOperator,
    N_prime: EventuallyDiagonalOperator,
    lattice: Optional[KModule] = None,
) -> ArvesonIdentity:
    """Exact trace of ``E(N - N')`` for a diagonal ``N'`` and its codimension expansion.

    Raises:
        NotTraceClassError: the tails of ``N`` and ``N'`` never agree.
        DomainError: ``N'`` is not diagonal or takes a value outside ``spec(N)``.
    """
    if not N.finite_spectrum:
        raise DomainError("N must be a finite-spectrum operator")
    if not N_prime.is_diagonal():
        raise DomainError("N' must be diagonal")
    spec = N.spectrum.as_set()
    values = set(N_prime.corner.diagonal()) | set(N_prime.ess_spectrum())
    if not values <= spec:
        bad = sorted(str(v) for v in values - spec)
        raise DomainError(f"N' takes values {bad} outside spec(N)")
    size = require_compact(N, N_prime, NotTraceClassError)
    trace = N.block_trace(size) - N_prime.block_trace(size)

    codims = tuple(
        essential_codimension(spectral_projection(N, lam), diagonal_indicator(N_prime, lam)).value
        for lam in N.spectrum
    )
    expansion = GaussianRational(0)
    for c, lam in zip(codims, N.spectrum):
        expansion = expansion + lam * c
    assert expansion == trace, f"trace {trace} != codimension expansion {expansion}"
    K = build_kmodule(N.spectrum.points) if lattice is None else lattice
    cert = membership(K, trace)
    assert cert is not None, f"trace {trace} is not in the lattice"
    return ArvesonIdentity(trace, codims, cert, K)
