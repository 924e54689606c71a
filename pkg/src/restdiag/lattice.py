"""The Z-module of integer combinations of a spectrum whose coefficients sum to zero.

For a Gaussian-rational spectrum ``X = (λ_1, ..., λ_m)`` the module is
generated by the differences ``λ_1 - λ_j``.  After multiplying by a common
denominator ``D`` these become integer vectors in Z^2, so membership, coset
representatives and rank all reduce to a column Hermite normal form of a
2 x (m-1) integer matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import gmpy2

from .exactcore import GaussianRational, Rational, check_distinct, gaussian


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    g, s, t = gmpy2.gcdext(a, b)
    return int(g), int(s), int(t)


def hermite_normal_form(M: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Column Hermite normal form ``H = M T`` of an integer matrix with at most two rows.

    ``H`` is lower echelon with positive pivots, entries left of a pivot are
    reduced into ``[0, pivot)``, and zero columns come last.  ``T`` is
    unimodular and records the column operations.

    >>> hermite_normal_form([[2, 4], [0, 0]])[0]
    [[2, 0], [0, 0]]
    """
    H = [[int(x) for x in row] for row in M]
    rows = len(H)
    if rows > 2:
        raise ValueError("hermite_normal_form handles at most two rows")
    n = len(H[0]) if rows else 0
    if any(len(r) != n for r in H):
        raise ValueError("ragged integer matrix")
    T = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(i, j, a, b, c, d):
        # col_i <- a col_i + b col_j ; col_j <- c col_i + d col_j
        for mat in (H, T):
            for row in mat:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    def negate(i):
        for mat in (H, T):
            for row in mat:
                row[i] = -row[i]

    def subtract(j, q, p):
        # col_j <- col_j - q col_p
        for mat in (H, T):
            for row in mat:
                row[j] -= q * row[p]

    pivot = 0
    for r in range(rows):
        if pivot >= n:
            break
        for j in range(pivot + 1, n):
            b = H[r][j]
            if b == 0:
                continue
            a = H[r][pivot]
            g, x, y = _xgcd(a, b)
            colop(pivot, j, x, y, -b // g, a // g)
        if H[r][pivot] == 0:
            continue
        if H[r][pivot] < 0:
            negate(pivot)
        for j in range(pivot):
            q = H[r][j] // H[r][pivot]
            if q:
                subtract(j, q, pivot)
        pivot += 1
    return H, T


def integer_determinant(T: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    A = [[int(x) for x in row] for row in T]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


@dataclass(frozen=True)
class Certificate:
    """Integers ``c_1..c_m`` summing to zero with ``Σ c_k λ_k`` equal to a target."""

    coefficients: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if sum(coeffs) != 0:
            raise ValueError(f"certificate coefficients {coeffs} do not sum to zero")

    def evaluate(self, spectrum: Sequence) -> GaussianRational:
        pts = [gaussian(p) for p in spectrum]
        if len(pts) != len(self.coefficients):
            raise ValueError("certificate length does not match spectrum")
        total = GaussianRational(0)
        for c, lam in zip(self.coefficients, pts):
            total = total + lam * c
        return total

    def to_json(self) -> list[int]:
        return list(self.coefficients)


@dataclass(frozen=True)
class KModule:
    """Presentation of the lattice generated by ``λ_1 - λ_j`` for a fixed spectrum order.

    ``generators`` are the integer vectors ``D (λ_1 - λ_{j+1})`` as (re, im);
    ``hermite`` holds all HNF columns (zero ones included) and ``transform``
    the unimodular matrix with ``hermite = generators · transform``.
    """

    spectrum: tuple[GaussianRational, ...]
    generators: tuple[tuple[int, int], ...]
    denom: int
    hermite: tuple[tuple[int, int], ...]
    transform: tuple[tuple[int, ...], ...]
    rank: int

    @property
    def hermite_basis(self) -> tuple[tuple[int, int], ...]:
        return self.hermite[: self.rank]

    def pivot_rows(self) -> list[int]:
        return [next(r for r in range(2) if col[r] != 0) for col in self.hermite_basis]

    def to_json(self) -> dict:
        return {
            "spectrum": [p.to_json() for p in self.spectrum],
            "generators": [list(g) for g in self.generators],
            "denom": self.denom,
            "hermite_basis": [list(b) for b in self.hermite_basis],
            "rank": self.rank,
        }


def build_kmodule(X: Sequence) -> KModule:
    pts = check_distinct(X)
    diffs = [pts[0] - lam for lam in pts[1:]]
    D = 1
    for z in diffs:
        D = math.lcm(D, int(z.re.denominator), int(z.im.denominator))
    gens = tuple((int(z.re * D), int(z.im * D)) for z in diffs)
    M = [[g[0] for g in gens], [g[1] for g in gens]]
    H, T = hermite_normal_form(M)
    cols = tuple((H[0][j], H[1][j]) for j in range(len(gens)))
    rank = sum(1 for c in cols if c != (0, 0))
    return KModule(
        spectrum=pts,
        generators=gens,
        denom=D,
        hermite=cols,
        transform=tuple(tuple(row) for row in T),
        rank=rank,
    )


def _scaled(K: KModule, z) -> list[Rational]:
    z = gaussian(z)
    return [z.re * K.denom, z.im * K.denom]


def membership(K: KModule, z) -> Optional[Certificate]:
    """Certificate that ``z`` lies in the module, or ``None`` when it does not."""
    w = _scaled(K, z)
    if any(x.denominator != 1 for x in w):
        return None
    w = [int(x) for x in w]
    y = [0] * len(K.generators)
    for idx, p in enumerate(K.pivot_rows()):
        col = K.hermite[idx]
        q, rem = divmod(w[p], col[p])
        if rem:
            return None
        y[idx] = q
        w = [w[0] - q * col[0], w[1] - q * col[1]]
    if w != [0, 0]:
        return None
    n = len(y)
    a = [sum(K.transform[i][j] * y[j] for j in range(n)) for i in range(n)]
    cert = Certificate((sum(a),) + tuple(-aj for aj in a))
    assert cert.evaluate(K.spectrum) == gaussian(z), "certificate back-substitution failed"
    return cert


def coset_reduce(K: KModule, z) -> GaussianRational:
    """Representative of ``z`` modulo the module, reduced along each Hermite pivot."""
    w = _scaled(K, z)
    for idx, p in enumerate(K.pivot_rows()):
        col = K.hermite[idx]
        q = math.floor(w[p] / col[p])
        w = [w[0] - q * col[0], w[1] - q * col[1]]
    return GaussianRational(w[0] / K.denom, w[1] / K.denom)


def independence_check(K: KModule) -> bool:
    """True iff the differences ``λ_1 - λ_j`` are linearly independent."""
    return K.rank == len(K.generators)


__all__ = [
    "Certificate",
    "KModule",
    "build_kmodule",
    "coset_reduce",
    "hermite_normal_form",
    "independence_check",
    "integer_determinant",
    "membership",
]
