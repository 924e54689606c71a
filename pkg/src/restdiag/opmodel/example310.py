"""Truncations of the rotation example whose diagonal defect is Hilbert-Schmidt but not trace-class.

``U = [[C, S], [-S, C]]`` with ``C = diag(cos θ_n)`` and ``S = diag(sin θ_n)``.
For square-summable but not summable ``θ`` the perturbation ``U - I`` is
Hilbert-Schmidt, while the diagonal defect built from ``2CS`` only has
square-summable entries.  We report partial sums of both series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

RULES = ("inverse", "power", "zero")


@dataclass(frozen=True)
class Example310Report:
    M: int
    rule: str
    p: float
    hs_partial: float
    tc_partial: float
    hs_monotone: bool
    tc_monotone: bool
    pythagoras_defect: float
    block_defect: float
    hs_sums: np.ndarray
    tc_sums: np.ndarray

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "rule": self.rule,
            "p": self.p,
            "hs_partial": self.hs_partial,
            "tc_partial": self.tc_partial,
            "hs_monotone": self.hs_monotone,
            "tc_monotone": self.tc_monotone,
            "pythagoras_defect": self.pythagoras_defect,
            "block_defect": self.block_defect,
        }


def angles(M: int, rule: str = "inverse", p: float = 1.0) -> np.ndarray:
    if M < 1:
        raise DomainError("truncation M must be a positive integer")
    n = np.arange(1, M + 1, dtype=float)
    if rule == "inverse":
        return 1.0 / n
    if rule == "power":
        if not 0.5 < p <= 1.0:
            raise DomainError(f"exponent p={p} must satisfy 1/2 < p <= 1 for θ in ℓ² but not ℓ¹")
        return n ** (-p)
    if rule == "zero":
        return np.zeros(M)
    raise DomainError(f"unknown angle rule {rule!r}; expected one of {RULES}")


def example_310_diagnostics(M: int, rule: str = "inverse", p: float = 1.0) -> Example310Report:
    theta = angles(M, rule, p)
    c, s = np.cos(theta), np.sin(theta)
    # ||U - I||_2^2 contributions: each 2x2 block [[c-1, s], [-s, c-1]]
    hs_terms = 2 * s**2 + 2 * (1 - c) ** 2
    tc_terms = np.abs(np.sin(2 * theta)) / math.sqrt(2)
    hs = np.cumsum(hs_terms)
    tc = np.cumsum(tc_terms)
    blocks = np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)
    gram = blocks @ np.swapaxes(blocks, -1, -2)
    block_defect = float(np.max(np.linalg.norm(gram - np.eye(2), axis=(-2, -1))))
    return Example310Report(
        M=M,
        rule=rule,
        p=p,
        hs_partial=float(hs[-1]),
        tc_partial=float(tc[-1]),
        hs_monotone=bool(np.all(np.diff(hs) >= 0)),
        tc_monotone=bool(np.all(np.diff(tc) >= 0)),
        pythagoras_defect=float(np.max(np.abs(c**2 + s**2 - 1))),
        block_defect=block_defect,
        hs_sums=hs,
        tc_sums=tc,
    )
