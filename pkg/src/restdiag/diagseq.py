"""Sequences that accumulate summably at a finite set, and the geometry around them.

A :class:`LimSequence` is a finite arbitrary prefix followed by a periodic tail
whose values are points of the set, so its distance series is a finite sum and
membership in ``Lim(X)`` holds by construction.  The renormalized sum, the
Kadison quantities and the separating-line inequality are all computed in
exact rational arithmetic; distances are compared through their squares.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, NoSeparatingLineError
from .exactcore import GaussianRational, Rational, check_distinct, gaussian, rational
from .lattice import Certificate, KModule, build_kmodule, coset_reduce, membership

HALF = rational("1/2")


@dataclass(frozen=True)
class SpectrumSet:
    """Ordered finite set of distinct Gaussian rationals."""

    points: tuple[GaussianRational, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", check_distinct(self.points))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, k) -> GaussianRational:
        return self.points[k]

    def index(self, z) -> int:
        try:
            return self.points.index(gaussian(z))
        except ValueError:
            raise DomainError(f"{z} is not in the spectrum {[str(p) for p in self.points]}") from None

    def as_set(self) -> frozenset:
        return frozenset(self.points)


def spectrum_set(X) -> SpectrumSet:
    return X if isinstance(X, SpectrumSet) else SpectrumSet(tuple(X))


@dataclass(frozen=True)
class TailSchedule:
    """Cyclic pattern of spectrum indices; tail position ``t`` uses ``pattern[t % len]``."""

    pattern: tuple[int, ...]

    def __post_init__(self):
        pattern = tuple(int(i) for i in self.pattern)
        if not pattern:
            raise ValueError("tail pattern must be nonempty")
        if min(pattern) < 0:
            raise ValueError("tail pattern indices must be nonnegative")
        object.__setattr__(self, "pattern", pattern)

    def __len__(self):
        return len(self.pattern)

    def index_at(self, t: int) -> int:
        return self.pattern[t % len(self.pattern)]

    def rotated(self, shift: int) -> "TailSchedule":
        """Schedule seen from ``shift`` positions further along the tail."""
        p = len(self.pattern)
        return TailSchedule(tuple(self.pattern[(t + shift) % p] for t in range(p)))

    def indices(self) -> frozenset:
        return frozenset(self.pattern)


@dataclass(frozen=True)
class LimSequence:
    prefix: tuple[GaussianRational, ...]
    tail: TailSchedule
    spectrum: SpectrumSet

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(gaussian(z) for z in self.prefix))
        object.__setattr__(self, "spectrum", spectrum_set(self.spectrum))
        if not isinstance(self.tail, TailSchedule):
            object.__setattr__(self, "tail", TailSchedule(tuple(self.tail)))
        if max(self.tail.pattern) >= len(self.spectrum):
            raise DomainError("tail pattern refers to an index outside the spectrum")

    def entry(self, n: int) -> GaussianRational:
        """The ``n``-th term (0-based) of the infinite sequence."""
        if n < len(self.prefix):
            return self.prefix[n]
        return self.spectrum[self.tail.index_at(n - len(self.prefix))]

    def tail_values(self) -> frozenset:
        return frozenset(self.spectrum[i] for i in self.tail.indices())


@dataclass(frozen=True)
class Line:
    """The line ``a x + b y = c`` in the plane, with ``(a, b) != (0, 0)``."""

    a: Rational
    b: Rational
    c: Rational

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, rational(getattr(self, name)))
        if self.a == 0 and self.b == 0:
            raise ValueError("degenerate line: a and b both zero")

    def evaluate(self, z) -> Rational:
        z = gaussian(z)
        return self.a * z.re + self.b * z.im - self.c

    def dist2(self, z) -> Rational:
        """Exact squared distance from ``z`` to the line."""
        e = self.evaluate(z)
        return e * e / (self.a * self.a + self.b * self.b)

    def flipped(self) -> "Line":
        return Line(-self.a, -self.b, -self.c)


@dataclass(frozen=True)
class Assignment:
    """Nearest-point indices for the prefix; the tail keeps its own schedule."""

    prefix: tuple[int, ...]
    tail: TailSchedule


def _check_same_spectrum(d: LimSequence, X) -> SpectrumSet:
    X = d.spectrum if X is None else spectrum_set(X)
    if X.points != d.spectrum.points:
        raise DomainError("spectrum argument differs from the sequence's tail spectrum")
    return X


def nearest_assignment(d: LimSequence, X=None) -> Assignment:
    X = _check_same_spectrum(d, X)
    idx = []
    for z in d.prefix:
        best = min(range(len(X)), key=lambda k: ((z - X[k]).abs2(), k))
        idx.append(best)
    return Assignment(tuple(idx), d.tail)


@dataclass(frozen=True)
class RenormalizedSum:
    value: GaussianRational
    reduced: GaussianRational
    certificate: Optional[Certificate]
    assignment: Assignment

    @property
    def is_zero(self) -> bool:
        return self.certificate is not None


def renormalized_sum(
    d: LimSequence,
    X=None,
    K: Optional[KModule] = None,
    assignment: Optional[Assignment] = None,
) -> RenormalizedSum:
    """Sum of ``d_n - x_n`` over the prefix and its class modulo the lattice.

    ``assignment`` overrides the nearest-point choice; any choice of spectrum
    points gives the same class, which is what the invariance tests exercise.
    """
    X = _check_same_spectrum(d, X)
    if K is None:
        K = build_kmodule(X.points)
    elif K.spectrum != X.points:
        raise DomainError("lattice was built from a different spectrum")
    if assignment is None:
        assignment = nearest_assignment(d, X)
    if len(assignment.prefix) != len(d.prefix):
        raise DomainError("assignment length differs from the prefix length")
    total = GaussianRational(0)
    for z, k in zip(d.prefix, assignment.prefix):
        total = total + (z - X[k])
    return RenormalizedSum(total, coset_reduce(K, total), membership(K, total), assignment)


@dataclass(frozen=True)
class KadisonResult:
    a: Rational
    b: Rational
    diff: Optional[Rational]
    integral: bool
    a_infinite: bool = False
    b_infinite: bool = False


def kadison_ab(d: LimSequence, q_mask: Optional[Sequence[bool]] = None) -> KadisonResult:
    """Kadison's ``a = Σ_{d_n<1/2} d_n`` and ``b = Σ_{d_n≥1/2} (1-d_n)``.

    With ``q_mask`` the split is taken along a diagonal projection instead of
    the 1/2 threshold: prefix positions with a true mask count towards ``b``.
    Tail positions always follow the tail values, so they contribute zero.
    """
    if d.spectrum.as_set() != {GaussianRational(0), GaussianRational(1)}:
        raise DomainError("Kadison quantities need the spectrum {0, 1}")
    if q_mask is not None and len(q_mask) != len(d.prefix):
        raise DomainError("q_mask must have one entry per prefix term")
    a = rational(0)
    b = rational(0)
    for n, z in enumerate(d.prefix):
        if z.im != 0:
            raise DomainError(f"entry {n} = {z} is not real")
        x = z.re
        if x < 0 or x > 1:
            raise DomainError(f"entry {n} = {x} lies outside [0, 1]")
        upper = x >= HALF if q_mask is None else bool(q_mask[n])
        if upper:
            b += 1 - x
        else:
            a += x
    diff = a - b
    return KadisonResult(a, b, diff, diff.denominator == 1)


def _cross(o: GaussianRational, p: GaussianRational, q: GaussianRational) -> Rational:
    return (p.re - o.re) * (q.im - o.im) - (p.im - o.im) * (q.re - o.re)


def hull_vertices(X) -> list[GaussianRational]:
    """Extreme points of the convex hull, counterclockwise from the lexicographically least."""
    pts = sorted(spectrum_set(X).points, key=lambda z: (z.re, z.im))
    if len(pts) <= 2:
        return pts
    lower: list[GaussianRational] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[GaussianRational] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def separating_line(X, k: int) -> Line:
    """Line with ``X[k]`` strictly on its positive side and every other point strictly negative.

    The normal is perpendicular to the chord joining the two hull neighbours
    of ``X[k]`` (or points from the other hull vertex when the hull is a
    segment).  The offset sits halfway between ``X[k]`` and the highest
    remaining point, so when all points are hull vertices the line passes
    through the midpoints of the two incident edges.
    """
    X = spectrum_set(X)
    lam = X[k]
    verts = hull_vertices(X)
    if lam not in verts:
        raise NoSeparatingLineError(f"{lam} is not a vertex of the convex hull")
    others = [p for j, p in enumerate(X) if j != k]
    if not others:
        return Line(1, 0, lam.re - 1)
    if len(verts) == 2:
        mu = verts[1] if verts[0] == lam else verts[0]
        nx, ny = lam.re - mu.re, lam.im - mu.im
    else:
        i = verts.index(lam)
        prev, nxt = verts[i - 1], verts[(i + 1) % len(verts)]
        # rotate the chord direction by -90 degrees; with a counterclockwise
        # hull this points from the chord towards lam
        nx, ny = nxt.im - prev.im, prev.re - nxt.re
    h_lam = nx * lam.re + ny * lam.im
    h_rest = max(nx * p.re + ny * p.im for p in others)
    assert h_rest < h_lam
    line = Line(nx, ny, (h_lam + h_rest) / 2)
    assert line.evaluate(lam) > 0 and all(line.evaluate(p) < 0 for p in others)
    return line


def convexity_bound_check(
    lambdas: Sequence, coeffs: Sequence, k: int, L: Line
) -> bool:
    """Exact test of ``Σ_{j≠k} c_j ≤ |x - λ_k| / dist(λ_k, L)`` for ``x = Σ c_j λ_j``.

    Both sides are squared.  Raises :class:`DomainError` naming the first
    hypothesis that fails.
    """
    lams = [gaussian(z) for z in lambdas]
    cs = [rational(c) for c in coeffs]
    if len(lams) != len(cs):
        raise DomainError("lambdas and coeffs differ in length")
    if len(set(lams)) != len(lams):
        raise DomainError("hypothesis failed: the points must be distinct")
    if not 0 <= k < len(lams):
        raise DomainError("hypothesis failed: k is out of range")
    if any(c < 0 for c in cs):
        raise DomainError("hypothesis failed: coefficients must be nonnegative")
    if sum(cs) != 1:
        raise DomainError("hypothesis failed: coefficients must sum to 1")
    if L.evaluate(lams[k]) <= 0 or any(L.evaluate(z) >= 0 for j, z in enumerate(lams) if j != k):
        raise DomainError("hypothesis failed: L does not separate lambda_k from the rest")
    x = GaussianRational(0)
    for c, z in zip(cs, lams):
        x = x + z * c
    if L.evaluate(x) <= 0:
        raise DomainError("hypothesis failed: x is not strictly between lambda_k and L")
    rest = sum((c for j, c in enumerate(cs) if j != k), rational(0))
    return rest * rest * L.dist2(lams[k]) <= (x - lams[k]).abs2()


@dataclass(frozen=True)
class SummabilityTrace:
    """Partial sums of ``|f(d_n)|`` and ``dist(d_n, X)`` for a streamed sample.

    These are trends only; convergence of an arbitrary stream is not decided.
    """

    f_partial: np.ndarray
    dist_partial: np.ndarray

    def trend(self) -> dict:
        n = len(self.dist_partial)
        if n == 0:
            return {"n": 0, "f_sum": 0.0, "dist_sum": 0.0, "dist_second_half": 0.0}
        half = n // 2
        before = self.dist_partial[half - 1] if half else 0.0
        return {
            "n": n,
            "f_sum": float(self.f_partial[-1]),
            "dist_sum": float(self.dist_partial[-1]),
            "dist_second_half": float(self.dist_partial[-1] - before),
        }


def arveson_summability_partial(samples: Sequence[complex], X) -> SummabilityTrace:
    X = spectrum_set(X)
    z = np.asarray(samples, dtype=complex)
    lam = np.array([complex(p) for p in X.points])
    if z.size == 0:
        empty = np.zeros(0)
        return SummabilityTrace(empty, empty)
    gaps = np.abs(z[:, None] - lam[None, :])
    f = np.prod(gaps, axis=1)
    dist = gaps.min(axis=1)
    return SummabilityTrace(np.cumsum(f), np.cumsum(dist))


__all__ = [
    "Assignment",
    "KadisonResult",
    "LimSequence",
    "Line",
    "RenormalizedSum",
    "SpectrumSet",
    "SummabilityTrace",
    "TailSchedule",
    "arveson_summability_partial",
    "convexity_bound_check",
    "hull_vertices",
    "kadison_ab",
    "nearest_assignment",
    "renormalized_sum",
    "separating_line",
    "spectrum_set",
]
