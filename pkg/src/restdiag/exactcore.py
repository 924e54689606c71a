"""Exact Gaussian-rational arithmetic and the small float helpers built on it.

Exact values use ``gmpy2.mpq`` rationals.  Matrices keep their real and
imaginary parts as numpy object arrays of ``mpq`` so that products run through
numpy's loops while every entry stays exact.  Floats only appear in
:class:`FloatMatrix`, which always travels with its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from gmpy2 import mpq

from .errors import InvalidSpectrumError, NumericInputError, ShapeError

Rational = type(mpq())

DEFAULT_TOL = 1e-10

_ZERO = mpq(0)
_ONE = mpq(1)


def rational(x) -> Rational:
    """Coerce ``x`` to an exact rational.

    Accepts ``mpq``, ``int``, :class:`fractions.Fraction` and strings such as
    ``"-3/4"`` or ``"0.25"``.  Floats are refused since they are rarely the
    value the caller meant.
    """
    if isinstance(x, Rational):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        try:
            return mpq(x.strip())
        except ValueError as exc:
            raise ValueError(f"cannot parse rational from {x!r}") from exc
    if isinstance(x, float):
        raise TypeError(f"refusing float {x!r}; pass a string or Fraction")
    try:
        return mpq(x)
    except (TypeError, ValueError) as exc:
        raise TypeError(f"cannot convert {type(x).__name__} to a rational") from exc


def format_rational(q) -> str:
    """``"p/q"``, or ``"p"`` when the denominator is one."""
    return str(rational(q))


class GaussianRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", rational(re))
        object.__setattr__(self, "im", rational(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, dict):
            return cls(x.get("re", 0), x.get("im", 0))
        if isinstance(x, (list, tuple)) and len(x) == 2:
            return cls(x[0], x[1])
        if isinstance(x, complex):
            raise TypeError(f"refusing complex float {x!r}")
        return cls(x, 0)

    def conj(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def abs2(self) -> Rational:
        """Exact squared modulus."""
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im == 0

    def __add__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        n = o.abs2()
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        p = self * o.conj()
        return GaussianRational(p.re / n, p.im / n)

    def __rtruediv__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational('{self.re}', '{self.im}')"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def to_json(self) -> dict:
        return {"re": format_rational(self.re), "im": format_rational(self.im)}


def _coerce_or_none(x):
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Rational, Fraction)) and not isinstance(x, bool):
        return GaussianRational(x, 0)
    return None


def gaussian(x) -> GaussianRational:
    return GaussianRational.coerce(x)


def check_distinct(points: Sequence[GaussianRational]) -> tuple:
    """Return ``points`` as a tuple, raising if empty or repeated."""
    pts = tuple(gaussian(p) for p in points)
    if not pts:
        raise InvalidSpectrumError("spectrum must be nonempty")
    if len(set(pts)) != len(pts):
        raise InvalidSpectrumError(f"repeated spectrum points in {[str(p) for p in pts]}")
    return pts


def _obj_zeros(shape) -> np.ndarray:
    return np.full(shape, _ZERO, dtype=object)


def _all_zero(a: np.ndarray) -> bool:
    return all(x == 0 for x in a.flat)


class ExactMatrix:
    """Square matrix of Gaussian rationals.

    Immutable.  ``_im`` is ``None`` for real matrices, which lets products of
    real matrices skip three of the four real multiplications.
    """

    __slots__ = ("_re", "_im")

    def __init__(self, rows: Iterable[Iterable]):
        rows = [[gaussian(x) for x in r] for r in rows]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ShapeError("ExactMatrix needs a nonempty square array of entries")
        re = np.empty((n, n), dtype=object)
        im = np.empty((n, n), dtype=object)
        for i, r in enumerate(rows):
            for j, z in enumerate(r):
                re[i, j] = z.re
                im[i, j] = z.im
        self._set(re, im)

    def _set(self, re, im):
        re.flags.writeable = False
        if im is not None and _all_zero(im):
            im = None
        if im is not None:
            im.flags.writeable = False
        object.__setattr__(self, "_re", re)
        object.__setattr__(self, "_im", im)

    def __setattr__(self, name, value):
        raise AttributeError("ExactMatrix is immutable")

    @classmethod
    def _raw(cls, re: np.ndarray, im: np.ndarray | None) -> "ExactMatrix":
        m = object.__new__(cls)
        m._set(re, im)
        return m

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        re = _obj_zeros((n, n))
        for i in range(n):
            re[i, i] = _ONE
        return cls._raw(re, None)

    @classmethod
    def zeros(cls, n: int) -> "ExactMatrix":
        return cls._raw(_obj_zeros((n, n)), None)

    @classmethod
    def diag(cls, entries: Sequence) -> "ExactMatrix":
        entries = [gaussian(z) for z in entries]
        n = len(entries)
        if n == 0:
            raise ShapeError("diag needs at least one entry")
        re = _obj_zeros((n, n))
        im = _obj_zeros((n, n))
        for i, z in enumerate(entries):
            re[i, i] = z.re
            im[i, i] = z.im
        return cls._raw(re, im)

    @classmethod
    def from_parts(cls, re: np.ndarray, im: np.ndarray | None = None) -> "ExactMatrix":
        """Build from object arrays (entries coerced to mpq)."""
        re = np.asarray(re, dtype=object)
        if re.ndim != 2 or re.shape[0] != re.shape[1] or re.shape[0] == 0:
            raise ShapeError(f"expected a nonempty square array, got shape {re.shape}")
        re = np.vectorize(rational, otypes=[object])(re)
        if im is not None:
            im = np.asarray(im, dtype=object)
            if im.shape != re.shape:
                raise ShapeError("real and imaginary parts differ in shape")
            im = np.vectorize(rational, otypes=[object])(im)
        return cls._raw(re, im)

    @property
    def dim(self) -> int:
        return self._re.shape[0]

    @property
    def is_real(self) -> bool:
        return self._im is None

    @property
    def re(self) -> np.ndarray:
        return self._re

    @property
    def im(self) -> np.ndarray:
        return self._im if self._im is not None else _obj_zeros(self._re.shape)

    def __getitem__(self, idx) -> GaussianRational:
        i, j = idx
        return GaussianRational(self._re[i, j], 0 if self._im is None else self._im[i, j])

    def rows(self) -> list[list[GaussianRational]]:
        n = self.dim
        return [[self[i, j] for j in range(n)] for i in range(n)]

    def diagonal(self) -> list[GaussianRational]:
        return [self[i, i] for i in range(self.dim)]

    def trace(self) -> GaussianRational:
        n = self.dim
        re = sum((self._re[i, i] for i in range(n)), _ZERO)
        im = _ZERO if self._im is None else sum((self._im[i, i] for i in range(n)), _ZERO)
        return GaussianRational(re, im)

    def _check_same(self, other):
        if not isinstance(other, ExactMatrix):
            raise TypeError(f"expected ExactMatrix, got {type(other).__name__}")
        if other.dim != self.dim:
            raise ShapeError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        self._check_same(other)
        im = _add_opt(self._im, other._im)
        return ExactMatrix._raw(self._re + other._re, im)

    def __sub__(self, other):
        self._check_same(other)
        im = _add_opt(self._im, None if other._im is None else -other._im)
        return ExactMatrix._raw(self._re - other._re, im)

    def __neg__(self):
        return ExactMatrix._raw(-self._re, None if self._im is None else -self._im)

    def __matmul__(self, other):
        self._check_same(other)
        ar, ai, br, bi = self._re, self._im, other._re, other._im
        re = ar.dot(br)
        if ai is None and bi is None:
            return ExactMatrix._raw(re, None)
        if ai is None:
            return ExactMatrix._raw(re, ar.dot(bi))
        if bi is None:
            return ExactMatrix._raw(re, ai.dot(br))
        return ExactMatrix._raw(re - ai.dot(bi), ar.dot(bi) + ai.dot(br))

    def scale(self, z) -> "ExactMatrix":
        z = gaussian(z)
        if self._im is None:
            im = None if z.im == 0 else self._re * z.im
            return ExactMatrix._raw(self._re * z.re, im)
        return ExactMatrix._raw(
            self._re * z.re - self._im * z.im, self._re * z.im + self._im * z.re
        )

    def shift(self, z) -> "ExactMatrix":
        """``self - z*I``."""
        z = gaussian(z)
        re = self._re.copy()
        im = None if self._im is None and z.im == 0 else self.im.copy()
        for i in range(self.dim):
            re[i, i] = re[i, i] - z.re
            if im is not None:
                im[i, i] = im[i, i] - z.im
        return ExactMatrix._raw(re, im)

    def adjoint(self) -> "ExactMatrix":
        return ExactMatrix._raw(
            self._re.T.copy(), None if self._im is None else (-self._im.T).copy()
        )

    def is_zero(self) -> bool:
        return _all_zero(self._re) and (self._im is None or _all_zero(self._im))

    def is_hermitian(self) -> bool:
        return self == self.adjoint()

    def is_diagonal(self) -> bool:
        n = self.dim
        return all(
            i == j or (self._re[i, j] == 0 and (self._im is None or self._im[i, j] == 0))
            for i in range(n)
            for j in range(n)
        )

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        if other.dim != self.dim:
            return False
        if (self._im is None) != (other._im is None):
            return False
        if not np.array_equal(self._re, other._re):
            return False
        return self._im is None or np.array_equal(self._im, other._im)

    __hash__ = None

    def extend(self, diag_entries: Sequence) -> "ExactMatrix":
        """Block-diagonal extension ``self ⊕ diag(diag_entries)``."""
        entries = [gaussian(z) for z in diag_entries]
        if not entries:
            return self
        n, k = self.dim, len(entries)
        re = _obj_zeros((n + k, n + k))
        im = _obj_zeros((n + k, n + k))
        re[:n, :n] = self._re
        if self._im is not None:
            im[:n, :n] = self._im
        for t, z in enumerate(entries):
            re[n + t, n + t] = z.re
            im[n + t, n + t] = z.im
        return ExactMatrix._raw(re, im)

    def to_complex(self) -> np.ndarray:
        out = np.array(self._re, dtype=float).astype(complex)
        if self._im is not None:
            out += 1j * np.array(self._im, dtype=float)
        return out

    def frobenius2(self) -> Rational:
        """Exact squared Frobenius norm."""
        s = sum((x * x for x in self._re.flat), _ZERO)
        if self._im is not None:
            s += sum((x * x for x in self._im.flat), _ZERO)
        return s

    def to_json(self) -> list:
        return [[z.to_json() for z in row] for row in self.rows()]

    def __repr__(self):
        return f"ExactMatrix({[[str(z) for z in r] for r in self.rows()]})"


def _add_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


@dataclass(frozen=True)
class FloatMatrix:
    """Complex double matrix paired with the tolerance its consumers must use."""

    array: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        a = np.asarray(self.array, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"FloatMatrix must be square, got shape {a.shape}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        object.__setattr__(self, "array", a)

    @property
    def dim(self) -> int:
        return self.array.shape[0]


def is_normal_exact(A: ExactMatrix) -> bool:
    """True iff ``A A* == A* A`` entrywise."""
    Ah = A.adjoint()
    return A @ Ah == Ah @ A


def annihilating_polynomial_check(A: ExactMatrix, X: Sequence) -> bool:
    """True iff the product of ``A - λI`` over ``λ`` in ``X`` vanishes.

    Combined with :func:`is_normal_exact` this certifies ``spec(A) ⊆ X``.
    """
    pts = check_distinct(X)
    prod = A.shift(pts[0])
    for lam in pts[1:]:
        if prod.is_zero():
            return True
        prod = prod @ A.shift(lam)
    return prod.is_zero()


def _finite_array(A: FloatMatrix) -> np.ndarray:
    a = A.array
    if not np.all(np.isfinite(a)):
        raise NumericInputError("matrix has non-finite entries")
    return a


def unitary_defect(U: FloatMatrix) -> float:
    """Frobenius norm of ``U U* - I``."""
    u = _finite_array(U)
    return float(np.linalg.norm(u @ u.conj().T - np.eye(u.shape[0]), "fro"))


def numeric_rank(A: FloatMatrix, tol: float | None = None) -> int:
    """Count singular values above ``tol`` times the largest one."""
    a = _finite_array(A)
    tol = A.tol if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))
