"""File formats: operator and sequence JSON, sample CSV, unitary export, reports.

Exact numbers are written as ``"p/q"`` strings and Gaussian rationals as
``{"re": "p/q", "im": "p/q"}``.  On input a bare string or integer is also
accepted for a real entry.  Floats are refused in exact fields.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from ..diagseq import LimSequence, SpectrumSet
from ..errors import ParseError, RestdiagError
from ..exactcore import ExactMatrix, FloatMatrix, GaussianRational
from ..opmodel.model import EventuallyDiagonalOperator, RestrictedUnitary

OPERATOR_KEYS = {"spectrum", "corner", "tail_pattern", "finite_spectrum"}
SEQUENCE_KEYS = {"spectrum", "prefix", "tail_pattern"}
# keys written by ``gen`` that readers skip
META_KEYS = {"meta"}


def _where(source, field: str) -> str:
    return f"{source}: field {field}" if source else f"field {field}"


def load_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def parse_number(x, field: str, source=None) -> GaussianRational:
    if isinstance(x, float) or (isinstance(x, dict) and any(isinstance(v, float) for v in x.values())):
        raise ParseError(f"{_where(source, field)}: float {x!r} is not exact; write it as a \"p/q\" string")
    if isinstance(x, dict) and not set(x) <= {"re", "im"}:
        raise ParseError(f"{_where(source, field)}: complex entries take only 're' and 'im'")
    try:
        return GaussianRational.coerce(x)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{_where(source, field)}: {exc}") from None


def _require(obj, keys: set, source) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{source or 'input'}: top level must be a JSON object")
    missing = sorted(keys - set(obj))
    if missing:
        raise ParseError(f"{_where(source, missing[0])}: missing")
    extra = sorted(set(obj) - keys - META_KEYS)
    if extra:
        raise ParseError(f"{_where(source, extra[0])}: unknown key")


def _parse_list(obj, key: str, source) -> list:
    v = obj[key]
    if not isinstance(v, list):
        raise ParseError(f"{_where(source, key)}: expected a list")
    return v


def _parse_spectrum(obj, source) -> SpectrumSet:
    pts = [parse_number(x, f"spectrum[{i}]", source) for i, x in enumerate(_parse_list(obj, "spectrum", source))]
    try:
        return SpectrumSet(tuple(pts))
    except RestdiagError as exc:
        raise ParseError(f"{_where(source, 'spectrum')}: {exc}") from None


def _parse_tail(obj, n_points: int, source) -> tuple[int, ...]:
    raw = _parse_list(obj, "tail_pattern", source)
    if not raw:
        raise ParseError(f"{_where(source, 'tail_pattern')}: must be nonempty")
    out = []
    for i, t in enumerate(raw):
        if not isinstance(t, int) or isinstance(t, bool) or not 0 <= t < n_points:
            raise ParseError(f"{_where(source, f'tail_pattern[{i}]')}: expected an index in [0, {n_points})")
        out.append(t)
    return tuple(out)


def parse_operator(obj, source=None) -> EventuallyDiagonalOperator:
    """Structural parse only; run :func:`make_operator` checks separately."""
    _require(obj, OPERATOR_KEYS, source)
    spec = _parse_spectrum(obj, source)
    rows = _parse_list(obj, "corner", source)
    if not rows:
        raise ParseError(f"{_where(source, 'corner')}: must be a nonempty square matrix")
    n = len(rows)
    corner = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"{_where(source, f'corner[{i}]')}: expected a row of length {n}")
        corner.append([parse_number(x, f"corner[{i}][{j}]", source) for j, x in enumerate(row)])
    tail = _parse_tail(obj, len(spec), source)
    fs = obj["finite_spectrum"]
    if not isinstance(fs, bool):
        raise ParseError(f"{_where(source, 'finite_spectrum')}: expected true or false")
    return EventuallyDiagonalOperator(spec, ExactMatrix(corner), tail, fs)


def operator_to_json(N: EventuallyDiagonalOperator) -> dict:
    return {
        "spectrum": [z.to_json() for z in N.spectrum],
        "corner": N.corner.to_json(),
        "tail_pattern": list(N.tail.pattern),
        "finite_spectrum": N.finite_spectrum,
    }


def parse_sequence(obj, source=None) -> LimSequence:
    _require(obj, SEQUENCE_KEYS, source)
    spec = _parse_spectrum(obj, source)
    prefix = [parse_number(x, f"prefix[{i}]", source) for i, x in enumerate(_parse_list(obj, "prefix", source))]
    tail = _parse_tail(obj, len(spec), source)
    return LimSequence(tuple(prefix), tail, spec)


def sequence_to_json(d: LimSequence) -> dict:
    return {
        "spectrum": [z.to_json() for z in d.spectrum],
        "prefix": [z.to_json() for z in d.prefix],
        "tail_pattern": list(d.tail.pattern),
    }


def read_samples_csv(path) -> list[complex]:
    """Streamed diagonal samples, one ``re,im`` row per term (header required)."""
    path = Path(path)
    out = []
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or set(reader.fieldnames) != {"re", "im"}:
                raise ParseError(f"{path}:1: header must be re,im")
            for row in reader:
                try:
                    out.append(complex(float(row["re"]), float(row["im"])))
                except (TypeError, ValueError):
                    raise ParseError(f"{path}:{reader.line_num}: expected two numbers") from None
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from None
    return out


def unitary_to_json(U: RestrictedUnitary) -> dict:
    """Row-major ``[re, im]`` pairs of the corner; ``U`` is the identity beyond it."""
    a = U.corner_u.array
    return {
        "dim": U.dim,
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in a],
        "defect": U.defect,
        "tol": U.tol,
    }


def parse_unitary(obj, source=None) -> RestrictedUnitary:
    try:
        n = obj["dim"]
        arr = np.array([[complex(re, im) for re, im in row] for row in obj["entries"]], dtype=complex)
        tol = float(obj.get("tol", 1e-10))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{_where(source, 'unitary')}: malformed ({exc})") from None
    if arr.shape != (n, n):
        raise ParseError(f"{_where(source, 'unitary.entries')}: expected {n}x{n}")
    return RestrictedUnitary(FloatMatrix(arr, tol))


def dumps_report(report: dict) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True) + "\n"


def loads_report(text: str) -> dict:
    return json.loads(text)
