"""Randomized invariant suites behind ``verify`` and the acceptance tests.

A suite turns ``(seed, trial)`` into an instance, checks it, and can
serialize the instance so a failing trial can be replayed from its JSON.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..diagseq import LimSequence, Line, convexity_bound_check, hull_vertices, kadison_ab, separating_line
from ..errors import IllConditionedWarning, ObstructionError, RestdiagError, UsageError
from ..exactcore import ExactMatrix, GaussianRational, format_rational, rational
from ..lattice import Certificate, build_kmodule, independence_check
from ..opmodel import (
    PROJECTION_SPECTRUM,
    ModelProjection,
    conjugate_projections,
    diagonal_indicator,
    diagonal_operator,
    diagonal_projection,
    essential_codimension,
    essential_codimension_fredholm,
    example_310_diagnostics,
    expectation_delta,
    expectation_delta_diag,
    full_rank_converse_check,
    is_restricted_diagonalizable,
    restricted_diagonalize,
    spectral_projections,
    tails_agree,
)
from ..opmodel.example310 import angles
from .generate import (
    GENERATOR_ID,
    ExactBasis,
    align_tail,
    random_basis,
    random_diagonal_partner,
    random_operator,
    random_projection,
    random_projection_pair,
    random_restricted_unitary,
    random_spectrum,
    random_tail,
    rng_for,
)
from .io import operator_to_json, parse_operator, parse_unitary, unitary_to_json


@dataclass
class TrialResult:
    ok: bool
    detail: str = ""
    metrics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Suite:
    tag: str
    description: str
    generate: Callable[[np.random.Generator, int], dict]
    check: Callable[[dict, float], TrialResult]
    default_tol: Optional[float]
    tol_meaning: str


SUITES: dict[str, Suite] = {}


def _suite(tag, description, default_tol, tol_meaning):
    def wrap(cls):
        SUITES[tag] = Suite(tag, description, cls.generate, cls.check, default_tol, tol_meaning)
        return cls

    return wrap


def _ops_to_json(inst: dict) -> dict:
    """Instances are dicts whose model objects serialize by type."""
    out = {}
    for k, v in inst.items():
        if hasattr(v, "corner_u"):
            out[k] = {"unitary": unitary_to_json(v)}
        elif hasattr(v, "corner") and hasattr(v, "tail"):
            out[k] = {"operator": operator_to_json(v)}
        elif isinstance(v, ExactBasis):
            out[k] = {"basis": v.to_json()}
        elif isinstance(v, GaussianRational):
            out[k] = {"number": v.to_json()}
        elif isinstance(v, (list, tuple)) and v and all(isinstance(z, GaussianRational) for z in v):
            out[k] = {"numbers": [z.to_json() for z in v]}
        else:
            out[k] = {"value": _plain(v)}
    return out


def _plain(v):
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if hasattr(v, "numerator") and not isinstance(v, (int, bool)):
        return format_rational(v)
    return v


def _ops_from_json(obj: dict) -> dict:
    inst = {}
    for k, wrapped in obj.items():
        (kind, v), = wrapped.items()
        if kind == "unitary":
            inst[k] = parse_unitary(v, source=k)
        elif kind == "operator":
            op = parse_operator(v, source=k)
            if op.spectrum.points == PROJECTION_SPECTRUM.points:
                op = ModelProjection(op.spectrum, op.corner, op.tail, op.finite_spectrum)
            inst[k] = op
        elif kind == "basis":
            inst[k] = ExactBasis.from_json(v)
        elif kind == "number":
            inst[k] = GaussianRational.coerce(v)
        elif kind == "numbers":
            inst[k] = tuple(GaussianRational.coerce(z) for z in v)
        else:
            inst[k] = v
    return inst


def instance_to_json(inst: dict) -> dict:
    return _ops_to_json(inst)


def instance_from_json(obj: dict) -> dict:
    return _ops_from_json(obj)


# ---------------------------------------------------------------- suites


def _padded(basis: ExactBasis, n: int) -> ExactBasis:
    extra = n - basis.dim
    vecs = tuple(tuple(v) + (0,) * extra for v in basis.vectors)
    ph = None if basis.phases is None else tuple(basis.phases) + ((1, 0, 1),) * extra
    return ExactBasis(n, vecs, ph)


@_suite("kadison-bridge", "a-b of a projection's diagonal is an integer equal to [P:Q]", None, "unused (exact)")
class _Kadison:
    @staticmethod
    def generate(rng, trial):
        pp = random_projection_pair(rng, 32)
        return {"P": pp.P.projection, "Q": pp.Q.projection, "Q_basis": pp.Q.basis, "Q_mask": list(pp.Q.mask)}

    @staticmethod
    def check(inst, tol):
        P, Q = inst["P"], inst["Q"]
        codim = essential_codimension(P, Q).value
        # route 1: P in a basis that diagonalizes Q
        n = max(P.dim, Q.dim)
        Pe = P.extended(n)
        W = _padded(inst["Q_basis"], n)
        rotated = W.conjugate_inverse(Pe.corner)
        q_mask = [bool(b) for b in inst["Q_mask"]] + [bool(Q.value_at(g)) for g in range(Q.dim, n)]
        d = LimSequence(tuple(rotated.diagonal()), Pe.tail, PROJECTION_SPECTRUM)
        kq = kadison_ab(d, q_mask)
        # route 2: Q the 1/2-threshold projection of P's own diagonal
        diagP = P.corner.diagonal()
        Qt = diagonal_projection([z.re >= rational("1/2") for z in diagP], P.tail)
        kt = kadison_ab(LimSequence(tuple(diagP), P.tail, PROJECTION_SPECTRUM))
        ct = essential_codimension(P, Qt).value
        ok = kq.integral and kq.diff == codim and kt.integral and kt.diff == ct
        detail = "" if ok else f"[P:Q]={codim}, a-b={kq.diff}; threshold [P:Q]={ct}, a-b={kt.diff}"
        return TrialResult(ok, detail, {"codim": codim})


def _aligned_projections(rng, pattern, dims, n, ranks=None, values=(1,)):
    """Projections over a shared tail ``pattern`` (values in ``values`` mark ones)."""
    out = []
    for j, d in enumerate(dims):
        tail = [int(x in values) for x in align_tail(pattern, d, n).pattern]
        out.append(random_projection(rng, d, tail, None if ranks is None else ranks[j],
                                     reflections=int(rng.integers(1, 3)), complex_=bool(rng.random() < 0.25)))
    return out


def _orthogonal_pair(rng, pattern, dim, n):
    """Two orthogonal projections sharing one exact basis; tails split on pattern values 1 and 2."""
    basis = random_basis(rng, dim, int(rng.integers(1, 3)), complex_=bool(rng.random() < 0.25))
    labels = rng.integers(0, 3, size=dim)
    sched = align_tail(pattern, dim, n).pattern
    res = []
    for v in (1, 2):
        D = ExactMatrix.diag([int(x == v) for x in labels])
        res.append(ModelProjection(PROJECTION_SPECTRUM, basis.conjugate(D), [int(x == v) for x in sched], True))
    return res


def _proj_sum(A: ModelProjection, B: ModelProjection) -> ModelProjection:
    assert A.dim == B.dim
    tail = [a + b for a, b in zip(A.tail.pattern, B.tail.pattern)]
    return ModelProjection(PROJECTION_SPECTRUM, A.corner + B.corner, tail, True)


@_suite("codim-algebra", "antisymmetry, orthogonal additivity and the cocycle identity", None, "unused (exact)")
class _CodimAlgebra:
    @staticmethod
    def generate(rng, trial):
        dims = [int(rng.integers(1, 33)) for _ in range(3)]
        n = max(dims)
        pattern = random_tail(rng, (0, 1))
        P, Q, R = (x.projection for x in _aligned_projections(rng, pattern, dims, n))
        pattern3 = random_tail(rng, (0, 1, 2))
        d1, d2 = int(rng.integers(1, 33)), int(rng.integers(1, 33))
        n3 = max(d1, d2)
        P1, P2 = _orthogonal_pair(rng, pattern3, d1, n3)
        Q1, Q2 = _orthogonal_pair(rng, pattern3, d2, n3)
        return {"P": P, "Q": Q, "R": R, "P1": P1, "P2": P2, "Q1": Q1, "Q2": Q2}

    @staticmethod
    def check(inst, tol):
        c = lambda a, b: essential_codimension(inst[a], inst[b]).value  # noqa: E731
        pq, qp, qr, pr = c("P", "Q"), c("Q", "P"), c("Q", "R"), c("P", "R")
        add_lhs = c("P1", "Q1") + c("P2", "Q2")
        add_rhs = essential_codimension(_proj_sum(inst["P1"], inst["P2"]), _proj_sum(inst["Q1"], inst["Q2"])).value
        fails = []
        if pq != -qp:
            fails.append(f"antisymmetry: [P:Q]={pq}, [Q:P]={qp}")
        if pr != pq + qr:
            fails.append(f"cocycle: [P:R]={pr} != {pq}+{qr}")
        if add_lhs != add_rhs:
            fails.append(f"additivity: {add_lhs} != {add_rhs}")
        return TrialResult(not fails, "; ".join(fails), {})


@_suite("oracle-equivalence", "exact trace codimension equals the numeric Fredholm index", 1e-10, "rank threshold")
class _Oracle:
    @staticmethod
    def generate(rng, trial):
        pp = random_projection_pair(rng, 32)
        return {"P": pp.P.projection, "Q": pp.Q.projection}

    @staticmethod
    def check(inst, tol):
        exact = essential_codimension(inst["P"], inst["Q"]).value
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", IllConditionedWarning)
            fred = essential_codimension_fredholm(inst["P"], inst["Q"], tol).value
        ill = sum(issubclass(w.category, IllConditionedWarning) for w in caught)
        ok = exact == fred
        return TrialResult(ok, "" if ok else f"exact {exact} != fredholm {fred}", {"ill_conditioned": ill})


DECOMPOSITION_TOL = 1e-10


@_suite("trace-zero", "trace E(UNU* - N) vanishes and matches its two-term expansion", 1e-8, "trace bound per (1+|N|_F)")
class _TraceZero:
    @staticmethod
    def generate(rng, trial):
        N = random_operator(rng, 32, max_points=4).operator
        U = random_restricted_unitary(rng, int(rng.integers(1, 33)))
        return {"N": N, "U": U}

    @staticmethod
    def check(inst, tol):
        N, U = inst["N"], inst["U"]
        r = expectation_delta(N, U)
        bound = tol * (1 + N.corner_frobenius())
        dec = float(np.max(np.abs(r.diagonal - (r.first_term + r.second_term))))
        fails = []
        if not abs(r.trace) <= bound:
            fails.append(f"|trace| {abs(r.trace):.3e} > {bound:.3e}")
        if not dec <= DECOMPOSITION_TOL:
            fails.append(f"two-term expansion off by {dec:.3e}")
        return TrialResult(not fails, "; ".join(fails), {"abs_trace": abs(r.trace), "expansion_error": dec})


@_suite("round-trip", "restricted diagonalization of random finite-spectrum operators", 1e-9, "residual per (1+|N|_F)")
class _RoundTrip:
    @staticmethod
    def generate(rng, trial):
        return {"N": random_operator(rng, 32, max_points=4, hull_tail=True).operator}

    @staticmethod
    def check(inst, tol):
        N = inst["N"]
        scale = 1 + N.corner_frobenius()
        D = restricted_diagonalize(N, tol)
        U, Np = D.unitary, D.diagonal
        verdict = is_restricted_diagonalizable(N, cross_check=False).verdict
        tr = abs(expectation_delta(N, U).trace)
        fails = []
        if not D.offdiag_residual <= tol * scale:
            fails.append(f"off-diagonal residual {D.offdiag_residual:.3e}")
        if not U.defect <= 1e-10:
            fails.append(f"unitary defect {U.defect:.3e}")
        if not verdict:
            fails.append("diagonalizability verdict false")
        if not (Np.is_diagonal() and tails_agree(N, Np)):
            fails.append("N' is not an eventually equal diagonal")
        if not tr <= 1e-8 * scale:
            fails.append(f"trace E(UNU*-N) = {tr:.3e}")
        metrics = {"offdiag": D.offdiag_residual, "defect": U.defect, "moves": len(D.moves)}
        return TrialResult(not fails, "; ".join(fails), metrics)


@_suite("arveson-identity", "trace E(N-N') equals the codimension expansion and lies in the lattice", 1e-9,
        "residual for diagonalization-derived N'")
class _Arveson:
    @staticmethod
    def generate(rng, trial):
        if trial % 5 == 4:
            # pipeline case: N' from the restricted diagonalization
            N = random_operator(rng, 24, max_points=4, hull_tail=True).operator
            return {"N": N, "N_prime": None}
        N = random_operator(rng, 32, max_points=4).operator
        return {"N": N, "N_prime": random_diagonal_partner(rng, N, 32)}

    @staticmethod
    def check(inst, tol):
        N, Np = inst["N"], inst["N_prime"]
        if Np is None:
            Np = restricted_diagonalize(N, tol).diagonal
        res = expectation_delta_diag(N, Np)
        # recompute both sides here instead of trusting the internal assertion
        size = max(N.dim, Np.dim)
        trace = N.block_trace(size) - Np.block_trace(size)
        expansion = Certificate(res.codims).evaluate(N.spectrum.points)
        cert = res.certificate
        fails = []
        if trace != res.trace or expansion != trace:
            fails.append(f"trace {trace} vs expansion {expansion}")
        if sum(cert.coefficients) != 0 or cert.evaluate(N.spectrum.points) != trace:
            fails.append(f"certificate {cert.coefficients} does not represent {trace}")
        if independence_check(res.lattice) and tuple(cert.coefficients) != tuple(res.codims):
            fails.append(f"certificate {cert.coefficients} != codims {res.codims}")
        return TrialResult(not fails, "; ".join(fails), {"trace": str(trace)})


@_suite("convexity", "separating-line bound for convex combinations", None, "unused (exact)")
class _Convexity:
    @staticmethod
    def generate(rng, trial):
        m = int(rng.integers(1, 7))
        lams = random_spectrum(rng, m, complex_=True, denom=int(rng.integers(1, 9)))
        verts = hull_vertices(lams)
        k = lams.index(verts[int(rng.integers(len(verts)))])
        L = separating_line(lams, k)
        w = [int(x) for x in rng.integers(0, 11, size=m)]
        w[k] += 1
        while True:
            total = sum(w)
            num = sum(wj * L.evaluate(z) for wj, z in zip(w, lams))
            if num > 0:
                break
            w[k] *= 2
        coeffs = [rational(wj) / total for wj in w]
        return {"lambdas": list(lams), "coeffs": coeffs, "k": k, "line": [L.a, L.b, L.c]}

    @staticmethod
    def check(inst, tol):
        L = Line(*[rational(x) for x in inst["line"]])
        ok = convexity_bound_check(inst["lambdas"], inst["coeffs"], int(inst["k"]), L)
        return TrialResult(ok, "" if ok else "bound violated", {})


@_suite("example-310", "Hilbert-Schmidt partial sums bounded while trace-class sums diverge", 1e-14,
        "Pythagoras and block unitarity defect")
class _Example310:
    @staticmethod
    def generate(rng, trial):
        if trial == 0:
            return {"M": 10_000, "rule": "inverse", "p": 1.0}
        rule = "power" if rng.random() < 0.5 else "inverse"
        p = float(0.5 + 0.5 * (1 - rng.random())) if rule == "power" else 1.0
        return {"M": int(rng.integers(1, 10_001)), "rule": rule, "p": p}

    @staticmethod
    def check(inst, tol):
        M, rule, p = int(inst["M"]), inst["rule"], float(inst["p"])
        r = example_310_diagnostics(M, rule, p)
        theta = angles(M, rule, p)
        # direct loop oracles
        tc_direct = math.fsum(abs(math.sin(2 * t)) / math.sqrt(2) for t in theta)
        hs_bound = math.fsum(2 * t * t for t in theta)
        fails = []
        if not (r.hs_monotone and r.tc_monotone):
            fails.append("partial sums not monotone")
        if not max(r.pythagoras_defect, r.block_defect) <= tol:
            fails.append(f"defects {r.pythagoras_defect:.1e}, {r.block_defect:.1e}")
        if not math.isclose(r.tc_partial, tc_direct, rel_tol=1e-12, abs_tol=1e-12):
            fails.append(f"tc_partial {r.tc_partial} != direct {tc_direct}")
        if not r.hs_partial <= hs_bound * (1 + 1e-12):
            fails.append(f"hs_partial {r.hs_partial} exceeds 2 sum theta^2 = {hs_bound}")
        metrics = {"hs_partial": r.hs_partial, "tc_partial": r.tc_partial}
        if M == 10_000 and rule == "inverse":
            jump = r.tc_partial - r.tc_sums[999]
            metrics["tc_jump_1e3_1e4"] = float(jump)
            if not (r.hs_partial <= 4.0 and r.tc_partial >= 11.7 and jump >= 3.0):
                fails.append(f"trend thresholds missed: hs {r.hs_partial}, tc {r.tc_partial}, jump {jump}")
        return TrialResult(not fails, "; ".join(fails), metrics)


X_INDEPENDENT = (GaussianRational(0), GaussianRational(1), GaussianRational(0, 1))
X_DEPENDENT = (GaussianRational(0), GaussianRational(1), GaussianRational(2))


@_suite("converse", "zero trace with independent differences yields a conjugating unitary", 1e-9,
        "conjugation residual per (1+|N|_F)")
class _Converse:
    @staticmethod
    def generate(rng, trial):
        spec = X_DEPENDENT if trial % 10 == 9 else X_INDEPENDENT
        oi = random_operator(rng, 32, spectrum=spec)
        N = oi.operator
        perm = [oi.diag_indices[int(i)] for i in rng.permutation(N.dim)]
        Np = diagonal_operator(spec, perm, N.tail)
        return {"N": N, "N_prime": Np}

    @staticmethod
    def check(inst, tol):
        N, Np = inst["N"], inst["N_prime"]
        rep = full_rank_converse_check(N, Np, tol)
        dependent = not independence_check(build_kmodule(N.spectrum.points))
        if dependent:
            ok = not rep.hypothesis_met and rep.unitary is None
            return TrialResult(ok, "" if ok else "dependent spectrum accepted", {"path": "hypothesis-not-met"})
        bound = tol * (1 + N.corner_frobenius())
        ok = rep.hypothesis_met and rep.unitary is not None and rep.residual <= bound
        detail = "" if ok else f"residual {rep.residual} (bound {bound:.3e})"
        return TrialResult(ok, detail, {"path": "unitary", "residual": rep.residual})


@_suite("obstruction", "nonzero essential codimension blocks every conjugating unitary", 1e-10,
        "conjugation tolerance")
class _Obstruction:
    @staticmethod
    def generate(rng, trial):
        if trial % 2 == 0:
            pp = random_projection_pair(rng, 32, codim="nonzero")
            return {"kind": "pair", "P": pp.P.projection, "Q": pp.Q.projection, "expect_index": 0, "expect_codim": pp.codim}
        # full families: spectral projections against a miscounted diagonal
        oi = random_operator(rng, 32, m=int(rng.integers(2, 5)))
        N = oi.operator
        m = len(N.spectrum)
        idx = list(oi.diag_indices)
        src = idx[int(rng.integers(len(idx)))]
        dst = int((src + 1 + rng.integers(m - 1)) % m)
        pos = [i for i, x in enumerate(idx) if x == src][0]
        idx[pos] = dst
        Np = diagonal_operator(N.spectrum, idx, N.tail)
        first = min(src, dst)
        return {"kind": "family", "N": N, "N_prime": Np, "expect_index": first,
                "expect_codim": 1 if first == src else -1}

    @staticmethod
    def check(inst, tol):
        if inst["kind"] == "pair":
            pairs = [(inst["P"], inst["Q"])]
        else:
            N, Np = inst["N"], inst["N_prime"]
            pairs = list(zip(spectral_projections(N), (diagonal_indicator(Np, lam) for lam in N.spectrum)))
        try:
            conjugate_projections(pairs, tol)
        except ObstructionError as exc:
            ok = exc.index == int(inst["expect_index"]) and exc.codimension == int(inst["expect_codim"])
            detail = "" if ok else f"named pair {exc.index} codim {exc.codimension}"
            return TrialResult(ok, detail, {"index": exc.index, "codim": exc.codimension})
        return TrialResult(False, "no obstruction raised")


# ---------------------------------------------------------------- runner


@dataclass
class SuiteReport:
    suite: str
    seed: int
    trials: int
    tol: Optional[float]
    passed: int
    failures: list
    metrics: dict

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self, max_failures: int = 5) -> dict:
        return {
            "command": "verify",
            "suite": self.suite,
            "seed": self.seed,
            "trials": self.trials,
            "tol": self.tol,
            "generator": GENERATOR_ID,
            "passed": self.passed,
            "failed": len(self.failures),
            "verdict": "pass" if self.ok else "fail",
            "metrics": self.metrics,
            "failures": self.failures[:max_failures],
        }


def _summarize(values: list) -> dict:
    nums = [v for v in values if isinstance(v, (int, float)) and not isinstance(v, bool)]
    if not nums or len(nums) != len(values):
        return {}
    return {"max": max(nums), "min": min(nums)}


def get_suite(tag: str) -> Suite:
    if tag not in SUITES:
        raise UsageError(f"unknown suite {tag!r}; expected one of {', '.join(SUITES)}")
    return SUITES[tag]


def run_trial(suite: Suite, inst: dict, tol: float) -> TrialResult:
    try:
        return suite.check(inst, tol)
    except (RestdiagError, ArithmeticError, AssertionError, ValueError) as exc:
        return TrialResult(False, f"{type(exc).__name__}: {exc}")


def run_suite(tag: str, seed: int, trials: int, tol: Optional[float] = None) -> SuiteReport:
    """All trials of ``tag`` in trial order; failing instances are kept for replay."""
    suite = get_suite(tag)
    if trials < 1:
        raise UsageError("trials must be a positive integer")
    tol = suite.default_tol if tol is None else tol
    passed = 0
    failures = []
    collected: dict[str, list] = {}
    for t in range(trials):
        inst = suite.generate(rng_for(seed, t), t)
        res = run_trial(suite, inst, tol)
        for k, v in res.metrics.items():
            collected.setdefault(k, []).append(v)
        if res.ok:
            passed += 1
        else:
            failures.append({
                "trial": t,
                "detail": res.detail,
                "replay": {"suite": tag, "tol": tol, "instance": instance_to_json(inst)},
            })
    metrics = {k: s for k, v in collected.items() if (s := _summarize(v))}
    return SuiteReport(tag, seed, trials, tol, passed, failures, metrics)


def replay(obj: dict) -> TrialResult:
    """Re-run a serialized failing instance (the ``replay`` entry of a report)."""
    try:
        suite = get_suite(obj["suite"])
        inst = instance_from_json(obj["instance"])
        tol = obj.get("tol", suite.default_tol)
        tol = None if tol is None else float(tol)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"malformed replay record: {exc}") from None
    return run_trial(suite, inst, tol)
