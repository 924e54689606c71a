from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restdiag.cli.generate import ExactBasis, random_basis
from restdiag.diagseq import kadison_ab
from restdiag.errors import (
    DomainError,
    IllConditionedWarning,
    NotCompactError,
    NotTraceClassError,
    ObstructionError,
    PreconditionError,
    ValidationError,
)
from restdiag.exactcore import ExactMatrix, FloatMatrix, GaussianRational
from restdiag.lattice import build_kmodule, membership
from restdiag.opmodel import (
    EXACT_TRACE,
    FREDHOLM_ORACLE,
    RestrictedUnitary,
    angles,
    conjugate_projections,
    conjugation_residual,
    diagonal_of,
    diagonal_operator,
    diagonal_projection,
    essential_codimension,
    essential_codimension_fredholm,
    example_310_diagnostics,
    expectation_delta,
    expectation_delta_diag,
    full_rank_converse_check,
    is_restricted_diagonalizable,
    make_operator,
    make_projection,
    redistribute,
    restricted_diagonalize,
    spectral_projection,
    spectral_projections,
)
from restdiag.opmodel.codim import _rank_with_warning

G = GaussianRational
I_ = G(0, 1)
HALF = G("1/2")
HALF_M = [[HALF, HALF], [HALF, HALF]]
X3 = (G(0), G(1), I_)


def exact_projection(H: ExactBasis, mask):
    return H.conjugate(ExactMatrix.diag([int(b) for b in mask]))


# ---------------------------------------------------------------- construction


def test_make_operator_half_matrix():
    N = make_operator([0, 1], HALF_M, (0, 1))
    assert N.dim == 2 and N.ess_spectrum() == {G(0), G(1)}
    assert N.value_at(2) == 0 and N.value_at(3) == 1


def test_make_operator_rejects_non_normal():
    with pytest.raises(ValidationError, match="normal"):
        make_operator([0, 1], [[0, 1], [0, 0]], (0,))


def test_make_operator_zero_operator():
    N = make_operator([0], [[0]], (0,))
    assert N.corner.is_zero() and N.ess_spectrum() == {G(0)}


def test_make_operator_spectrum_and_tail_checks():
    with pytest.raises(ValidationError, match="spectrum"):
        make_operator([0, 1], ExactMatrix.diag([2, 0]), (0,))
    with pytest.raises(ValidationError, match="out of range"):
        make_operator([0, 1], ExactMatrix.diag([1, 0]), (0, 2))
    # without the finite-spectrum flag any normal corner is allowed
    assert make_operator([0, 1], ExactMatrix.diag([2, 0]), (0,), finite_spectrum=False).dim == 2


def test_extended_absorbs_tail():
    N = make_operator([0, 1], HALF_M, (0, 1, 1))
    E = N.extended(4)
    assert E.corner[2, 2] == 0 and E.corner[3, 3] == 1
    assert [E.value_at(n) for n in range(4, 7)] == [N.value_at(n) for n in range(4, 7)]


# ---------------------------------------------------------------- spectral projections


def test_spectral_projection_of_diagonal():
    N = diagonal_operator([0, 1], [0, 1], (1, 0))
    P = spectral_projection(N, 1)
    assert P.corner == ExactMatrix.diag([0, 1])
    assert P.tail.pattern == (1, 0)


def test_spectral_projections_of_half_matrix():
    N = make_operator([0, 1], HALF_M, (0, 1))
    assert spectral_projection(N, 1).corner == ExactMatrix(HALF_M)
    assert spectral_projection(N, 0).corner == ExactMatrix([[HALF, -HALF], [-HALF, HALF]])
    with pytest.raises(DomainError):
        spectral_projection(N, 2)


def test_spectral_projection_needs_finite_spectrum():
    N = make_operator([0, 1], ExactMatrix.diag([2, 0]), (0,), finite_spectrum=False)
    with pytest.raises(DomainError):
        spectral_projection(N, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.booleans())
def test_spectral_resolution_is_exact(n, seed, cplx):
    rng = np.random.default_rng(seed)
    H = random_basis(rng, n, reflections=2, complex_=cplx)
    idx = [int(i) for i in rng.integers(0, 3, size=n)]
    N = make_operator(X3, H.conjugate(ExactMatrix.diag([X3[i] for i in idx])), (0, 1, 2))
    Ps = spectral_projections(N)
    total = Ps[0].corner
    weighted = Ps[0].corner.scale(X3[0])
    for lam, P in zip(X3[1:], Ps[1:]):
        total = total + P.corner
        weighted = weighted + P.corner.scale(lam)
    assert total == ExactMatrix.identity(n)
    assert weighted == N.corner
    for P in Ps:
        assert P.corner @ P.corner == P.corner and P.corner.is_hermitian()


# ---------------------------------------------------------------- diagonal_of


def test_diagonal_of_half_matrix():
    d = diagonal_of(make_operator([0, 1], HALF_M, (0, 1)))
    assert d.prefix == (HALF, HALF) and d.tail.pattern == (0, 1)


def test_diagonal_of_diagonal_corner():
    d = diagonal_of(diagonal_operator(X3, [2, 0, 1], (0,)))
    assert d.prefix == (I_, G(0), G(1))


# ---------------------------------------------------------------- essential codimension


T = (1, 0, 0)


def codim_examples():
    return [
        (diagonal_projection([1] * 5, T), diagonal_projection([1, 1, 1, 0, 0], T), 2),
        (diagonal_projection([1, 0], T), diagonal_projection([1, 0], T), 0),
        (make_projection(HALF_M, T), diagonal_projection([1, 1], T), -1),
    ]


@pytest.mark.parametrize("case", range(3))
def test_essential_codimension_examples(case):
    P, Q, expected = codim_examples()[case]
    r = essential_codimension(P, Q)
    assert (r.value, r.method) == (expected, EXACT_TRACE)
    f = essential_codimension_fredholm(P, Q)
    assert (f.value, f.method) == (expected, FREDHOLM_ORACLE)


def test_codimension_of_identity_models():
    one = diagonal_projection([1, 1], (1,))
    assert essential_codimension_fredholm(one, one).value == 0


def test_codimension_counts_tail_disagreement():
    # P reads 1,1,0,1,0,... and Q reads 1,1,1,1,0,1,0,...
    P = diagonal_projection([1], (1, 0))
    Q = diagonal_projection([1, 1, 1, 1], (0, 1))
    assert essential_codimension(P, Q).value == essential_codimension_fredholm(P, Q).value == -1


def test_codimension_needs_compact_difference():
    with pytest.raises(NotCompactError):
        essential_codimension(diagonal_projection([1], (1,)), diagonal_projection([1], (0,)))
    with pytest.raises(NotCompactError):
        essential_codimension_fredholm(diagonal_projection([1], (1, 0)), diagonal_projection([1], (0, 1)))


def test_rank_helper_warns_near_threshold():
    with pytest.warns(IllConditionedWarning):
        assert _rank_with_warning(np.diag([1.0, 5e-10]).astype(complex), 1e-10) == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_codimension_algebra(n, seed):
    rng = np.random.default_rng(seed)
    H = random_basis(rng, n, reflections=2, complex_=bool(rng.integers(2)))
    tail = (1, 0)

    def proj(mask):
        return make_projection(exact_projection(H, mask), tail)

    masks = [[bool(b) for b in rng.integers(0, 2, size=n)] for _ in range(3)]
    P, Q, R = (proj(m) for m in masks)
    c = essential_codimension
    assert c(P, Q).value == -c(Q, P).value
    assert c(P, R).value == c(P, Q).value + c(Q, R).value
    # orthogonal splitting of a diagonal mask
    split = [bool(b) for b in rng.integers(0, 2, size=n)]
    A = [a and s for a, s in zip(masks[0], split)]
    B = [a and not s for a, s in zip(masks[0], split)]
    P1, P2 = make_projection(exact_projection(H, A), (0,)), make_projection(exact_projection(H, B), tail)
    Q1, Q2 = diagonal_projection(A, (0,)), diagonal_projection(B, tail)
    Psum = make_projection(P1.corner + P2.corner, tail)
    Qsum = diagonal_projection([a or b for a, b in zip(A, B)], tail)
    assert c(P1, Q1).value + c(P2, Q2).value == c(Psum, Qsum).value


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_trace_and_index_agree(n, seed):
    rng = np.random.default_rng(seed)
    H = random_basis(rng, n, reflections=2, complex_=bool(rng.integers(2)))
    mask = [bool(b) for b in rng.integers(0, 2, size=n)]
    P = make_projection(exact_projection(H, mask), (0, 1))
    Q = diagonal_projection([bool(b) for b in rng.integers(0, 2, size=n + 2)], (0, 1))
    assert essential_codimension(P, Q).value == essential_codimension_fredholm(P, Q).value


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_kadison_difference_equals_codimension(n, seed):
    rng = np.random.default_rng(seed)
    H = random_basis(rng, n, reflections=2, complex_=bool(rng.integers(2)))
    P = make_projection(exact_projection(H, [bool(b) for b in rng.integers(0, 2, size=n)]), (0, 1))
    q_mask = [bool(b) for b in rng.integers(0, 2, size=n)]
    Q = diagonal_projection(q_mask, (0, 1))
    k = kadison_ab(diagonal_of(P), q_mask=q_mask)
    assert k.diff == essential_codimension(P, Q).value
    assert k.integral


# ---------------------------------------------------------------- redistribute


def _codims(pairs, Qs):
    return [essential_codimension(P, Q).value for (P, _), Q in zip(pairs, Qs)]


def test_redistribute_single_move():
    # P_0 has rank 1 against Q_0 of rank 2; P_1 the complement against Q_1 = 0
    P0 = make_projection(HALF_M, (0,))
    P1 = make_projection([[HALF, -HALF], [-HALF, HALF]], (1,))
    pairs = [(P0, diagonal_projection([1, 1], (0,))), (P1, diagonal_projection([0, 0], (1,)))]
    log = []
    out = redistribute(pairs, log=log)
    assert _codims(pairs, out) == [0, 0]
    assert len(log) == 1 and log[0].source == 0 and log[0].target == 1 and log[0].atoms == (0,)
    assert out[0].corner == ExactMatrix.diag([0, 1]) and out[1].corner == ExactMatrix.diag([1, 0])


def test_redistribute_zero_codims_unchanged():
    Q0, Q1 = diagonal_projection([1, 0], (0,)), diagonal_projection([0, 1], (1,))
    pairs = [(Q0, Q0), (Q1, Q1)]
    log = []
    out = redistribute(pairs, log=log)
    assert not log
    assert [q.corner for q in out] == [Q0.corner, Q1.corner]


def test_redistribute_two_iterations():
    # codimensions (-2, +1, +1)
    Ps = [diagonal_projection([0, 0, 0, 0], (0,)), diagonal_projection([0, 0, 1, 0], (0,)), diagonal_projection([0, 0, 0, 1], (0,))]
    Qs = [diagonal_projection([1, 1, 0, 0], (0,)), diagonal_projection([0, 0, 0, 0], (0,)), diagonal_projection([0, 0, 0, 0], (0,))]
    pairs = list(zip(Ps, Qs))
    assert _codims(pairs, Qs) == [-2, 1, 1]
    log = []
    out = redistribute(pairs, log=log)
    assert len(log) == 2
    assert _codims(pairs, out) == [0, 0, 0]
    masks = [q.corner.diagonal() for q in out]
    for i in range(4):
        assert sum(int(m[i] == 1) for m in masks) <= 1


def test_redistribute_rejects_nonzero_total():
    pairs = [(diagonal_projection([1], (0,)), diagonal_projection([0], (0,)))]
    with pytest.raises(PreconditionError):
        redistribute(pairs)


# ---------------------------------------------------------------- conjugate_projections


def test_conjugate_equal_pairs_gives_identity():
    Q0, Q1 = diagonal_projection([1, 0], (0,)), diagonal_projection([0, 1], (1,))
    U = conjugate_projections([(Q0, Q0), (Q1, Q1)])
    assert np.array_equal(U.corner_u.array, np.eye(2))


def test_conjugate_rank_one_rotation():
    P = diagonal_projection([1, 0], (0,))
    Q = make_projection(HALF_M, (0,))
    U = conjugate_projections([(P, Q)])
    u = U.corner_u.array
    # first column spans (1, 1)/sqrt 2 up to a phase
    assert np.allclose(np.abs(u[:, 0]), [1 / math.sqrt(2)] * 2, atol=1e-12)
    assert np.linalg.norm(u @ P.corner.to_complex() @ u.conj().T - Q.corner.to_complex()) <= 1e-10
    assert U.defect <= 1e-10


def test_conjugate_obstruction_names_pair():
    P = diagonal_projection([1, 1], (0,))
    Q = diagonal_projection([1, 0], (0,))
    with pytest.raises(ObstructionError) as exc:
        conjugate_projections([(P, Q)])
    assert "1" in str(exc.value)


def test_conjugate_not_compact():
    with pytest.raises(NotCompactError):
        conjugate_projections([(diagonal_projection([1], (0,)), diagonal_projection([1], (1,)))])


# ---------------------------------------------------------------- restricted diagonalization


def test_diagonalize_already_diagonal():
    N = diagonal_operator(X3, [1, 2, 0], (0, 1, 2))
    U, Np = restricted_diagonalize(N)
    assert np.array_equal(U.corner_u.array, np.eye(3))
    assert Np.corner == N.corner and Np.tail.pattern == N.tail.pattern


def test_diagonalize_half_matrix():
    N = make_operator([0, 1], HALF_M, (0, 1))
    D = restricted_diagonalize(N)
    # greedy tie sends both atoms to the eigenvalue 0, one is moved back
    assert D.initial_codims == (-1, 1)
    assert D.diagonal.corner == ExactMatrix.diag([1, 0])
    u = D.unitary.corner_u.array
    assert np.allclose(np.abs(u), 1 / math.sqrt(2), atol=1e-12)
    assert D.residual <= 1e-10 and D.offdiag_residual <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_diagonalize_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    H = random_basis(rng, n, reflections=2, complex_=True)
    idx = [int(i) for i in rng.integers(0, 3, size=n)]
    N = make_operator(X3, H.conjugate(ExactMatrix.diag([X3[i] for i in idx])), (2, 0, 1))
    D = restricted_diagonalize(N)
    assert D.diagonal.is_diagonal()
    assert D.offdiag_residual <= 1e-9
    assert conjugation_residual(D.unitary, N, D.diagonal) <= 1e-9
    assert abs(expectation_delta(N, D.unitary).trace) <= 1e-8
    d = diagonal_of(D.diagonal)
    assert all(z in X3 for z in d.prefix)
    ident = expectation_delta_diag(N, D.diagonal)
    assert ident.trace == 0 and all(c == 0 for c in ident.codims)


# ---------------------------------------------------------------- expectation deltas


def test_expectation_delta_swap():
    a, b = G(2), G("1/3", 1)
    N = diagonal_operator([a, b, G(0)], [0, 1, 2], (2,))
    U = RestrictedUnitary(FloatMatrix(np.array([[0, -1], [1, 0]], dtype=complex)))
    r = expectation_delta(N, U)
    assert np.allclose(r.diagonal, [complex(b - a), complex(a - b), 0])
    assert abs(r.trace) == 0
    assert np.allclose(r.first_term, r.first_term_diagonal_form)


def test_expectation_delta_identity():
    N = make_operator([0, 1], HALF_M, (0, 1))
    r = expectation_delta(N, RestrictedUnitary.identity(4))
    assert not r.diagonal.any() and r.block_size == 4


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_expectation_delta_trace_zero_and_decomposition(seed):
    rng = np.random.default_rng(seed)
    n, m = 16, 24
    A = rng.integers(-3, 4, size=(n, n)) + 1j * rng.integers(-3, 4, size=(n, n))
    Hm = (A + A.conj().T) / 2
    rows = [[G(int(Hm[i, j].real * 2), int(Hm[i, j].imag * 2)) / 2 for j in range(n)] for i in range(n)]
    N = make_operator([0], rows, (0,), finite_spectrum=False)
    q, r = np.linalg.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))
    U = RestrictedUnitary(FloatMatrix(q * (np.diag(r) / np.abs(np.diag(r))), 1e-12))
    res = expectation_delta(N, U)
    assert abs(res.trace) <= 1e-8 * (1 + N.corner_frobenius())
    assert np.allclose(res.diagonal, res.first_term + res.second_term, rtol=0, atol=1e-10)


def test_expectation_delta_diag_equal():
    N = diagonal_operator(X3, [0, 1, 2], (0, 1))
    ident = expectation_delta_diag(N, N)
    assert ident.trace == 0 and ident.codims == (0, 0, 0)


def test_expectation_delta_diag_half_matrix():
    N = make_operator([0, 1], HALF_M, (0, 1))
    Np = diagonal_operator([0, 1], [0, 0], (0, 1))
    ident = expectation_delta_diag(N, Np)
    assert ident.trace == 1
    assert ident.codims == (-1, 1)
    assert ident.certificate.evaluate(N.spectrum.points) == 1


def test_expectation_delta_diag_lattice_certificate():
    rng = np.random.default_rng(3)
    H = random_basis(rng, 4, 2, True)
    N = make_operator(X3, H.conjugate(ExactMatrix.diag([0, 1, I_, I_])), (0, 1, 2))
    Np = diagonal_operator(X3, [0, 0, 2, 1], (0, 1, 2))
    ident = expectation_delta_diag(N, Np)
    expansion = sum((lam * c for lam, c in zip(X3, ident.codims)), G(0))
    assert expansion == ident.trace
    assert sum(ident.codims) == 0
    K = build_kmodule(X3)
    assert membership(K, ident.trace).evaluate(X3) == ident.trace
    # with independent generators the certificate is the codimension vector itself
    assert ident.certificate.coefficients == ident.codims


def test_expectation_delta_diag_errors():
    N = make_operator([0, 1], HALF_M, (0, 1))
    with pytest.raises(NotTraceClassError):
        expectation_delta_diag(N, diagonal_operator([0, 1], [0, 0], (1, 0)))
    with pytest.raises(DomainError):
        expectation_delta_diag(N, diagonal_operator([0, 1, 2], [2, 0], (0, 1)))
    with pytest.raises(DomainError):
        expectation_delta_diag(N, N)


# ---------------------------------------------------------------- diagonalizability


def test_diagonalizable_when_tail_is_hull():
    N = make_operator(X3, ExactMatrix.diag([1, 0]), (0, 1, 2))
    rep = is_restricted_diagonalizable(N)
    assert rep.lim_member and rep.verdict
    assert rep.cross_check_residual is not None and rep.cross_check_residual <= 1e-10


def test_interior_tail_point_blocks_lim_membership():
    N = make_operator([0, 1, 2], ExactMatrix.diag([0]), (0, 1, 2))
    rep = is_restricted_diagonalizable(N)
    assert set(rep.hull_vertices) == {G(0), G(2)}
    assert not rep.lim_member and not rep.verdict


def test_tail_omitting_a_vertex():
    # tail only visits 0 and 1, so the essential spectrum is a proper subset of X
    N = make_operator(X3, ExactMatrix.diag([I_]), (0, 1))
    rep = is_restricted_diagonalizable(N)
    assert rep.ess_spectrum == {G(0), G(1)}
    assert I_ not in rep.ess_spectrum and rep.lim_member


# ---------------------------------------------------------------- converse


def test_converse_recovers_known_unitary():
    rng = np.random.default_rng(11)
    H = random_basis(rng, 5, reflections=2, complex_=True)
    D = ExactMatrix.diag([0, 1, I_, 1, 0])
    N = make_operator(X3, H.conjugate(D), (0, 1, 2))
    Np = diagonal_operator(X3, [0, 1, 2, 1, 0], (0, 1, 2))
    rep = full_rank_converse_check(N, Np)
    assert rep.hypothesis_met and rep.codims == (0, 0, 0)
    assert rep.residual <= 1e-9


def test_converse_dependent_spectrum():
    N = diagonal_operator([0, 1, 2], [0, 1, 2], (0, 2))
    rep = full_rank_converse_check(N, N)
    assert not rep.hypothesis_met and rep.unitary is None


def test_converse_on_equal_operators_is_identity():
    N = diagonal_operator(X3, [2, 1, 0], (0, 1, 2))
    rep = full_rank_converse_check(N, N)
    assert np.array_equal(rep.unitary.corner_u.array, np.eye(3))


def test_converse_rejects_nonzero_trace():
    N = make_operator([0, 1], HALF_M, (0, 1))
    with pytest.raises(PreconditionError):
        full_rank_converse_check(N, diagonal_operator([0, 1], [0, 0], (0, 1)))


# ---------------------------------------------------------------- truncated HS diagnostics


def test_example_310_single_term():
    r = example_310_diagnostics(1)
    assert r.tc_partial == pytest.approx(math.sin(2) / math.sqrt(2), rel=1e-14)
    assert r.tc_partial == pytest.approx(0.6430, abs=1e-4)


def test_example_310_trend():
    r = example_310_diagnostics(10_000)
    assert r.hs_partial <= 4.0 and r.hs_monotone and r.tc_monotone
    assert r.tc_partial >= 0.9 * math.sqrt(2) * math.log(1e4)
    assert r.pythagoras_defect <= 1e-14 and r.block_defect <= 1e-14
    # direct summation oracle
    n = np.arange(1, 10_001)
    assert r.hs_partial == pytest.approx(math.fsum(2 * np.sin(1 / n) ** 2 + 2 * (1 - np.cos(1 / n)) ** 2), rel=1e-12)
    assert r.tc_partial == pytest.approx(math.fsum(np.abs(np.sin(2 / n)) / math.sqrt(2)), rel=1e-12)
    assert r.hs_partial <= 2 * math.pi**2 / 6 + 1


def test_example_310_zero_rule():
    r = example_310_diagnostics(50, rule="zero")
    assert r.hs_partial == 0 and r.tc_partial == 0


def test_example_310_power_rule():
    assert np.allclose(angles(4, "power", 0.75), np.arange(1, 5) ** -0.75)
    r = example_310_diagnostics(1000, rule="power", p=0.75)
    assert r.hs_partial < example_310_diagnostics(1000, rule="power", p=0.6).hs_partial


@pytest.mark.parametrize("kw", [dict(M=0), dict(M=5, rule="power", p=0.5), dict(M=5, rule="power", p=1.5), dict(M=5, rule="cube")])
def test_example_310_domain_errors(kw):
    with pytest.raises(DomainError):
        example_310_diagnostics(**kw)


def test_example_310_json():
    obj = example_310_diagnostics(3).to_json()
    assert obj["M"] == 3 and obj["rule"] == "inverse"
    assert obj["tc_partial"] == pytest.approx(math.fsum(abs(math.sin(2 / n)) / math.sqrt(2) for n in (1, 2, 3)))
