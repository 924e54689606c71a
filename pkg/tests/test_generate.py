from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restdiag.cli.generate import (
    GENERATOR_ID,
    ExactBasis,
    align_tail,
    generate_instance,
    random_basis,
    random_diagonal_partner,
    random_operator,
    random_projection_pair,
    random_spectrum,
    random_tail,
    rng_for,
)
from restdiag.diagseq import TailSchedule, hull_vertices
from restdiag.errors import UsageError
from restdiag.exactcore import ExactMatrix, annihilating_polynomial_check, is_normal_exact
from restdiag.opmodel import essential_codimension, essential_codimension_fredholm, tails_agree

seeds = st.integers(0, 2**64 - 1)


def test_generator_id_is_versioned():
    assert GENERATOR_ID.endswith("/1")


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), seeds, st.booleans())
def test_exact_basis_is_unitary(n, seed, cplx):
    W = random_basis(rng_for(seed), n, reflections=3, complex_=cplx)
    eye = ExactMatrix.identity(n)
    assert W.conjugate(eye) == eye
    A = ExactMatrix.diag(list(range(n)))
    assert W.conjugate_inverse(W.conjugate(A)) == A
    assert ExactBasis.from_json(W.to_json()) == W


def test_tail_helpers():
    rng = rng_for(1)
    t = random_tail(rng, (0, 2), cover=True)
    assert set(t) == {0, 2}
    # a tail placed after a dim-2 corner, seen from a dim-5 block
    assert align_tail((0, 1, 1), 2, 5).pattern == TailSchedule((0, 1, 1)).rotated(3).pattern
    pts = random_spectrum(rng, 5)
    assert len(set(pts)) == 5


@pytest.mark.parametrize("seed", range(20))
def test_projection_pair_contract(seed):
    pair = generate_instance("projection-pair", seed, dim=12)
    P, Q = pair.P.projection, pair.Q.projection
    for X in (P, Q):
        assert X.corner @ X.corner == X.corner and X.corner.is_hermitian()
    assert tails_agree(P, Q)
    c = essential_codimension(P, Q).value
    assert isinstance(c, int) and c == pair.codim == essential_codimension_fredholm(P, Q).value


@pytest.mark.parametrize("mode", ["zero", "nonzero"])
def test_projection_pair_forced_codim(mode):
    for trial in range(20):
        pair = random_projection_pair(rng_for(9, trial), max_dim=10, codim=mode)
        c = essential_codimension(pair.P.projection, pair.Q.projection).value
        assert (c == 0) is (mode == "zero")


def test_restricted_unitary_defect():
    U = generate_instance("restricted-unitary", 4, dim=8)
    assert U.dim == 8 and U.defect <= 1e-12


def test_single_point_operator_is_scalar():
    inst = generate_instance("finite-spectrum-operator", 3, dim=6, m=1)
    N = inst.operator
    lam = N.spectrum[0]
    assert N.corner == ExactMatrix.identity(6).scale(lam)
    assert N.ess_spectrum() == {lam}


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 6))
def test_operator_is_normal_with_declared_spectrum(seed, m):
    N = generate_instance("finite-spectrum-operator", seed, dim=5, m=m).operator
    assert len(N.spectrum) == m
    assert is_normal_exact(N.corner)
    assert annihilating_polynomial_check(N.corner, N.spectrum.points)


def test_hull_tail_covers_vertices():
    for t in range(10):
        N = random_operator(rng_for(2, t), max_dim=6, hull_tail=True).operator
        assert N.ess_spectrum() == set(hull_vertices(N.spectrum.points))


def test_diagonal_partner_tail_matches():
    rng = rng_for(5)
    for _ in range(10):
        N = random_operator(rng, max_dim=8).operator
        D = random_diagonal_partner(rng, N, max_dim=8)
        assert D.is_diagonal() and tails_agree(N, D)


def test_generation_is_deterministic():
    a = generate_instance("finite-spectrum-operator", 77, dim=7)
    b = generate_instance("finite-spectrum-operator", 77, dim=7)
    assert a.operator.corner == b.operator.corner and a.basis == b.basis
    c = generate_instance("finite-spectrum-operator", 77, dim=7, trial=1)
    assert c.operator.corner != a.operator.corner or c.basis != a.basis
    u1, u2 = (generate_instance("restricted-unitary", 5, dim=4) for _ in range(2))
    assert np.array_equal(u1.corner_u.array, u2.corner_u.array)


@pytest.mark.parametrize(
    "kind, kw",
    [("projection-pair", dict(dim=0)), ("projection-pair", dict(dim=129)), ("finite-spectrum-operator", dict(m=7)), ("blob", {})],
)
def test_bounds_are_usage_errors(kind, kw):
    with pytest.raises(UsageError):
        generate_instance(kind, 0, **kw)
