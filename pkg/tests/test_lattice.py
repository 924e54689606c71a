from __future__ import annotations

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from restdiag.errors import InvalidSpectrumError
from restdiag.exactcore import GaussianRational
from restdiag.lattice import (
    Certificate,
    build_kmodule,
    coset_reduce,
    hermite_normal_form,
    independence_check,
    integer_determinant,
    membership,
)

G = GaussianRational
I_ = G(0, 1)
X3 = [0, 1, I_]

small_q = st.fractions(min_value=-3, max_value=3, max_denominator=4)
points = st.builds(lambda a, b: G(a, b), small_q, small_q)
spectra = st.lists(points, min_size=1, max_size=5, unique=True)


def _matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


# ---------------------------------------------------------------- Hermite form


@pytest.mark.parametrize(
    "M, H_expected",
    [
        ([[1, 0], [0, 1]], [[1, 0], [0, 1]]),
        ([[2, 4], [0, 0]], [[2, 0], [0, 0]]),
        ([[1], [1]], [[1], [1]]),
    ],
)
def test_hnf_examples(M, H_expected):
    H, T = hermite_normal_form(M)
    assert H == H_expected
    assert _matmul(M, T) == H
    assert abs(integer_determinant(T)) == 1


def test_hnf_identity_has_identity_transform():
    assert hermite_normal_form([[1, 0], [0, 1]])[1] == [[1, 0], [0, 1]]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 2), st.integers(1, 5), st.data())
def test_hnf_transform_is_unimodular_and_exact(rows, cols, data):
    M = [data.draw(st.lists(st.integers(-20, 20), min_size=cols, max_size=cols)) for _ in range(rows)]
    H, T = hermite_normal_form(M)
    assert _matmul(M, T) == H
    # sympy determinant as an independent oracle for the Bareiss routine
    det = sympy.Matrix(T).det()
    assert abs(det) == 1 and det == integer_determinant(T)
    # same lattice: M = H T^{-1} with integer T^{-1}
    Tinv = sympy.Matrix(T).inv()
    assert all(x.is_integer for x in Tinv)
    assert sympy.Matrix(H) * Tinv == sympy.Matrix(M)


def test_hnf_rejects_three_rows():
    with pytest.raises(ValueError):
        hermite_normal_form([[1], [2], [3]])


def test_integer_determinant_oracle():
    T = [[2, 3, 1], [4, 1, -2], [0, 5, 7]]
    assert integer_determinant(T) == sympy.Matrix(T).det()
    assert integer_determinant([[0, 1], [1, 0]]) == -1
    assert integer_determinant([[1, 2], [2, 4]]) == 0


# ---------------------------------------------------------------- modules


def test_two_point_module_is_integers():
    K = build_kmodule([0, 1])
    assert K.rank == 1
    assert K.hermite_basis == ((1, 0),)
    assert K.generators == ((-1, 0),)


def test_gaussian_integer_module():
    K = build_kmodule(X3)
    assert K.generators == ((-1, 0), (0, -1))
    assert K.rank == 2
    assert set(K.hermite_basis) == {(1, 0), (0, 1)}


def test_single_point_module_is_zero():
    K = build_kmodule([7])
    assert K.rank == 0 and K.generators == ()
    assert membership(K, 0) == Certificate((0,))
    assert membership(K, 5) is None


def test_duplicate_points_rejected():
    with pytest.raises(InvalidSpectrumError):
        build_kmodule([1, 1])


def test_denominators_are_cleared():
    K = build_kmodule([G("1/2"), G(0, "1/3")])
    assert K.denom == 6
    assert K.generators == ((3, -2),)


def test_membership_certificate_by_back_substitution():
    K = build_kmodule(X3)
    cert = membership(K, G(2, 2))
    assert cert is not None
    # a_1 = a_2 = -2 from -a_1 - a_2 i = 2 + 2i, then c = (a_1 + a_2, -a_1, -a_2)
    assert cert.coefficients == (-4, 2, 2)
    assert cert.evaluate(X3) == G(2, 2)
    assert sum(cert.coefficients) == 0


def test_membership_rejects_fraction():
    assert membership(build_kmodule(X3), G("1/10")) is None


@pytest.mark.parametrize("X", [[0, 1], X3, [7], [G("1/2"), 3, G(1, 1)]])
def test_zero_has_zero_certificate(X):
    assert membership(build_kmodule(X), 0).coefficients == (0,) * len(X)


def test_certificate_must_sum_to_zero():
    with pytest.raises(ValueError):
        Certificate((1, 1))
    with pytest.raises(ValueError):
        Certificate((1, -1)).evaluate([0, 1, 2])


@pytest.mark.parametrize(
    "X, z, expected",
    [([0, 1], G("7/2"), G("1/2")), (X3, G(3, 4), G(0)), ([7], G(5), G(5))],
)
def test_coset_reduce_examples(X, z, expected):
    assert coset_reduce(build_kmodule(X), z) == expected


@pytest.mark.parametrize("X, expected", [(X3, True), ([0, 1, 2], False), ([0, 1], True)])
def test_independence_examples(X, expected):
    assert independence_check(build_kmodule(X)) is expected


def test_independence_impossible_beyond_rank_two():
    assert not independence_check(build_kmodule([0, 1, I_, G(1, 1)]))


@settings(max_examples=80, deadline=None)
@given(spectra, st.data())
def test_integer_combinations_are_members(X, data):
    K = build_kmodule(X)
    a = data.draw(st.lists(st.integers(-6, 6), min_size=len(X) - 1, max_size=len(X) - 1))
    w = G(0)
    for aj, lam in zip(a, X[1:]):
        w = w + (X[0] - lam) * aj
    cert = membership(K, w)
    assert cert is not None
    assert cert.evaluate(X) == w and sum(cert.coefficients) == 0
    assert coset_reduce(K, w) == 0


@settings(max_examples=80, deadline=None)
@given(spectra, points)
def test_membership_iff_reduces_to_zero(X, z):
    K = build_kmodule(X)
    r = coset_reduce(K, z)
    assert (membership(K, z) is not None) == (r == 0)
    # the representative differs from z by a lattice element
    assert membership(K, z - r) is not None
    assert coset_reduce(K, r) == r


def test_kmodule_json():
    d = build_kmodule(X3).to_json()
    assert d["rank"] == 2 and d["denom"] == 1
    assert d["spectrum"][2] == {"re": "0", "im": "1"}
