"""Vector fields, structure constants, adjoint action and the orbit normalizer."""

import math

import numpy as np
import pytest
import sympy as sp
from scipy.linalg import expm

from lie_reduce import expr as E
from lie_reduce.equivalence import projected_basis
from lie_reduce.errors import ClosureError, SeriesClosureError, SpanError
from lie_reduce.lie import (
    COORDS,
    UNRESOLVED,
    AlgebraBasis,
    D,
    VectorField,
    ad_matrix,
    adjoint,
    adjoint_matrix,
    adjoint_table,
    bracket,
    commutator_table,
    jordan_chevalley,
    matrix_exponential,
    normalize_element,
)

eps = E.eps


@pytest.fixture(scope="module")
def B():
    return projected_basis()


def _oracle_bracket(V, W):
    """[V, W]^k = sum_s V^s d_s W^k - W^s d_s V^k, straight from sympy."""
    out = {}
    for k in COORDS:
        val = sum(V[s] * sp.diff(W[k], s) - W[s] * sp.diff(V[k], s) for s in COORDS)
        out[k] = sp.simplify(val)
    return out


def _series_adjoint(V, W, order):
    """Truncated W - eps [V, W] + eps^2/2 [V, [V, W]] - ..."""
    acc, term = W, W
    for k in range(1, order + 1):
        term = bracket(V, term)
        acc = acc + term * ((-eps) ** k / math.factorial(k))
    return acc


# --- vector fields -----------------------------------------------------------------


def test_vector_field_parsing_and_printing():
    V = VectorField.from_string("t*D_t + u*D_u - f*D_f")
    assert V[E.t] == E.t and V[E.FIBER["f"]] == -E.FIBER["f"]
    assert V.to_string() == "t*D_t + u*D_u - f*D_f"
    assert "\\partial_{t}" in V.to_string("latex")


def test_vector_field_arithmetic():
    V, W = D(E.t), D(E.x)
    assert (V + W) - W == V
    assert (V * 3)[E.t] == 3
    assert (-V)[E.t] == -1
    assert (V - V).is_zero()


def test_apply_field_to_expression():
    V = VectorField.from_string("t*D_t + u*D_u")
    assert E.equals(V(E.t ** 2 * E.u), 3 * E.t ** 2 * E.u)


# --- brackets and structure constants -------------------------------------------------


def test_bracket_examples(B):
    Z = B.fields
    assert bracket(Z[0], Z[3]) == Z[0]
    assert bracket(Z[4], Z[1]) == -Z[4]
    assert bracket(Z[5], Z[5]).is_zero()


def test_bracket_matches_direct_formula(B):
    fields = list(B.fields) + [VectorField.from_string("x*D_t + u^2*D_u + alpha*D_f")]
    for V in fields:
        for W in fields:
            want = _oracle_bracket(V, W)
            got = bracket(V, W)
            assert all(E.equals(got[k], want[k]) for k in COORDS)


def test_commutator_table_matches_oracle(B):
    C = commutator_table(B)
    for i, V in enumerate(B.fields):
        for j, W in enumerate(B.fields):
            assert B.combine(C[i][j]) == VectorField(_oracle_bracket(V, W))


def test_commutator_table_of_abelian_basis():
    A = AlgebraBasis([D(E.t), D(E.x)], ["X1", "X2"])
    assert all(v == 0 for row in commutator_table(A) for cell in row for v in cell)


def test_closure_error_names_pair(B):
    with pytest.raises(ClosureError) as info:
        AlgebraBasis([B.fields[0], B.fields[4]], ["Z1", "Z5"])
    assert set(info.value.pair) == {"Z1", "Z5"}


def test_coordinates_outside_span(B):
    with pytest.raises(SpanError):
        B.coordinates(D(E.t))


# --- ad matrices ---------------------------------------------------------------------


def test_ad_matrix_examples(B):
    M = ad_matrix(B.fields[1], B).M
    assert M == sp.diag(0, 0, 0, 0, 1, 1, 1, 1)
    A = ad_matrix(B.fields[0], B).M
    assert not A.is_zero_matrix and (A * A).is_zero_matrix
    assert ad_matrix(B.fields[0] * 0, B).M.is_zero_matrix


def test_ad_matrix_row_convention(B):
    """M[j][i] is the coefficient of Z_i in [V, Z_j]."""
    V = B.combine([1, 2, 0, -1, 0, 3, 0, 0])
    M = ad_matrix(V, B).M
    for j, Zj in enumerate(B.fields):
        assert B.combine(list(M.row(j))) == bracket(V, Zj)


# --- adjoint action ------------------------------------------------------------------


def test_adjoint_examples(B):
    Z = B.fields
    assert adjoint(Z[1], Z[4], eps, B) == Z[4] * sp.exp(-eps)
    assert adjoint(Z[0], Z[4], eps, B) == Z[4] - Z[6] * eps
    V = B.combine([1, 1, 0, 2, 0, 0, 1, 0])
    assert adjoint(V, V, eps, B) == V


@pytest.mark.parametrize(
    "coeffs",
    [[1, 0, 0, 1, 0, 0, 0, 0], [0, 1, 1, 0, 1, 0, 0, 0], [1, 2, -1, 1, 1, 1, 1, 1], [0, 0, 0, 1, 0, 0, 1, 1]],
)
def test_adjoint_matches_bracket_series(B, coeffs):
    """Taylor coefficients of the closed form equal iterated brackets up to order 6."""
    V = B.combine(coeffs)
    for W in B.fields:
        closed = adjoint(V, W, eps, B)
        series = _series_adjoint(V, W, 6)
        for k in COORDS:
            diff = sp.series(closed[k] - series[k], eps, 0, 7).removeO()
            assert sp.simplify(diff) == 0


def test_adjoint_matrix_matches_numeric_expm(B):
    V = B.combine([1, 2, -1, 1, 3, 0, 2, 1])
    M, exact = adjoint_matrix(V, B, eps)
    assert exact
    A = np.array(ad_matrix(V, B).acting().tolist(), dtype=float)
    for s in (0.37, -1.2):
        want = expm(-s * A)
        got = np.array(M.subs(eps, s).evalf().tolist(), dtype=float)
        assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


def test_adjoint_table_examples(B):
    T = adjoint_table(B)
    assert B.combine(T[2][5]) == B.fields[5] * sp.exp(2 * eps)
    assert B.combine(T[0][3]) == B.fields[3] - B.fields[0] * eps


def test_adjoint_table_of_abelian_basis_is_identity():
    A = AlgebraBasis([D(E.t), D(E.x)], ["X1", "X2"])
    T = adjoint_table(A)
    assert T[0][1] == [0, 1] and T[1][0] == [1, 0]


def test_series_closure_error_for_irrational_spectrum():
    V = VectorField.from_string("x*D_u + 2*u*D_x")
    A = AlgebraBasis([D(E.x), D(E.u), V], ["P", "Q", "V"])
    with pytest.raises(SeriesClosureError) as info:
        adjoint(V, D(E.x), eps, A)
    trunc = info.value.truncated
    # truncated series still agrees with the iterated brackets to order 8
    series = _series_adjoint(V, D(E.x), 8)
    assert all(E.equals(trunc[k], series[k]) for k in COORDS)


def test_jordan_chevalley_split():
    A = sp.Matrix([[2, 1, 0], [0, 2, 0], [0, 0, -1]])
    S, lams, N = jordan_chevalley(A)
    assert sorted(lams) == [-1, 2, 2]
    assert N != sp.zeros(3) and (N ** 2).is_zero_matrix
    M, exact = matrix_exponential(A, eps)
    assert exact
    assert E.equals(M[0, 1], eps * sp.exp(2 * eps))
    assert jordan_chevalley(sp.Matrix([[0, 2], [1, 0]])) is None


# --- optimal-system normalizer -----------------------------------------------------------


def test_normalize_element_spot_checks(B):
    r = normalize_element([5, 0, 0, 1, 0, 0, 0, 0], B)
    assert r.element == [0, 0, 0, 1, 0, 0, 0, 0]
    assert r.label == "Z^(8)" and r.values == {E.symbol("a"): 0, E.symbol("b"): 0}
    assert r.transcript == ["Ad(exp(5*Z1)) removes Z1"]
    r = normalize_element([0, 1, 0, 0, 0, 0, 0, 0], B)
    assert r.label == "Z^(2)" and r.transcript == []
    r = normalize_element([0, 0, 0, 0, 1, 0, 1, 0], B)
    assert r.element == [0, 0, 0, 0, 1, 0, 0, 0]
    assert r.transcript == ["Ad(exp(Z1)) removes Z7"]
    assert r.label == "Z^(9)" and r.constraint_violations == ["c != 2*d"]


def test_normalize_element_scales_to_representative(B):
    r = normalize_element([0, 0, 0, 0, 0, 0, -3, 0], B)
    assert r.label == "Z^(6)" and r.values == {E.symbol("a"): 0}


def test_normalize_element_unresolved_is_a_value(B):
    r = normalize_element([1, 3, 1, 2, 0, 1, 0, 0], B)
    assert r.label == UNRESOLVED and not r.resolved


def test_normalize_element_rejects_zero(B):
    with pytest.raises(ValueError):
        normalize_element([0] * 8, B)
