"""Seeded property suites plus a few hypothesis-driven identities."""

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from lie_reduce import expr as E
from lie_reduce.equivalence import projected_basis
from lie_reduce.lie import bracket
from lie_reduce.properties import (
    check_antisymmetry,
    check_automorphism,
    check_derivative_at_zero,
    check_group_law,
    check_idempotence,
    check_jacobi,
    check_leibniz,
    check_ring_axioms,
)

B = projected_basis()


@pytest.mark.parametrize(
    "suite",
    [check_jacobi, check_antisymmetry, check_automorphism, check_group_law, check_derivative_at_zero],
)
def test_algebra_suites_small(suite):
    out = suite(B, cases=10, seed=11)
    assert out.passed, out.failures


@pytest.mark.parametrize("suite", [check_leibniz, check_idempotence, check_ring_axioms])
def test_expression_suites_small(suite):
    out = suite(cases=40, seed=11)
    assert out.passed, out.failures


def test_suites_are_reproducible():
    a = check_jacobi(B, cases=5, seed=4)
    b = check_jacobi(B, cases=5, seed=4)
    assert (a.cases, a.failures) == (b.cases, b.failures)


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=4).map(sp.Rational)
vectors = st.lists(rationals, min_size=8, max_size=8)


@settings(max_examples=25, deadline=None)
@given(vectors, vectors)
def test_bracket_is_bilinear_and_antisymmetric(a, b):
    V, W = B.combine(a), B.combine(b)
    assert bracket(V, W) == -bracket(W, V)
    assert bracket(V * 2, W) == bracket(V, W) * 2


@settings(max_examples=25, deadline=None)
@given(rationals, rationals)
def test_normalize_rational_arithmetic(p, q):
    e = (E.u + p) * (E.u - q)
    assert E.normalize(e - E.u ** 2 - (p - q) * E.u + p * q) == 0
