"""Expression engine: parsing, printing, normalization, calculus helpers."""

import random

import pytest
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr

from lie_reduce import expr as E
from lie_reduce.errors import (
    NotAffineError,
    ParseError,
    TruncationError,
    UnknownSymbolError,
    ZeroCoefficientError,
)
from lie_reduce.properties import random_expression


def _sympy_oracle(text):
    """Independent parse through sympy's own parser (plain atoms only)."""
    local = {s.name: s for s in (E.t, E.x, E.u, E.z, E.h)}
    local.update({k: v for k, v in E.PARAMETERS.items()})
    local.update({"u_t": E.u_t, "u_x": E.u_x, "u_xx": E.u_xx})
    return parse_expr(text.replace("^", "**"), local_dict=local)


def _numeric_agree(a, b, trials=5, seed=3):
    """Agreement at random rational points: an oracle independent of normalize."""
    rng = random.Random(seed)
    syms = sorted((a - b).free_symbols, key=str)
    for _ in range(trials):
        point = {s: sp.Rational(rng.randint(1, 9), rng.randint(2, 7)) for s in syms}
        if abs(complex(sp.N((a - b).subs(point), 30))) > 1e-20:
            return False
    return True


# --- parse -----------------------------------------------------------------------


def test_parse_sum_with_function_derivative():
    e = E.parse("u_t + f_u*u_x")
    fu = sp.diff(E.FUNCTIONS["f"](E.u), E.u)
    assert e == E.u_t + fu * E.u_x


def test_parse_ode_derivatives():
    e = E.parse("c5*h''''+c4*h'''")
    assert e == E.c[5] * E.hder(4) + E.c[4] * E.hder(3)


@pytest.mark.parametrize(
    "text",
    ["(c1 + 2*u)^3/(t + x)", "u_t*u - 3/4*u_xx + c2^2", "-(x - t)^(-2) + a*b/m", "2*t^2*(h + h/t - 1/t^2 - c2)"],
)
def test_parse_agrees_with_sympy_parser(text):
    assert E.equals(E.parse(text), _sympy_oracle(text))


def test_parse_precedence_unary_minus_binds_looser_than_power():
    assert E.parse("-x^2") == -E.x ** 2
    assert E.parse("2*x^-1") == 2 / E.x


def test_parse_elementary_functions():
    e = E.parse("exp(u) + log(t) + ln(t) + sqrt(w) + arctan(x) + atan(x)")
    assert e == sp.exp(E.u) + 2 * sp.log(E.t) + sp.sqrt(E.w) + 2 * sp.atan(E.x)


def test_parse_function_application_and_shorthand():
    phi = E.FUNCTIONS["phi"]
    assert E.parse("phi_uu") == sp.diff(phi(E.u), E.u, 2)
    assert E.equals(E.parse("f(u^2)"), E.FUNCTIONS["f"](E.u ** 2))


def test_parse_extra_symbols():
    Z1 = sp.Symbol("Z1")
    assert E.parse("Z1 - eps*Z1", {"Z1": Z1}) == Z1 - E.eps * Z1


@pytest.mark.parametrize(
    "text, column",
    [("(", 1), ("x +", 4), ("exp(x", 4), ("x $ 1", 3), ("x)", 2), ("", 1), ("x^^2", 3)],
)
def test_parse_errors_report_columns(text, column):
    with pytest.raises(ParseError) as info:
        E.parse(text)
    assert info.value.column == column


def test_parse_unknown_symbol():
    with pytest.raises(UnknownSymbolError) as info:
        E.parse("u + qq")
    assert info.value.column == 5
    with pytest.raises(UnknownSymbolError):
        E.parse("zeta(u)")


def test_parse_never_produces_floats():
    e = E.parse("3/4*u + 1/3")
    assert not e.atoms(sp.Float)


# --- print -------------------------------------------------------------------------


def test_plain_printing():
    assert E.to_string(E.parse("u_t + f_u*u_x")) == "u_t + f_u*u_x"
    assert E.to_string(sp.Rational(3, 4)) == "3/4"
    assert E.to_string(E.parse("c5*h''''+c4*h'''")) == "c5*h'''' + c4*h'''"


def test_latex_printing():
    assert E.to_string(sp.exp(-E.u), "latex") == "e^{-u}"
    assert "\\frac" in E.to_string(E.parse("x/(t + 1)"), "latex")
    assert E.to_string(E.epsilons[3], "latex") == "\\varepsilon_{3}"


@pytest.mark.parametrize("seed", range(40))
def test_plain_round_trip(seed):
    e = E.normalize(random_expression(random.Random(seed)))
    assert E.equals(E.parse(E.to_string(e)), e)


@pytest.mark.parametrize("seed", range(20))
def test_json_round_trip(seed):
    e = E.normalize(random_expression(random.Random(100 + seed)))
    assert E.from_json_tree(E.to_json_tree(e)) == e
    assert E.to_string(e, "json") == E.to_string(e, "json")


def test_json_tree_keeps_exact_rationals():
    tree = E.to_json_tree(E.parse("3/4*h''"))
    assert "3/4" in str(tree)


# --- normalize / equals ------------------------------------------------------------


def test_normalize_examples():
    assert E.normalize(E.parse("(u+1)^2 - u^2 - 2*u - 1")) == 0
    assert E.normalize(sp.exp(E.h) * sp.exp(-E.h)) == 1
    got = E.normalize(E.parse("t^2*(h' + h/t - 1/t^2 - c2)"))
    assert E.to_string(got) == "t^2*h' + h*t - c2*t^2 - 1"


def test_normalize_sigma_and_sqrt_rules():
    assert E.normalize(E.sigma ** 2) == 1
    assert E.normalize(E.sigma ** 3) == E.sigma
    assert E.normalize(sp.sqrt(E.w) ** 2) == E.w


@pytest.mark.parametrize("seed", range(30))
def test_normalize_preserves_value(seed):
    e = random_expression(random.Random(200 + seed))
    assert _numeric_agree(E.normalize(e), e)


def test_equals_examples():
    e = E.parse("c1*u_x^2")
    assert E.equals(e, e)
    assert E.equals(E.parse("2*(c3 - c6)*h''/2"), E.parse("(c3 - c6)*h''"))
    assert not E.equals(E.u_x ** 2, E.u_xx)


def test_canonical_form_is_unique_for_equal_expressions():
    a = E.parse("(x + t)^2/(x + t)")
    b = E.parse("t + x")
    assert E.normalize(a) == E.normalize(b)


# --- calculus helpers --------------------------------------------------------------


def test_diff_examples():
    assert E.diff(E.u ** 2, E.u) == 2 * E.u
    phi = E.FUNCTIONS["phi"](E.u)
    assert E.diff(phi, E.u) == sp.diff(phi, E.u)
    assert E.to_string(E.diff(phi, E.u)) == "phi_u"
    assert E.equals(E.diff(E.c[1] * sp.exp(-E.u), E.u), -E.c[1] * sp.exp(-E.u))
    assert E.diff(E.x, E.t) == 0


def test_substitute_examples():
    e = E.substitute(E.u_t + E.u_x, {E.u_t: 1 / E.t, E.u_x: E.hder(1)})
    assert E.equals(e, 1 / E.t + E.hder(1))
    raw = (E.u + 1) ** 2
    assert E.substitute(raw, {}) == E.normalize(raw)
    assert E.substitute(E.parse("f_u"), {E.FUNCTIONS["f"]: E.parse("u^2/2 + c1")}) == E.u


def test_substitute_is_simultaneous():
    assert E.substitute(E.t - 2 * E.x, {E.t: E.x, E.x: E.t}) == E.x - 2 * E.t


def test_substitutions_with_disjoint_bindings_commute():
    e = E.parse("u*u_x + t*exp(x)")
    b1, b2 = {E.u: E.t ** 2}, {E.x: E.h + 1}
    assert E.substitute(E.substitute(e, b1), b2) == E.substitute(E.substitute(e, b2), b1)


def test_solve_for():
    R = E.parse("c3*u_xx + c4*u_xxx - c2*u")
    assert E.equals(E.solve_for(E.u * E.u_t + R, E.u_t), -R / E.u)
    assert E.equals(E.solve_for(E.u_t + R, E.u_t), -R)
    with pytest.raises(NotAffineError):
        E.solve_for(E.u_t ** 2, E.u_t)
    with pytest.raises(ZeroCoefficientError):
        E.solve_for(E.u_x, E.u_t)


def test_jet_truncation():
    assert E.jet(0, 4) == E.u_xxxx
    with pytest.raises(TruncationError):
        E.jet(3, 4)
