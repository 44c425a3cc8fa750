"""Total derivatives, prolongation and the on-manifold symmetry check."""

import pytest
import sympy as sp

from lie_reduce import expr as E
from lie_reduce.equivalence import ClassMember
from lie_reduce.errors import NotAffineError, TruncationError
from lie_reduce.jet import (
    PROLONGATION_INDICES,
    EquationInstance,
    check_symmetry,
    lie_derivative,
    prolong,
    total_derivative,
    total_derivative_multi,
)
from lie_reduce.lie import D, VectorField

t, x, u = E.t, E.x, E.u
# concrete smooth function standing in for u(t, x)
U = sp.exp(t) * x ** 3 + t ** 2 * x + sp.sin(x) * t


def _on_function(e):
    """Evaluate a jet expression on u = U(t, x) by plain differentiation."""
    binding = {}
    for (nt, nx), s in E.JET.items():
        d = U
        if nt:
            d = sp.diff(d, t, nt)
        if nx:
            d = sp.diff(d, x, nx)
        binding[s] = d
    return e.xreplace(binding)


@pytest.mark.parametrize(
    "text",
    ["u*u_x + t*u_xx", "exp(u)*u_x^2 - x*u_t", "c1*u_xxx/(1 + u^2)", "log(t)*u_tx + u_t*u"],
)
@pytest.mark.parametrize("direction", ["t", "x"])
def test_total_derivative_matches_chain_rule_on_concrete_function(text, direction):
    e = E.parse(text)
    var = t if direction == "t" else x
    lhs = _on_function(total_derivative(e, direction))
    rhs = sp.diff(_on_function(e), var)
    assert sp.simplify(lhs - rhs) == 0


def test_total_derivative_examples():
    assert total_derivative(u, "x") == E.u_x
    assert total_derivative(x, "t") == 0
    phi = E.FUNCTIONS["phi"](u)
    got = total_derivative(sp.diff(phi, u) * E.u_x, "x")
    want = sp.diff(phi, u, 2) * E.u_x ** 2 + sp.diff(phi, u) * E.u_xx
    assert E.equals(got, want)


def test_total_derivatives_commute():
    e = E.parse("f_u*u_x^2 + t*u*u_xx + exp(u)*x")
    assert E.equals(total_derivative(total_derivative(e, "t"), "x"),
                    total_derivative(total_derivative(e, "x"), "t"))


def test_total_derivative_truncation():
    with pytest.raises(TruncationError):
        total_derivative(E.jet(0, 6), "x")


def test_prolong_constant_field():
    P = prolong(D(t))
    assert all(z == 0 for z in P.zeta.values())


def test_prolong_hand_examples():
    P = prolong(VectorField.from_string("t*D_t + D_u"))
    assert P.zeta[(1, 0)] == -E.u_t
    assert P.zeta[(0, 1)] == 0 and P.zeta[(0, 2)] == 0
    P = prolong(VectorField.from_string("t*D_x + D_u"))
    assert P.zeta[(1, 0)] == -E.u_x
    assert P.zeta[(0, 1)] == 0


@pytest.mark.parametrize(
    "field",
    ["t*D_t + u*D_u", "x*D_x + u*D_u", "t*D_x + D_u", "x^2*D_x + t*u*D_u", "u*D_t + x*D_x + exp(u)*D_u"],
)
def test_prolongation_matches_standard_recursion(field):
    """zeta^{Jx} = D_x zeta^J - D_x(tau) u_{Jt} - D_x(xi) u_{Jx}."""
    V = VectorField.from_string(field)
    P = prolong(V)
    tau, xi = V[t], V[x]
    for (nt, nx) in PROLONGATION_INDICES:
        if (nt, nx + 1) not in P.zeta:
            continue
        rec = (total_derivative(P.zeta[(nt, nx)], "x")
               - total_derivative(tau, "x") * E.jet(nt + 1, nx)
               - total_derivative(xi, "x") * E.jet(nt, nx + 1))
        assert E.equals(rec, P.zeta[(nt, nx + 1)])
    # first step from the base: zeta^x = D_x eta - D_x tau u_t - D_x xi u_x
    first = (total_derivative(V[u], "x") - total_derivative(tau, "x") * E.u_t
             - total_derivative(xi, "x") * E.u_x)
    assert E.equals(first, P.zeta[(0, 1)])


def test_prolong_order_limit():
    with pytest.raises(ValueError):
        prolong(D(t), order=5)


def test_lie_derivative_examples():
    assert lie_derivative(prolong(D(x)), E.parse("u*u_xx + u_t")) == 0
    P = prolong(VectorField.from_string("t*D_t + D_u"))
    assert lie_derivative(P, E.u_t) == -E.u_t


def test_lie_derivative_matches_coordinate_sum():
    P = prolong(VectorField.from_string("t*D_t + u*D_u"))
    e = E.parse("u*u_t + u_x*u_xxxx")
    brute = P.tau * sp.diff(e, t) + P.eta * sp.diff(e, u)
    for (nt, nx), z in P.zeta.items():
        brute += z * sp.diff(e, E.jet(nt, nx))
    assert E.equals(lie_derivative(P, e), brute)


def test_equation_instance_requires_u_t():
    with pytest.raises(NotAffineError):
        EquationInstance(E.u_x + u)
    with pytest.raises(NotAffineError):
        EquationInstance(E.u_t ** 2 + u)


EXAMPLE_EQUATIONS = {
    "t*D_t + D_u": "u_t + exp(-u)*(-c1*u_x + (c3 - c6)*u_xx + c6*u_x^2 + c4*u_xxx + c5*u_xxxx - c2)",
    "t*D_t + u*D_u": "u*u_t + c3*u_xx + c4*u_xxx + c5*u_xxxx - c2*u",
    "x*D_x + u*D_u": "u_t + 2*u*u_x*(c1 + 3*c6*u_x) + u^2*u_xx*(c3 + 3*c6) + c4*u^3*u_xxx + c5*u^4*u_xxxx - c2*u",
    "t*D_x + D_u": "u_t + u*u_x + c3*u_xx - u_x^2 + c4*u_xxx + c5*u_xxxx - c2",
}


@pytest.mark.parametrize("field, equation", EXAMPLE_EQUATIONS.items())
def test_example_symmetries(field, equation):
    eq = EquationInstance(E.parse(equation))
    assert check_symmetry(VectorField.from_string(field), eq) == 0


def test_non_symmetry_has_nonzero_residual():
    eq = EquationInstance(E.parse(EXAMPLE_EQUATIONS["t*D_x + D_u"]))
    assert check_symmetry(VectorField.from_string("x*D_x"), eq) != 0


def test_translations_are_symmetries_of_opaque_member():
    eq = ClassMember.opaque().equation()
    assert check_symmetry(D(t), eq) == 0
    assert check_symmetry(D(x), eq) == 0


def test_symmetry_agrees_with_finite_flow_on_exact_solution():
    """t D_x + D_u maps the Example 4 solution to solutions; check with plain sympy."""
    eq = E.parse(EXAMPLE_EQUATIONS["t*D_x + D_u"])
    c0, c2, s = E.c[0], E.c[2], sp.Symbol("s", real=True)
    sol = c2 * t / 2 + (x + sp.log(t) + c0) / t
    moved = sol.subs(x, x - s * t) + s  # image under x -> x + s t, u -> u + s
    for candidate in (sol, moved):
        binding = {E.u: candidate, E.u_t: sp.diff(candidate, t)}
        for k, sym in enumerate((E.u_x, E.u_xx, E.u_xxx, E.u_xxxx), 1):
            binding[sym] = sp.diff(candidate, x, k)
        assert sp.simplify(eq.xreplace(binding)) == 0


def test_total_derivative_multi_orders():
    assert total_derivative_multi(u, 0, 3) == E.u_xxx
    assert total_derivative_multi(u, 1, 2) == E.jet(1, 2)
