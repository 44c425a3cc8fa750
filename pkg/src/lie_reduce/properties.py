"""Seeded randomized property suites shared by the CLI and the tests."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import sympy as sp

from . import expr as E
from .lie import adjoint_matrix, bracket

_ATOMS = (E.t, E.x, E.u, E.u_x, E.u_xx, E.c[1], E.c[2], E.symbol("a"))
_E1, _E2 = sp.symbols("epsilon_1 epsilon_2", real=True)


@dataclass
class PropertyOutcome:
    name: str
    cases: int
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


def random_rational(rng: random.Random, span=3, den=3):
    return sp.Rational(rng.randint(-span, span), rng.randint(1, den))


def random_coefficients(rng, n=8, density=0.6):
    v = [random_rational(rng) if rng.random() < density else sp.Integer(0) for _ in range(n)]
    if all(c == 0 for c in v):
        v[rng.randrange(n)] = sp.Integer(1)
    return v


def random_expression(rng: random.Random, depth=3) -> sp.Expr:
    """Small rational/exponential expression over a few jet symbols and parameters."""
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(_ATOMS) if rng.random() < 0.7 else random_rational(rng)
    op = rng.choice("++**/^e")
    a = random_expression(rng, depth - 1)
    if op == "e":
        return sp.exp(rng.choice(_ATOMS[:3]) * random_rational(rng))
    if op == "^":
        return a ** rng.randint(0, 3)
    b = random_expression(rng, depth - 1)
    if op == "+":
        return a + b
    if op == "*":
        return a * b
    if E.normalize(b) == 0:
        b = b + 1
    return a / b


def _coords_bracket(C, v, w):
    n = len(v)
    out = [sp.Integer(0)] * n
    for i in range(n):
        if v[i] == 0:
            continue
        for j in range(n):
            if w[j] == 0:
                continue
            for k in range(n):
                out[k] += v[i] * w[j] * C[i][j][k]
    return [E.normalize(q) for q in out]


def check_jacobi(B, cases=200, seed=0) -> PropertyOutcome:
    rng = random.Random(seed)
    out = PropertyOutcome("jacobi", cases)
    for k in range(cases):
        U, V, W = (B.combine(random_coefficients(rng)) for _ in range(3))
        total = bracket(U, bracket(V, W)) + bracket(V, bracket(W, U)) + bracket(W, bracket(U, V))
        if not total.is_zero():
            out.failures.append(k)
    return out


def check_antisymmetry(B, cases=200, seed=0) -> PropertyOutcome:
    rng = random.Random(seed)
    out = PropertyOutcome("antisymmetry", cases)
    for k in range(cases):
        V, W = (B.combine(random_coefficients(rng)) for _ in range(2))
        if not (bracket(V, W) + bracket(W, V)).is_zero():
            out.failures.append(k)
    return out


def check_automorphism(B, cases=200, seed=0) -> PropertyOutcome:
    """Ad(exp(eps V)) [W1, W2] = [Ad W1, Ad W2] for random V, W1, W2, symbolically in eps."""
    rng = random.Random(seed)
    C = B.structure_constants()
    out = PropertyOutcome("ad-automorphism", cases)
    for k in range(cases):
        V = B.combine(random_coefficients(rng))
        M, _ = adjoint_matrix(V, B, E.eps)
        w1, w2 = random_coefficients(rng), random_coefficients(rng)
        lhs = M * sp.Matrix(_coords_bracket(C, w1, w2))
        rhs = _coords_bracket(C, list(M * sp.Matrix(w1)), list(M * sp.Matrix(w2)))
        if any(E.normalize(a - b) != 0 for a, b in zip(lhs, rhs)):
            out.failures.append(k)
    return out


def check_group_law(B, cases=200, seed=0) -> PropertyOutcome:
    """Ad(exp(e1 V)) Ad(exp(e2 V)) = Ad(exp((e1 + e2) V))."""
    rng = random.Random(seed)
    out = PropertyOutcome("ad-group-law", cases)
    for k in range(cases):
        V = B.combine(random_coefficients(rng))
        M, _ = adjoint_matrix(V, B, E.eps)
        diff = M.xreplace({E.eps: _E1}) * M.xreplace({E.eps: _E2}) - M.xreplace({E.eps: _E1 + _E2})
        if any(E.normalize(q) != 0 for q in diff):
            out.failures.append(k)
    return out


def check_derivative_at_zero(B, cases=200, seed=0) -> PropertyOutcome:
    """d/deps Ad(exp(eps V)) W at eps = 0 equals -[V, W]."""
    rng = random.Random(seed)
    C = B.structure_constants()
    out = PropertyOutcome("derivative-at-zero", cases)
    for k in range(cases):
        v, w = random_coefficients(rng), random_coefficients(rng)
        M, _ = adjoint_matrix(B.combine(v), B, E.eps)
        d = (M.diff(E.eps) * sp.Matrix(w)).subs(E.eps, 0)
        if any(E.normalize(a + b) != 0 for a, b in zip(d, _coords_bracket(C, v, w))):
            out.failures.append(k)
    return out


def check_leibniz(cases=200, seed=0) -> PropertyOutcome:
    rng = random.Random(seed)
    out = PropertyOutcome("leibniz", cases)
    for k in range(cases):
        a, b = random_expression(rng), random_expression(rng)
        v = rng.choice(_ATOMS[:5])
        lhs = E.diff(a * b, v)
        rhs = E.diff(a, v) * b + a * E.diff(b, v)
        if not E.equals(lhs, rhs):
            out.failures.append(k)
    return out


def check_idempotence(cases=200, seed=0) -> PropertyOutcome:
    rng = random.Random(seed)
    out = PropertyOutcome("normalize-idempotence", cases)
    for k in range(cases):
        once = E.normalize(random_expression(rng))
        if E.normalize(once) != once:
            out.failures.append(k)
    return out


def check_ring_axioms(cases=200, seed=0) -> PropertyOutcome:
    rng = random.Random(seed)
    out = PropertyOutcome("ring-axioms", cases)
    for k in range(cases):
        a, b, c = (random_expression(rng, 2) for _ in range(3))
        if E.normalize(a * (b + c) - a * b - a * c) != 0:
            out.failures.append(k)
    return out


def acceptance_suites(B, cases=200, seed=0):
    """The five suites gated by the acceptance run."""
    return [
        check_jacobi(B, cases, seed),
        check_automorphism(B, cases, seed),
        check_group_law(B, cases, seed),
        check_leibniz(cases, seed),
        check_idempotence(cases, seed),
    ]
