"""Total derivatives, prolongation of point fields and symmetry checks.

The jet is truncated at total order 6: an order-4 equation plus the two
extra derivatives needed when eliminating u_t and its x-derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from . import expr as E
from .errors import NotAffineError, TruncationError
from .lie import BASE_COORDS, VectorField

_STEP = {"t": (1, 0), "x": (0, 1)}
_INDEPENDENT = {"t": E.t, "x": E.x}

# multi-indices J of the order-4 prolongation, as (n_t, n_x)
PROLONGATION_INDICES = ((1, 0), (0, 1), (0, 2), (0, 3), (0, 4))


def _jet_symbols(e):
    return [s for s in e.free_symbols if s in E.JET_INDEX]


def total_derivative(e, direction: str) -> sp.Expr:
    """D_t or D_x of a jet-space expression.

    Arbitrary elements f(u), f_u(u), ... chain through u by ordinary
    differentiation with respect to the symbol u.
    """
    e = sp.sympify(e)
    dt, dx = _STEP[direction]
    out = sp.diff(e, _INDEPENDENT[direction])
    for s in _jet_symbols(e):
        nt, nx = E.JET_INDEX[s]
        if nt + nx + 1 > E.JET_ORDER:
            raise TruncationError(f"D_{direction}({s}) leaves the order-{E.JET_ORDER} jet")
        out += E.jet(nt + dt, nx + dx) * sp.diff(e, s)
    return E.normalize(out)


def total_derivative_multi(e, nt: int, nx: int) -> sp.Expr:
    for _ in range(nx):
        e = total_derivative(e, "x")
    for _ in range(nt):
        e = total_derivative(e, "t")
    return e


@dataclass(frozen=True)
class ProlongedField:
    """Point field (tau, xi, eta) with its prolongation coefficients zeta[J]."""

    base: VectorField
    zeta: dict = field(default_factory=dict)

    @property
    def tau(self):
        return self.base[E.t]

    @property
    def xi(self):
        return self.base[E.x]

    @property
    def eta(self):
        return self.base[E.u]

    def coefficient(self, coord):
        if coord in (E.t, E.x, E.u):
            return self.base[coord]
        return self.zeta.get(E.JET_INDEX[coord], sp.Integer(0))


def characteristic(V: VectorField) -> sp.Expr:
    return E.normalize(V[E.u] - V[E.t] * E.u_t - V[E.x] * E.u_x)


def prolong(V: VectorField, order: int = 4) -> ProlongedField:
    """zeta^J = D_J(eta - tau u_t - xi u_x) + tau u_{Jt} + xi u_{Jx}."""
    if order > 4:
        raise ValueError("prolongation beyond order 4 is not supported")
    if any(V[s] != 0 for s in V.as_dict() if s not in BASE_COORDS):
        raise ValueError("prolong expects a field on (t, x, u) only")
    Q = characteristic(V)
    zeta = {}
    for J in PROLONGATION_INDICES:
        nt, nx = J
        if nt + nx > order:
            continue
        z = total_derivative_multi(Q, nt, nx) + V[E.t] * E.jet(nt + 1, nx) + V[E.x] * E.jet(nt, nx + 1)
        zeta[J] = E.normalize(z)
    # u_tt enters zeta^t only through tau*u_tt - D_t(tau u_t); it must cancel
    for J, z in zeta.items():
        assert not z.has(E.jet(2, 0)), f"u_tt survived in zeta^{J}"
    return ProlongedField(V, zeta)


def lie_derivative(P: ProlongedField, e) -> sp.Expr:
    """Apply the prolonged operator to a jet-space expression."""
    e = sp.sympify(e)
    acc = P.tau * sp.diff(e, E.t) + P.xi * sp.diff(e, E.x) + P.eta * sp.diff(e, E.u)
    for s in _jet_symbols(e):
        if s == E.u:
            continue
        J = E.JET_INDEX[s]
        if J not in P.zeta:
            if sp.diff(e, s) != 0:
                raise TruncationError(f"{s} is outside the order-4 prolongation")
            continue
        acc += P.zeta[J] * sp.diff(e, s)
    return E.normalize(acc)


@dataclass(frozen=True)
class EquationInstance:
    """An equation lhs = 0, affine in u_t with nonzero coefficient."""

    lhs: sp.Expr
    source: object = None

    def __post_init__(self):
        lhs = E.normalize(self.lhs)
        object.__setattr__(self, "lhs", lhs)
        coeff = E.normalize(sp.diff(lhs, E.u_t))
        if coeff == 0 or E.normalize(sp.diff(coeff, E.u_t)) != 0:
            raise NotAffineError("equation must be affine in u_t with nonzero coefficient")

    def solved_u_t(self):
        return E.solve_for(self.lhs, E.u_t)


def _eliminate_time_derivatives(e, rhs):
    """Replace u_{t^a x^b} (a >= 1) using u_t = rhs and its total derivatives."""
    cache = {}

    def value(nt, nx):
        if (nt, nx) not in cache:
            v = rhs
            for _ in range(nt - 1):
                v = total_derivative(v, "t")
                v = _eliminate_time_derivatives(v, rhs)
            v = total_derivative_multi(v, 0, nx)
            cache[(nt, nx)] = v
        return cache[(nt, nx)]

    for _ in range(E.JET_ORDER):
        targets = [s for s in _jet_symbols(e) if E.JET_INDEX[s][0] >= 1]
        if not targets:
            return E.normalize(e)
        e = e.xreplace({s: value(*E.JET_INDEX[s]) for s in targets})
    raise TruncationError("elimination of t-derivatives did not terminate")


def check_symmetry(V: VectorField, eq: EquationInstance) -> sp.Expr:
    """On-manifold residual of pr V (lhs); zero iff V is a point symmetry."""
    P = prolong(V.restrict(BASE_COORDS))
    res = lie_derivative(P, eq.lhs)
    return _eliminate_time_derivatives(res, eq.solved_u_t())
