"""Similarity reductions to ODEs, closed-form solutions and numerical checks."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

from . import expr as E
from .errors import (
    GridError,
    IntegrationAbort,
    NoAnsatzError,
    ReductionFailure,
    SubstitutionInvalid,
)
from .jet import EquationInstance
from .lie import BASE_COORDS, VectorField

t, x, z, h, w, u = E.t, E.x, E.z, E.h, E.w, E.u


@dataclass(frozen=True)
class ReductionAnsatz:
    """u = shape(t, x, h(z)) with similarity variable z(t, x)."""

    z: sp.Expr
    shape: sp.Expr
    generator: VectorField
    domain: str = ""

    def invariance_residuals(self):
        """(X3(z), X3(u - shape) on u = shape); both vanish for a valid ansatz."""
        X = self.generator
        rz = E.normalize(X(self.z))
        dz = E.normalize(sp.diff(self.shape, h)) * E.hder(1) * rz
        ru = E.normalize(X(u - self.shape) - dz)
        return rz, E.substitute(ru, {u: self.shape})


def _library():
    a = VectorField.from_string
    return [
        (a("t*D_t + D_u"), x, sp.log(t) + h, "t > 0"),
        (a("t*D_t + u*D_u"), x, t * h, "t > 0"),
        (a("x*D_x + u*D_u"), t, x * h, "x != 0"),
        (a("t*D_x + D_u"), t, x / t + h, "t > 0"),
    ]


def _proportional(V: VectorField, W: VectorField):
    """lambda with V = lambda * W (constant, nonzero) or None."""
    ratio = None
    for s in V.as_dict().keys() | W.as_dict().keys():
        a, b = V[s], W[s]
        if b == 0:
            if a != 0:
                return None
            continue
        r = E.normalize(a / b)
        if r.free_symbols or r == 0:
            return None
        if ratio is None:
            ratio = r
        elif r != ratio:
            return None
    return ratio


def match_ansatz(X3: VectorField) -> ReductionAnsatz:
    """Similarity variable and solution shape invariant under X3."""
    if any(s not in BASE_COORDS for s in X3.as_dict()):
        raise NoAnsatzError(f"{X3} is not a point field on (t, x, u)")
    tau, xi, eta = X3[t], X3[x], X3[u]
    if eta == 0 and not (tau.free_symbols | xi.free_symbols) and (tau != 0 or xi != 0):
        if tau != 0:
            return ReductionAnsatz(E.normalize(x - xi / tau * t), h, X3, "traveling wave")
        return ReductionAnsatz(t, h, X3, "stationary in x")
    for pattern, zz, shape, domain in _library():
        if _proportional(X3, pattern) is not None:
            return ReductionAnsatz(zz, shape, X3, domain)
    raise NoAnsatzError(f"no ansatz in the library for {X3}")


@dataclass(frozen=True)
class ReducedODE:
    """lhs = 0 for the unknown (h of z, or w of h after order reduction)."""

    lhs: sp.Expr
    multiplier: sp.Expr = sp.Integer(1)
    source: object = None
    ansatz: object = None
    unknown: str = "h"
    independent: sp.Symbol = z

    @property
    def derivatives(self):
        return E.ODE_DERIVS[self.unknown]

    @property
    def order(self):
        present = [k for k, s in enumerate(self.derivatives) if self.lhs.has(s)]
        return max(present) if present else 0

    def subs(self, binding) -> "ReducedODE":
        return ReducedODE(E.substitute(self.lhs, binding), self.multiplier, self.source,
                          self.ansatz, self.unknown, self.independent)

    def __str__(self):
        return f"{E.to_string(self.lhs)} = 0"


def _shape_derivative(F, direction, zt, zx):
    """Total derivative of F(t, x, h, h', ...) with h = h(z(t, x))."""
    var, dz = (t, zt) if direction == "t" else (x, zx)
    out = sp.diff(F, var)
    hs = E.ODE_DERIVS["h"]
    for k in range(len(hs) - 1):
        if F.has(hs[k]):
            out += dz * hs[k + 1] * sp.diff(F, hs[k])
    return E.normalize(out)


def _sign_fix(lhs, derivs):
    for s in reversed(derivs):
        if lhs.has(s):
            coeff = E.normalize(sp.diff(lhs, s))
            lead = E.ordered_terms(sp.expand(coeff))[0]
            return -1 if lead.could_extract_minus_sign() else 1
    lead = E.ordered_terms(lhs)[0]
    return -1 if lead.could_extract_minus_sign() else 1


def _split_dropped(expr, dropped):
    """Factor expr = multiplier * ode with the multiplier carrying ``dropped``."""
    expr = E.normalize(expr)
    num, den = sp.fraction(sp.together(expr))
    content, factors = sp.factor_list(sp.expand(num))
    mult = content / den
    ode = sp.Integer(1)
    for fac, k in factors:
        if fac.has(dropped):
            mult *= fac ** k
        else:
            ode *= fac ** k
    ode = sp.expand(ode)
    mult = E.normalize(mult)
    if ode.has(dropped):
        raise ReductionFailure("reduced expression still depends on the dropped variable")
    return ode, mult


def substituted_lhs(eq: EquationInstance, A: ReductionAnsatz):
    """eq.lhs with u = shape in terms of (t, x, h, h', ...)."""
    zt, zx = sp.diff(A.z, t), sp.diff(A.z, x)
    binding = {u: A.shape}
    for s in eq.lhs.free_symbols:
        if s in E.JET_INDEX and s != u:
            nt, nx = E.JET_INDEX[s]
            v = A.shape
            for _ in range(nx):
                v = _shape_derivative(v, "x", zt, zx)
            for _ in range(nt):
                v = _shape_derivative(v, "t", zt, zx)
            binding[s] = v
    return E.substitute(eq.lhs, binding)


def _to_similarity_variables(e, A: ReductionAnsatz):
    if A.z.has(x):
        xs = sp.solve(sp.Eq(A.z, z), x)
        return E.substitute(e, {x: xs[0]}), t
    ts = sp.solve(sp.Eq(A.z, z), t)
    return E.substitute(e, {t: ts[0]}), x


def reduce(eq: EquationInstance, A: ReductionAnsatz) -> ReducedODE:
    """Substitute the ansatz and factor out the multiplier carrying the dropped variable."""
    rz, ru = A.invariance_residuals()
    if rz != 0 or ru != 0:
        raise ReductionFailure("ansatz is not invariant under its generator")
    expr = substituted_lhs(eq, A)
    expr, dropped = _to_similarity_variables(expr, A)
    ode, mult = _split_dropped(expr, dropped)
    if ode.free_symbols & {t, x} - {z}:
        raise ReductionFailure("reduced equation depends on t or x")
    sgn = _sign_fix(ode, E.ODE_DERIVS["h"])
    return ReducedODE(E.normalize(sgn * ode), E.normalize(sgn * mult), eq, A)


def _w_rules():
    s = sigma_sqrt = E.sigma * sp.sqrt(w)
    w1, w2, w3 = E.wder(1), E.wder(2), E.wder(3)
    return {
        E.hder(1): sigma_sqrt,
        E.hder(2): w1 / 2,
        E.hder(3): s * w2 / 2,
        E.hder(4): w * w3 / 2 + w1 * w2 / 4,
    }


def substitute_w(R: ReducedODE) -> ReducedODE:
    """Order reduction w(h) = (h')^2 of an autonomous ODE of order <= 4.

    sigma = +-1 is the sign of h'; sqrt(w) stays atomic.
    """
    if R.lhs.has(z) or R.unknown != "h":
        raise SubstitutionInvalid("ODE depends explicitly on z")
    if R.order > 4:
        raise SubstitutionInvalid("order above 4")
    e = E.substitute(R.lhs, _w_rules())
    num, den = sp.fraction(sp.together(e))
    num = E.normalize(num)
    content, prim = sp.primitive(num)
    prim = E.normalize(prim)
    sgn = _sign_fix(prim, E.ODE_DERIVS["w"])
    return ReducedODE(E.normalize(sgn * prim), E.normalize(sgn * den / content), R, "w(h) = (h')^2", "w", h)


def back_substitute_w(e) -> sp.Expr:
    """Undo w = (h')^2 using sigma*sqrt(w) = h'."""
    hp = [E.hder(k) for k in range(5)]
    s = sp.Dummy("s")
    e = sp.sympify(e).xreplace({sp.sqrt(w): s})
    rules = {
        s: E.sigma * hp[1],
        w: hp[1] ** 2,
        E.wder(1): 2 * hp[2],
        E.wder(2): 2 * hp[3] / hp[1],
        E.wder(3): (2 * hp[4] / hp[1] - 2 * hp[3] * hp[2] / hp[1] ** 2) / hp[1],
    }
    return E.substitute(e, rules)


# --- closed forms -----------------------------------------------------------


@dataclass(frozen=True)
class ClosedFormSolution:
    tag: str
    explicit: sp.Expr | None = None
    implicit: sp.Expr | None = None
    constants: tuple = ()
    reason: str = ""

    @property
    def solved(self):
        return self.tag != "unsolved"


def _integrate_terms(e, var):
    """Antiderivative of sums of c*var^k and c*exp(a*var); None otherwise."""
    out = sp.Integer(0)
    for term in sp.Add.make_args(sp.expand(e)):
        coeff, k = term.as_coeff_exponent(var)
        if not coeff.has(var):
            out += coeff * sp.log(var) if k == -1 else coeff * var ** (k + 1) / (k + 1)
            continue
        rest = [f for f in sp.Mul.make_args(term) if f.has(var)]
        if len(rest) == 1 and isinstance(rest[0], sp.exp):
            a = sp.diff(rest[0].args[0], var)
            if a != 0 and not a.has(var) and E.normalize(rest[0].args[0] - a * var).has(var) is False:
                out += term / a
                continue
        return None
    return out


def solve_closed_form(R: ReducedODE) -> ClosedFormSolution:
    """Closed forms for first-order linear, Bernoulli and separable cubic ODEs."""
    c0 = E.c[0]
    if R.unknown != "h" or R.order != 1:
        return ClosedFormSolution("unsolved", reason=f"order {R.order} equation")
    hp = E.hder(1)
    try:
        P = E.solve_for(R.lhs, hp)
    except Exception as err:  # noqa: BLE001 - not affine means outside our classes
        return ClosedFormSolution("unsolved", reason=str(err))
    num, den = sp.fraction(sp.together(P))
    if den.has(h) or not num.is_polynomial(h):
        return ClosedFormSolution("unsolved", reason="right-hand side not polynomial in h")
    poly = sp.Poly(sp.expand(num), h)
    coeffs = {m[0]: E.normalize(cf / den) for m, cf in poly.terms()}
    deg = poly.degree()
    autonomous = not any(cf.has(z) for cf in coeffs.values())
    if deg <= 1:
        p = coeffs.get(1, sp.Integer(0))
        q = coeffs.get(0, sp.Integer(0))
        Ip = _integrate_terms(p, z)
        if Ip is None:
            return ClosedFormSolution("unsolved", reason="coefficient not integrable termwise")
        mu = E.normalize(sp.exp(-Ip))
        Iq = _integrate_terms(E.normalize(mu * q), z)
        if Iq is None:
            return ClosedFormSolution("unsolved", reason="inhomogeneity not integrable termwise")
        sol = E.normalize((Iq + c0) / mu)
        return ClosedFormSolution("linear-first-order", explicit=sol, constants=(c0,))
    if autonomous and set(coeffs) == {1, deg} and deg >= 2:
        p, q = coeffs[1], coeffs[deg]
        if deg == 2:
            sol = p * sp.exp(p * z) / (-q * sp.exp(p * z) - sp.exp(c0 * p))
        else:
            n = deg
            sol = (-q / p - sp.exp(c0 * p) * sp.exp((1 - n) * p * z)) ** sp.Rational(1, 1 - n)
        return ClosedFormSolution("bernoulli", explicit=E.normalize(sol), constants=(c0,))
    if autonomous and deg == 3 and 0 not in coeffs:
        a1, a2, a3 = (coeffs.get(k, sp.Integer(0)) for k in (1, 2, 3))
        # h' = -6 k6 h^3 - 2 k1 h^2 + k2 h
        k6, k1, k2 = -a3 / 6, -a2 / 2, a1
        s = sp.sqrt(-k1 ** 2 - 6 * k2 * k6)
        rel = (
            sp.log(2 * h * (3 * k6 * h + k1) - k2)
            - 2 * sp.log(h)
            + 2 * k1 * sp.atan((6 * k6 * h + k1) / s) / s
            + 2 * k2 * z
            - c0
        )
        return ClosedFormSolution("abel-implicit", implicit=rel, constants=(c0,))
    return ClosedFormSolution("unsolved", reason="no supported class matches")


def verify_solution(S: ClosedFormSolution, target) -> sp.Expr:
    """Residual of the solution in an ODE or PDE; zero for a true solution."""
    if isinstance(target, EquationInstance):
        U = S.explicit
        binding = {u: U}
        for s in target.lhs.free_symbols:
            if s in E.JET_INDEX and s != u:
                nt, nx = E.JET_INDEX[s]
                binding[s] = sp.diff(U, t, nt, x, nx) if nt and nx else (
                    sp.diff(U, t, nt) if nt else sp.diff(U, x, nx))
        return E.substitute(target.lhs, binding)
    derivs = target.derivatives
    if S.explicit is not None:
        binding = {}
        v = S.explicit
        for k, s in enumerate(derivs):
            binding[s] = v
            v = sp.diff(v, target.independent)
        return E.substitute(target.lhs, binding)
    if S.implicit is not None:
        rel = S.implicit
        hprime = -sp.diff(rel, target.independent) / sp.diff(rel, h)
        if target.order != 1:
            raise ValueError("implicit relations are checked against first-order ODEs only")
        return E.substitute(target.lhs, {E.hder(1): hprime})
    raise ValueError("solution has neither explicit nor implicit form")


# --- numerics -----------------------------------------------------------------


@dataclass
class Trajectory:
    z: np.ndarray
    states: np.ndarray
    names: tuple

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(("z",) + self.names)
        for k, zz in enumerate(self.z):
            writer.writerow([repr(float(zz))] + [repr(float(v)) for v in self.states[:, k]])
        return buf.getvalue()


def _numeric_params(expr, params):
    binding = {E.symbol(k) if isinstance(k, str) else k: sp.nsimplify(v) if isinstance(v, int) else v
               for k, v in (params or {}).items()}
    return sp.sympify(expr).xreplace(binding)


def integrate_numeric(R: ReducedODE, initial, span, tol: float = 1e-10, params=None, t_eval=None):
    """Adaptive RK45 trajectory of the ODE solved for its highest derivative.

    ``initial`` maps derivative symbols (or names like "h'") to values.
    Aborts when the coefficient of the highest derivative vanishes.
    """
    n = R.order
    derivs = R.derivatives[: n + 1]
    lhs = _numeric_params(R.lhs, params)
    lead = sp.diff(lhs, derivs[n])
    rhs = E.solve_for(lhs, derivs[n]) if n > 0 else None
    if n == 0:
        raise ValueError("algebraic equation, nothing to integrate")
    leftover = (rhs.free_symbols | lead.free_symbols) - set(derivs[:n]) - {R.independent}
    if leftover:
        raise ValueError(f"unassigned parameters: {sorted(map(str, leftover))}")
    state_syms = list(derivs[:n])
    f_rhs = sp.lambdify([R.independent] + state_syms, rhs, "numpy")
    f_lead = sp.lambdify([R.independent] + state_syms, lead, "numpy")
    init = {}
    for k, v in initial.items():
        init[E.symbol(k) if isinstance(k, str) else k] = float(v)
    y0 = [init[s] for s in state_syms]

    def fun(zz, y):
        return list(y[1:]) + [float(f_rhs(zz, *y))]

    def singular(zz, y):
        return float(f_lead(zz, *y))

    singular.terminal = True
    sol = solve_ivp(fun, span, y0, method="RK45", rtol=tol, atol=tol, t_eval=t_eval,
                    events=singular, dense_output=True)
    if sol.status == 1 or (sol.t_events and len(sol.t_events[0])):
        raise IntegrationAbort("leading coefficient vanished", float(sol.t_events[0][0]))
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        raise IntegrationAbort(sol.message, float(sol.t[-1]))
    traj = Trajectory(sol.t, sol.y, tuple(s.name for s in state_syms))
    traj.dense = sol.sol
    return traj


@dataclass
class ResidualReport:
    case: str
    grid: dict
    max_residual: float
    rate: float | None = None

    def to_json(self):
        return json.dumps({"case": self.case, "grid": self.grid,
                           "max_residual": self.max_residual, "rate": self.rate}, sort_keys=True)


def _stencils(U, ht, hx):
    """Central differences on interior points (1 in t, 2 in x of margin)."""
    c = U[1:-1, 2:-2]
    ut = (U[2:, 2:-2] - U[:-2, 2:-2]) / (2 * ht)
    um2, um1, up1, up2 = U[1:-1, :-4], U[1:-1, 1:-3], U[1:-1, 3:-1], U[1:-1, 4:]
    ux = (up1 - um1) / (2 * hx)
    uxx = (up1 - 2 * c + um1) / hx ** 2
    uxxx = (up2 - 2 * up1 + 2 * um1 - um2) / (2 * hx ** 3)
    uxxxx = (up2 - 4 * up1 + 6 * c - 4 * um1 + um2) / hx ** 4
    return c, ut, ux, uxx, uxxx, uxxxx


def pde_residual_numeric(eq: EquationInstance, u_func, t_range, x_range, ht, hx=None, params=None,
                         case="") -> ResidualReport:
    """Max interior residual of eq.lhs for u evaluated on a uniform grid."""
    hx = ht if hx is None else hx
    nt = int(round((t_range[1] - t_range[0]) / ht)) + 1
    nx = int(round((x_range[1] - x_range[0]) / hx)) + 1
    if nt < 3 or nx < 5:
        raise GridError(f"grid {nt}x{nx} too coarse for the stencils (need 3x5)")
    T = t_range[0] + ht * np.arange(nt)
    X = x_range[0] + hx * np.arange(nx)
    TT, XX = np.meshgrid(T, X, indexing="ij")
    U = np.asarray(u_func(TT, XX), dtype=float) * np.ones_like(TT)
    jets = _stencils(U, ht, hx)
    lhs = _numeric_params(eq.lhs, params)
    syms = [t, x, u, E.u_t, E.u_x, E.u_xx, E.u_xxx, E.u_xxxx]
    leftover = lhs.free_symbols - set(syms)
    if leftover:
        raise ValueError(f"unassigned parameters: {sorted(map(str, leftover))}")
    f = sp.lambdify(syms, lhs, "numpy")
    R = np.asarray(f(TT[1:-1, 2:-2], XX[1:-1, 2:-2], *jets), dtype=float) * np.ones_like(jets[0])
    grid = {"t": list(t_range), "x": list(x_range), "ht": ht, "hx": hx}
    return ResidualReport(case, grid, float(np.max(np.abs(R))))


def convergence_order(eq, u_func, t_range, x_range, hs, params=None):
    """Residuals for each spacing and observed orders log2(r_k / r_{k+1})."""
    res = [pde_residual_numeric(eq, u_func, t_range, x_range, hh, params=params).max_residual for hh in hs]
    orders = [math.log(res[k] / res[k + 1]) / math.log(hs[k] / hs[k + 1]) for k in range(len(hs) - 1)]
    return res, orders
