"""Equivalence algebra and group of the generalized Kuramoto-Sivashinsky class

    u_t + (f(u))_x + alpha(u) u_xx + (phi(u))_xx + beta(u) u_xxx + gamma(u) u_xxxx = g(u),

projections onto (t, x, u) and (u, f, ..., phi), the principal algebra and
preliminary classification of arbitrary elements.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp

from . import expr as E
from .errors import ClassificationUnsupported, DegenerateClassError
from .jet import EquationInstance
from .lie import (
    BASE_COORDS,
    COORDS,
    FIBER_COORDS,
    AlgebraBasis,
    VectorField,
    matrix_exponential,
)

F, G, ALPHA, BETA, GAMMA, PHI = (E.FIBER[n] for n in E.ELEMENT_NAMES)

EQUIVALENCE_GENERATORS = {
    "Y1": "D_t",
    "Y2": "D_x",
    "Y3": "D_u",
    "Y4": "t*D_t - f*D_f - g*D_g - alpha*D_alpha - beta*D_beta - gamma*D_gamma - phi*D_phi",
    "Y5": "x*D_x + f*D_f + 2*alpha*D_alpha + 3*beta*D_beta + 4*gamma*D_gamma + 2*phi*D_phi",
    "Y6": "u*D_u + f*D_f + g*D_g + phi*D_phi",
    "Y7": "t*D_x + u*D_f",
    "Y8": "D_alpha - u*D_phi",
    "Y9": "D_f",
    "Y10": "D_phi",
}

# order in which one-parameter flows compose into the closed-form group element
FLOW_ORDER = (7, 8, 1, 2, 3, 9, 10, 4, 5, 6)

_BASIS = None
_PROJECTED = None


def equivalence_basis() -> AlgebraBasis:
    """Y1..Y10, closure-checked."""
    global _BASIS
    if _BASIS is None:
        fields = [VectorField.from_string(s) for s in EQUIVALENCE_GENERATORS.values()]
        _BASIS = AlgebraBasis(fields, list(EQUIVALENCE_GENERATORS))
    return _BASIS


def project_xu(Y: VectorField) -> VectorField:
    return Y.restrict(BASE_COORDS)


def project_upsi(Y: VectorField) -> VectorField:
    return Y.restrict((E.u,) + FIBER_COORDS)


def projected_basis() -> AlgebraBasis:
    """Nonzero projections Z1..Z8 of Y3..Y10 on the (u, f, ..., phi) space."""
    global _PROJECTED
    if _PROJECTED is None:
        fields = [project_upsi(Y) for Y in equivalence_basis()]
        nonzero = [(i, f) for i, f in enumerate(fields) if not f.is_zero()]
        _PROJECTED = AlgebraBasis([f for _, f in nonzero], [f"Z{k + 1}" for k in range(len(nonzero))])
        _PROJECTED.lift_indices = tuple(i for i, _ in nonzero)
    return _PROJECTED


def lift(Z: VectorField) -> VectorField:
    """Equivalence generator projecting onto Z (unique modulo Y1, Y2)."""
    PB = projected_basis()
    coeffs = PB.coordinates(Z)
    YB = equivalence_basis()
    full = [0] * len(YB)
    for k, idx in zip(coeffs, PB.lift_indices):
        full[idx] = k
    return YB.combine(full)


# --- finite transformations -------------------------------------------------


@dataclass(frozen=True)
class FiniteTransformation:
    """Point transformation of the augmented space given by its forward maps."""

    maps: tuple
    eps: tuple = ()

    @classmethod
    def from_dict(cls, maps, eps=()):
        return cls(tuple(E.normalize(maps.get(s, s)) for s in COORDS), tuple(eps))

    @classmethod
    def identity(cls):
        return cls.from_dict({})

    def __getitem__(self, coord):
        return self.maps[COORDS.index(coord)]

    def as_dict(self):
        return dict(zip(COORDS, self.maps))

    def apply(self, e):
        return E.substitute(e, self.as_dict())

    def then(self, other: "FiniteTransformation") -> "FiniteTransformation":
        """Apply ``self`` first, then ``other``."""
        binding = self.as_dict()
        return FiniteTransformation(
            tuple(E.substitute(m, binding) for m in other.maps), self.eps or other.eps
        )

    def __eq__(self, other):
        if not isinstance(other, FiniteTransformation):
            return NotImplemented
        return all(E.equals(a, b) for a, b in zip(self.maps, other.maps))

    def __hash__(self):
        return hash(self.maps)

    def to_json(self):
        return json.dumps({"eps": [E.to_string(e) for e in self.eps]})


def _affine_matrix(Y: VectorField):
    n = len(COORDS)
    M = sp.zeros(n + 1, n + 1)
    for i, s in enumerate(COORDS):
        cf = sp.expand(Y[s])
        poly = sp.Poly(cf, *COORDS)
        if poly.total_degree() > 1:
            raise ClassificationUnsupported(f"flow of {Y} is not affine")
        for j, r in enumerate(COORDS):
            M[i, j] = poly.coeff_monomial(r)
        M[i, n] = poly.coeff_monomial(1)
    if M.free_symbols:
        raise ClassificationUnsupported("flow coefficients must be rational numbers")
    return M


def exponentiate(Y: VectorField, eps=E.eps) -> FiniteTransformation:
    """Solve the flow equations d(coord)/d(eps) = Y(coord) in closed form."""
    M = _affine_matrix(Y)
    expM, exact = matrix_exponential(M, eps)
    if not exact:
        from .errors import UnsupportedFormError

        raise UnsupportedFormError("flow matrix has irrational spectrum")
    n = len(COORDS)
    vec = sp.Matrix(list(COORDS) + [1])
    image = expM * vec
    return FiniteTransformation(tuple(E.normalize(image[i]) for i in range(n)), (eps,))


def equivalence_transformation(eps: Sequence) -> FiniteTransformation:
    """The ten-parameter group element in closed form (eps[0] is eps_1)."""
    e1, e2, e3, e4, e5, e6, e7, e8, e9, e10 = (sp.sympify(v) for v in eps)
    ex = sp.exp
    t, x, u = E.t, E.x, E.u
    maps = {
        t: (t + e1) * ex(e4),
        x: (x + e7 * t + e2) * ex(e5),
        u: (u + e3) * ex(e6),
        F: (F + e7 * u + e9) * ex(-e4 + e5 + e6),
        G: G * ex(-e4 + e6),
        ALPHA: (ALPHA + e8) * ex(-e4 + 2 * e5),
        BETA: BETA * ex(-e4 + 3 * e5),
        GAMMA: GAMMA * ex(-e4 + 4 * e5),
        PHI: (PHI - e8 * u + e10) * ex(-e4 + 2 * e5 + e6),
    }
    return FiniteTransformation.from_dict(maps, tuple(sp.sympify(v) for v in eps))


def compose_flows(eps: Sequence) -> FiniteTransformation:
    """Compose exp(eps_i Y_i) in FLOW_ORDER; reproduces equivalence_transformation."""
    B = equivalence_basis()
    T = FiniteTransformation.identity()
    for i in FLOW_ORDER:
        T = T.then(exponentiate(B[i - 1], sp.sympify(eps[i - 1])))
    return FiniteTransformation(T.maps, tuple(sp.sympify(v) for v in eps))


# --- class members ------------------------------------------------------------


@dataclass(frozen=True)
class ClassMember:
    """Concrete arbitrary elements (f, g, alpha, beta, gamma, phi) as functions of u."""

    f: sp.Expr
    g: sp.Expr
    alpha: sp.Expr
    beta: sp.Expr
    gamma: sp.Expr
    phi: sp.Expr

    def __post_init__(self):
        for name in E.ELEMENT_NAMES:
            object.__setattr__(self, name, E.normalize(getattr(self, name)))
        if self.gamma == 0:
            raise DegenerateClassError("gamma must not vanish identically")
        bad = {s for n in E.ELEMENT_NAMES for s in getattr(self, n).free_symbols}
        bad -= {E.u} | set(E.PARAMETERS.values())
        if bad:
            raise ValueError(f"arbitrary elements may depend on u and parameters only, got {bad}")

    @classmethod
    def opaque(cls):
        """Member with unspecified arbitrary elements f(u), ..., phi(u)."""
        return cls(**{n: E.FUNCTIONS[n](E.u) for n in E.ELEMENT_NAMES})

    @classmethod
    def from_dict(cls, data):
        return cls(**{n: E.parse(data[n]) if isinstance(data[n], str) else data[n] for n in E.ELEMENT_NAMES})

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def as_dict(self):
        return {n: getattr(self, n) for n in E.ELEMENT_NAMES}

    def to_json(self):
        return json.dumps({n: E.to_string(getattr(self, n)) for n in E.ELEMENT_NAMES})

    def subs(self, binding):
        return ClassMember(**{n: E.substitute(getattr(self, n), binding) for n in E.ELEMENT_NAMES})

    def equation(self, multiplier=1) -> EquationInstance:
        return EquationInstance(E.normalize(multiplier * class_lhs(self)), self)


def class_lhs(C: ClassMember, jets=None) -> sp.Expr:
    """Left-hand side of the class equation for member C.

    ``jets`` optionally supplies (u_t, u_x, u_xx, u_xxx, u_xxxx) and a
    derivative operator for the elements; defaults to the jet symbols.
    """
    u = E.u
    ut, ux, uxx, uxxx, uxxxx = jets or (E.u_t, E.u_x, E.u_xx, E.u_xxx, E.u_xxxx)
    fu = sp.diff(C.f, u)
    phu = sp.diff(C.phi, u)
    phuu = sp.diff(C.phi, u, 2)
    return ut + fu * ux + C.alpha * uxx + phuu * ux ** 2 + phu * uxx + C.beta * uxxx + C.gamma * uxxxx - C.g


def verify_class_preservation(T: FiniteTransformation, C: ClassMember) -> sp.Expr:
    """Residual of mapping the member's equation through T.

    The transformed equation (elements read off T's fiber maps, new jet
    coordinates expressed through old ones by the chain rule) must equal
    a nonzero multiple of the original; returns new - lambda * old.
    """
    from .jet import total_derivative

    t_new, x_new, u_new = T[E.t], T[E.x], T[E.u]
    if (t_new.free_symbols | x_new.free_symbols) & ({E.u} | set(FIBER_COORDS)):
        raise ClassificationUnsupported("independent variables must transform among themselves")
    if u_new.free_symbols & set(FIBER_COORDS):
        raise ClassificationUnsupported("u must not depend on the arbitrary elements")

    Dt = lambda e: total_derivative(e, "t")  # noqa: E731
    Dx = lambda e: total_derivative(e, "x")  # noqa: E731
    a, b = Dt(t_new), Dt(x_new)
    c_, d = Dx(t_new), Dx(x_new)
    det = E.normalize(a * d - b * c_)
    if det == 0:
        raise ValueError("degenerate change of independent variables")

    def D_tnew(e):
        return E.normalize((d * Dt(e) - b * Dx(e)) / det)

    def D_xnew(e):
        return E.normalize((-c_ * Dt(e) + a * Dx(e)) / det)

    un_t = D_tnew(u_new)
    un_x = D_xnew(u_new)
    un_xx = D_xnew(un_x)
    un_xxx = D_xnew(un_xx)
    un_xxxx = D_xnew(un_xxx)

    fiber_binding = {E.FIBER[n]: getattr(C, n) for n in E.ELEMENT_NAMES}
    new_elems = {n: E.substitute(T[E.FIBER[n]], fiber_binding) for n in E.ELEMENT_NAMES}
    for n, val in new_elems.items():
        if val.free_symbols & {E.t, E.x}:
            raise ClassificationUnsupported(f"transformed {n} depends on t or x")
    du = E.normalize(sp.diff(u_new, E.u))
    if u_new.free_symbols & {E.t, E.x} or du == 0:
        raise ClassificationUnsupported("u must map to a function of u alone with nonzero derivative")

    def d_dunew(e):
        return E.normalize(sp.diff(e, E.u) / du)

    f_u = d_dunew(new_elems["f"])
    ph_u = d_dunew(new_elems["phi"])
    ph_uu = d_dunew(ph_u)
    new_lhs = (
        un_t + f_u * un_x + new_elems["alpha"] * un_xx + ph_uu * un_x ** 2 + ph_u * un_xx
        + new_elems["beta"] * un_xxx + new_elems["gamma"] * un_xxxx - new_elems["g"]
    )
    new_lhs = E.normalize(new_lhs)
    old_lhs = E.normalize(class_lhs(C))
    lam = E.normalize(sp.diff(new_lhs, E.u_t) / sp.diff(old_lhs, E.u_t))
    return E.normalize(new_lhs - lam * old_lhs)


def transformation_multiplier(T: FiniteTransformation, C: ClassMember) -> sp.Expr:
    """Factor relating transformed and original equations (coefficient of u_t)."""
    from .jet import total_derivative

    t_new, x_new, u_new = T[E.t], T[E.x], T[E.u]
    a = total_derivative(t_new, "t")
    d = total_derivative(x_new, "x")
    b = total_derivative(x_new, "t")
    det = E.normalize(a * d)
    un_t = E.normalize((d * total_derivative(u_new, "t") - b * total_derivative(u_new, "x")) / det)
    return E.normalize(sp.diff(un_t, E.u_t))


# --- principal algebra and classification ------------------------------------


@dataclass(frozen=True)
class PrincipalAlgebra:
    basis: AlgebraBasis
    constraints: dict = field(default_factory=dict)


def principal_algebra() -> PrincipalAlgebra:
    """Generators whose (u, Psi)-projection vanishes identically."""
    YB = equivalence_basis()
    ks = E.c[1:11]
    Y = YB.combine(ks)
    Z = project_upsi(Y)
    equations = []
    for s, cf in Z.items():
        poly = sp.Poly(cf, *COORDS)
        equations += list(poly.coeffs())
    sol = sp.solve(equations, ks, dict=True)
    if len(sol) != 1:
        raise RuntimeError("unexpected solution set for the principal algebra")
    constraints = {k: v for k, v in sol[0].items()}
    free = [k for k in ks if k not in constraints]
    fields = []
    for k in free:
        values = {kk: (1 if kk == k else 0) for kk in free}
        coeffs = [E.normalize(sp.sympify(constraints.get(kk, kk)).subs(values)) for kk in ks]
        fields.append(project_xu(YB.combine(coeffs)))
    basis = AlgebraBasis(fields, [f"X{i + 1}" for i in range(len(fields))])
    return PrincipalAlgebra(basis, constraints)


def _integration_constants():
    return dict(zip(E.ELEMENT_NAMES, E.c[1:7]))


def _solve_invariance(eta, p, q, const):
    """Solve eta(u) psi'(u) = p psi + q(u) for eta in {0, k, k u} and q affine."""
    u = E.u
    q = E.normalize(q)
    qpoly = sp.Poly(q, u)
    if qpoly.degree() > 1:
        raise ClassificationUnsupported(f"inhomogeneous term {q} is not affine in u")
    q1 = qpoly.coeff_monomial(u)
    q0 = qpoly.coeff_monomial(1)
    if eta == 0:
        if p == 0:
            if q == 0:
                raise ClassificationUnsupported("element left arbitrary by the projection")
            raise DegenerateClassError("no member is invariant: p = 0 with q != 0")
        return E.normalize(-q / p)
    eta_poly = sp.Poly(eta, u)
    if eta_poly.degree() == 0:
        k = eta_poly.coeff_monomial(1)
        if p != 0:
            B = -q1 / p
            A = (k * B - q0) / p
            return E.normalize(const * sp.exp(p / k * u) + A + B * u)
        return E.normalize(const + (q0 * u + q1 * u ** 2 / 2) / k)
    if eta_poly.degree() == 1 and eta_poly.coeff_monomial(1) == 0:
        k = eta_poly.coeff_monomial(u)
        r = p / k
        out = const * u ** r
        out += q1 / k * u * sp.log(u) if r == 1 else q1 / (k * (1 - r)) * u
        out += q0 / k * sp.log(u) if r == 0 else -q0 / p
        return E.normalize(out)
    raise ClassificationUnsupported(f"u-component {eta} is not of the form 0, k or k*u")


def invariance_data(Z: VectorField):
    """(eta, {name: (p, q)}) with Z(psi - Psi(u)) = omega = p psi + q(u)."""
    eta = Z[E.u]
    if eta.free_symbols - {E.u}:
        raise ClassificationUnsupported("u-component must be numeric in u")
    data = {}
    for n in E.ELEMENT_NAMES:
        s = E.FIBER[n]
        omega = Z[s]
        others = omega.free_symbols - {E.u, s}
        if others:
            raise ClassificationUnsupported(f"component along {n} depends on {others}")
        p = E.normalize(sp.diff(omega, s))
        if p.free_symbols:
            raise ClassificationUnsupported(f"component along {n} is not linear in {n}")
        data[n] = (p, E.normalize(omega - p * s))
    return eta, data


def classify(Z: VectorField) -> tuple[ClassMember, VectorField]:
    """Arbitrary elements invariant under Z and the extra point symmetry X3."""
    eta, data = invariance_data(Z)
    consts = _integration_constants()
    elems = {n: _solve_invariance(eta, p, q, consts[n]) for n, (p, q) in data.items()}
    if elems["gamma"] == 0:
        raise DegenerateClassError("invariance forces gamma = 0")
    X3 = project_xu(lift(Z))
    return ClassMember(**elems), X3


def invariance_residuals(Z: VectorField, C: ClassMember) -> dict:
    """Z(psi - Psi(u)) restricted to psi = Psi(u), for each element."""
    eta, data = invariance_data(Z)
    out = {}
    for n, (p, q) in data.items():
        val = getattr(C, n)
        out[n] = E.normalize(eta * sp.diff(val, E.u) - p * val - q)
    return out
