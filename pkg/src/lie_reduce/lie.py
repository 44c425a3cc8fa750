"""Vector fields on the augmented space and finite-dimensional Lie algebra tools.

The augmented space has coordinates (t, x, u, f, g, alpha, beta, gamma, phi);
the last six are fiber coordinates standing for the values of the arbitrary
elements.  Brackets, structure constants and ad-matrices are computed exactly.
The adjoint action uses the convention

    Ad(exp(eps V)) W = W - eps [V, W] + eps^2/2 [V, [V, W]] - ...

i.e. ``exp(-eps * ad V)`` applied to W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp

from . import expr as E
from .errors import ClosureError, SeriesClosureError, SpanError

COORDS = (E.t, E.x, E.u) + tuple(E.FIBER[n] for n in E.ELEMENT_NAMES)
BASE_COORDS = COORDS[:3]
FIBER_COORDS = COORDS[3:]
_COORD_NAMES = {s: s.name for s in COORDS}
TRUNCATION_ORDER = 8


class VectorField:
    """First-order operator  sum_k coeff_k * d/d(coord_k)  on the augmented space.

    Immutable; coefficients are stored normalized.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs=None):
        coeffs = dict(coeffs or {})
        unknown = set(coeffs) - set(COORDS)
        if unknown:
            raise ValueError(f"not an augmented coordinate: {sorted(map(str, unknown))}")
        data = []
        for s in COORDS:
            cf = E.normalize(coeffs.get(s, 0))
            jets = cf.free_symbols & (set(E.JET_INDEX) - {E.u})
            if jets:
                raise ValueError(f"coefficient of d/d{s} depends on jet variables {jets}")
            data.append(cf)
        object.__setattr__(self, "_coeffs", tuple(data))

    def __setattr__(self, name, value):
        raise AttributeError("VectorField is immutable")

    @classmethod
    def from_string(cls, text: str) -> "VectorField":
        """Parse ``"t*D_t + u*D_f"``; ``D_<coord>`` names the partial derivative."""
        ops = {f"D_{s.name}": sp.Symbol(f"__D_{s.name}") for s in COORDS}
        e = E.parse_raw(text, symbols=ops)
        e = sp.expand(e)
        out = {}
        for s in COORDS:
            d = ops[f"D_{s.name}"]
            out[s] = e.coeff(d)
        rest = sp.expand(e - sum(out[s] * ops[f"D_{s.name}"] for s in COORDS))
        if rest != 0:
            raise ValueError(f"vector field text has a term without D_*: {rest}")
        return cls(out)

    def __getitem__(self, coord):
        return self._coeffs[COORDS.index(coord)]

    def items(self):
        return [(s, cf) for s, cf in zip(COORDS, self._coeffs) if cf != 0]

    def as_dict(self):
        return dict(self.items())

    def __call__(self, e):
        """Apply the field to a function on the augmented space."""
        e = sp.sympify(e)
        return E.normalize(sum((cf * sp.diff(e, s) for s, cf in self.items()), sp.Integer(0)))

    def __add__(self, other):
        return VectorField({s: self[s] + other[s] for s in COORDS})

    def __sub__(self, other):
        return VectorField({s: self[s] - other[s] for s in COORDS})

    def __neg__(self):
        return VectorField({s: -self[s] for s in COORDS})

    def __mul__(self, scalar):
        scalar = sp.sympify(scalar)
        return VectorField({s: scalar * self[s] for s in COORDS})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return all(E.normalize(a - b) == 0 for a, b in zip(self._coeffs, other._coeffs))

    def __hash__(self):
        return hash(self._coeffs)

    def is_zero(self):
        return all(cf == 0 for cf in self._coeffs)

    def restrict(self, coords) -> "VectorField":
        keep = set(coords)
        return VectorField({s: cf for s, cf in self.items() if s in keep})

    def subs(self, binding) -> "VectorField":
        return VectorField({s: E.substitute(cf, binding) for s, cf in self.items()})

    def to_string(self, format="plain"):
        if self.is_zero():
            return "0"
        parts = []
        for s, cf in self.items():
            op = f"D_{s.name}" if format == "plain" else rf"\partial_{{{E._latex_name(s.name)}}}"
            if cf == 1:
                parts.append(op)
            elif cf == -1:
                parts.append("-" + op)
            else:
                cs = E.to_string(cf, format)
                if cf.is_Add:
                    cs = f"({cs})"
                parts.append(f"{cs}*{op}" if format == "plain" else f"{cs} {op}")
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    def __repr__(self):
        return f"VectorField({self.to_string()})"

    __str__ = to_string


def D(coord) -> VectorField:
    """The coordinate field d/d(coord)."""
    return VectorField({coord: 1})


def bracket(V: VectorField, W: VectorField) -> VectorField:
    """Lie bracket [V, W] = V(W) - W(V), componentwise."""
    return VectorField({s: V(W[s]) - W(V[s]) for s in COORDS})


# --- exact matrix exponential ---------------------------------------------


def _rational_roots(poly: sp.Poly):
    """All rational roots with multiplicity, plus the degree left unresolved."""
    poly = sp.Poly(poly.as_expr(), poly.gens[0], domain="QQ")
    roots = []
    while poly.degree() > 0:
        coeffs = poly.all_coeffs()
        denom = sp.ilcm(*[sp.Rational(cf).q for cf in coeffs])
        ints = [int(sp.Rational(cf) * denom) for cf in coeffs]
        if ints[-1] == 0:
            cand = sp.Integer(0)
        else:
            cand = None
            for p in sp.divisors(abs(ints[-1])):
                for q in sp.divisors(abs(ints[0])):
                    for r in (sp.Rational(p, q), -sp.Rational(p, q)):
                        if poly.eval(r) == 0:
                            cand = r
                            break
                    if cand is not None:
                        break
                if cand is not None:
                    break
        if cand is None:
            break
        roots.append(cand)
        poly = sp.Poly(sp.quo(poly.as_expr(), poly.gens[0] - cand), poly.gens[0], domain="QQ")
    return roots, poly.degree()


def jordan_chevalley(A: sp.Matrix):
    """Split A = S diag(lams) S^-1 + N with N nilpotent commuting with the diagonal part.

    Returns ``(S, lams, N)`` or ``None`` when some eigenvalue is irrational.
    """
    n = A.rows
    lam = sp.Symbol("lam")
    roots, left = _rational_roots(A.charpoly(lam))
    if left:
        return None
    mult = {}
    for r in roots:
        mult[r] = mult.get(r, 0) + 1
    cols, lams = [], []
    for r in sorted(mult):
        vecs = ((A - r * sp.eye(n)) ** mult[r]).nullspace()
        if len(vecs) != mult[r]:
            return None
        cols += vecs
        lams += [r] * mult[r]
    S = sp.Matrix.hstack(*cols)
    Dm = S * sp.diag(*lams) * S.inv()
    N = A - Dm
    if not (N ** n).is_zero_matrix or not (Dm * N - N * Dm).is_zero_matrix:
        return None
    return S, lams, N


def matrix_exponential(A: sp.Matrix, s) -> tuple[sp.Matrix, bool]:
    """exp(s*A) in closed form for rational-eigenvalue A.

    Returns ``(matrix, exact)``; when the Jordan-Chevalley split fails the
    series truncated at order 8 is returned with ``exact=False``.
    """
    A = sp.Matrix(A)
    n = A.rows
    split = jordan_chevalley(A) if A.free_symbols == set() else None
    if split is None:
        acc = sp.zeros(n)
        term = sp.eye(n)
        for k in range(TRUNCATION_ORDER + 1):
            acc += term / math.factorial(k)
            term = term * (s * A)
        return acc.applyfunc(E.normalize), False
    S, lams, N = split
    diag = S * sp.diag(*[sp.exp(lm * s) for lm in lams]) * S.inv()
    series = sp.zeros(n)
    term = sp.eye(n)
    for k in range(n):
        series += term / math.factorial(k)
        term = term * (s * N)
    return (diag * series).applyfunc(E.normalize), True


# --- algebra bases ----------------------------------------------------------


def _monomial_table(V: VectorField):
    """{(coord, monomial): coefficient} with monomials over augmented coordinates."""
    table = {}
    for s, cf in V.items():
        poly = sp.Poly(cf, *COORDS)
        for monom, k in poly.terms():
            table[(s, monom)] = k
    return table


class AlgebraBasis:
    """Ordered basis of a finite-dimensional Lie algebra of vector fields."""

    def __init__(self, fields: Sequence[VectorField], labels: Sequence[str] | None = None, check=True):
        self.fields = tuple(fields)
        self.labels = tuple(labels or [f"V{i + 1}" for i in range(len(self.fields))])
        if len(self.labels) != len(self.fields):
            raise ValueError("one label per field")
        tables = [_monomial_table(f) for f in self.fields]
        self._keys = sorted({k for tb in tables for k in tb}, key=str)
        self._matrix = sp.Matrix(
            [[tb.get(k, 0) for tb in tables] for k in self._keys]
        ) if self._keys else sp.zeros(0, len(self.fields))
        if self._matrix.rank() != len(self.fields):
            raise ValueError("basis fields are linearly dependent")
        self._structure = None
        if check:
            self.structure_constants()

    def __len__(self):
        return len(self.fields)

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.fields[self.labels.index(key)]
        return self.fields[key]

    def coordinates(self, V: VectorField) -> list:
        """Coefficients of V in this basis (exact); raises SpanError if V is outside."""
        table = _monomial_table(V)
        extra = set(table) - set(self._keys)
        if extra:
            raise SpanError(f"{V} is not in the span of {list(self.labels)}")
        rhs = sp.Matrix([table.get(k, 0) for k in self._keys])
        try:
            sol, params = self._matrix.gauss_jordan_solve(rhs)
        except ValueError:
            raise SpanError(f"{V} is not in the span of {list(self.labels)}") from None
        return [E.normalize(v) for v in sol]

    def combine(self, coeffs) -> VectorField:
        acc = VectorField()
        for k, f in zip(coeffs, self.fields):
            if k != 0:
                acc = acc + k * f
        return acc

    def format(self, coeffs, format="plain") -> str:
        """Render a coefficient vector as a combination of basis labels."""
        if format == "latex":
            return _label_latex(coeffs, self.labels)
        return _label_plain(coeffs, self.labels)

    def structure_constants(self):
        """C[i][j] = coefficient vector of [B_i, B_j]."""
        if self._structure is None:
            n = len(self)
            table = [[None] * n for _ in range(n)]
            for i in range(n):
                for j in range(n):
                    if j < i:
                        table[i][j] = [-k for k in table[j][i]]
                        continue
                    br = bracket(self.fields[i], self.fields[j])
                    try:
                        table[i][j] = self.coordinates(br)
                    except SpanError:
                        raise ClosureError((self.labels[i], self.labels[j])) from None
            self._structure = table
        return self._structure


def _display_order(coeffs, labels):
    """Numeric coefficients first, then parameter-dependent ones, each in basis order."""
    pairs = [(sp.sympify(k), lab) for k, lab in zip(coeffs, labels)]
    return sorted(pairs, key=lambda p: bool(p[0].free_symbols))


def _label_plain(coeffs, labels):
    parts = []
    for k, lab in _display_order(coeffs, labels):
        k = sp.sympify(k)
        if k == 0:
            continue
        if k == 1:
            parts.append(lab)
        elif k == -1:
            parts.append("-" + lab)
        else:
            s = E.to_string(k)
            if k.is_Add:
                s = f"({s})"
            parts.append(f"{s}*{lab}")
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


def _label_latex(coeffs, labels):
    parts = []
    for k, lab in _display_order(coeffs, labels):
        k = sp.sympify(k)
        if k == 0:
            continue
        tex = E._latex_name(lab)
        if k == 1:
            parts.append(tex)
        elif k == -1:
            parts.append("-" + tex)
        else:
            s = E.to_string(k, "latex")
            if k.is_Add:
                s = f"\\left({s}\\right)"
            parts.append(f"{s} {tex}")
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


def commutator_table(B: AlgebraBasis):
    """n x n table of coefficient vectors of [B_i, B_j]; raises ClosureError."""
    return B.structure_constants()


@dataclass(frozen=True)
class AdMatrix:
    """M[j][i] = coefficient of basis element i in [V, B_j]."""

    M: sp.Matrix
    labels: tuple = field(default=())

    def acting(self):
        """Column-convention matrix A with A @ w = coordinates of [V, w]."""
        return self.M.T


def ad_matrix(V: VectorField, B: AlgebraBasis) -> AdMatrix:
    v = B.coordinates(V)
    C = B.structure_constants()
    n = len(B)
    rows = []
    for j in range(n):
        rows.append([E.normalize(sum((v[k] * C[k][j][i] for k in range(n)), sp.Integer(0))) for i in range(n)])
    return AdMatrix(sp.Matrix(rows), B.labels)


def adjoint_matrix(V: VectorField, B: AlgebraBasis, eps=E.eps) -> tuple[sp.Matrix, bool]:
    """Matrix of Ad(exp(eps V)) in column convention, and whether it is exact."""
    A = ad_matrix(V, B).acting()
    return matrix_exponential(-A, eps)


def adjoint(V: VectorField, W: VectorField, eps=E.eps, B: AlgebraBasis = None) -> VectorField:
    """Ad(exp(eps V)) W summed in closed form."""
    if B is None:
        raise ValueError("a basis containing V and W is required")
    M, exact = adjoint_matrix(V, B, eps)
    w = sp.Matrix(B.coordinates(W))
    out = B.combine([E.normalize(k) for k in M * w])
    if not exact:
        raise SeriesClosureError("ad matrix has irrational spectrum; series truncated", truncated=out)
    return out


def adjoint_table(B: AlgebraBasis, eps=E.eps):
    """table[i][j] = coefficient vector of Ad(exp(eps B_i)) B_j."""
    n = len(B)
    table = []
    for i in range(n):
        M, exact = adjoint_matrix(B[i], B, eps)
        if not exact:
            raise SeriesClosureError(f"Ad(exp(eps*{B.labels[i]})) has no closed form")
        table.append([[E.normalize(M[k, j]) for k in range(n)] for j in range(n)])
    return table


# --- experimental orbit normalizer -------------------------------------------

UNRESOLVED = "UNRESOLVED"


@dataclass
class NormalizationResult:
    label: str
    values: dict
    element: list
    transcript: list
    constraint_violations: list = field(default_factory=list)

    @property
    def resolved(self):
        return self.label != UNRESOLVED


def _support(v):
    return sum(1 for c in v if c != 0)


def _moves(v, tables, eps):
    """Adjoint moves Ad(exp(e Z_i)) with real e that shrink the support of v."""
    n = len(v)
    out = []
    for i, table in enumerate(tables):
        image = [E.normalize(sum(table[j][k] * v[j] for j in range(n))) for k in range(n)]
        for k in range(n):
            if v[k] == 0 or not image[k].has(eps):
                continue
            for sol in sp.solve(image[k], eps):
                if not sol.is_real:
                    continue
                w = [E.normalize(c.subs(eps, sol)) for c in image]
                if _support(w) < _support(v):
                    out.append((_support(w), i, k, sol, w))
    return sorted(out, key=lambda m: m[:3])


def _match(v, representatives):
    lam = sp.Dummy("lambda")
    hits = []
    for rep in representatives:
        params = [E.symbol(p) for p in rep.parameters]
        eqs = [lam * a - b for a, b in zip(v, rep.vector)]
        sols = sp.solve(eqs, [lam, *params], dict=True)
        for sol in sols:
            if sol.get(lam, 1) == 0:
                continue
            values = {p: sol.get(p, sp.Integer(0)) for p in params}
            values = {p: E.normalize(val.subs({q: 0 for q in params})) for p, val in values.items()}
            hits.append((rep, values, rep.violations(values)))
            break
    for hit in hits:
        if not hit[2]:
            return hit
    return hits[0] if hits else None


def normalize_element(coeffs, B: AlgebraBasis = None, representatives=None, eps=E.eps) -> NormalizationResult:
    """Best-effort reduction of a rational element to an optimal-system representative.

    Greedily applies adjoint maps whose parameter, solved exactly, shrinks the
    support; then matches lambda*v against each representative in order.
    """
    v = [sp.nsimplify(c) for c in coeffs]
    if all(c == 0 for c in v):
        raise ValueError("normalize_element needs a nonzero element")
    if B is None or representatives is None:
        from .equivalence import projected_basis
        from .fixtures import FixtureSet

        B = B or projected_basis()
        representatives = representatives or FixtureSet.load().representatives
    tables = adjoint_table(B, eps)
    transcript = []
    while True:
        moves = _moves(v, tables, eps)
        if not moves:
            break
        _, i, k, sol, v = moves[0]
        move = _label_plain([sol], [B.labels[i]])
        transcript.append(f"Ad(exp({move})) removes {B.labels[k]}")
    hit = _match(v, representatives)
    if hit is None:
        return NormalizationResult(UNRESOLVED, {}, v, transcript)
    rep, values, violated = hit
    return NormalizationResult(rep.label, values, v, transcript, violated)
