"""Exact symbolic expressions over the jet space of the generalized KS class.

Expressions are plain :mod:`sympy` objects built from a fixed registry of
symbols, so every coefficient is an exact rational and parameters stay
symbolic.  This module adds what sympy does not provide in the shape we need:

* a small recursive-descent parser for the plain text grammar (jet suffixes
  ``u_xx``, primes ``h''``, function-derivative shorthands ``f_uu``),
* deterministic plain / LaTeX / JSON printers,
* a canonicalizer (:func:`normalize`) used for every equality test.

Symbol order used for monomial ordering (most significant first):
u-jet coordinates with t-derivatives, pure x-jet coordinates (highest order
first), ODE derivative symbols (h'''' ... w'), arbitrary-element functions
of u, the variables u, h, w, t, x, z, elementary-function atoms, parameters.
"""

from __future__ import annotations

import json
import re
from typing import Mapping, Union

import sympy as sp

from .errors import (
    NotAffineError,
    ParseError,
    UnknownSymbolError,
    UnsupportedFormError,
    ZeroCoefficientError,
)

Expr = sp.Expr
Binding = Mapping[Union[sp.Symbol, sp.core.function.UndefinedFunction], sp.Expr]

JET_ORDER = 6

# --- symbol registry -------------------------------------------------------

t = sp.Symbol("t", positive=True)
x = sp.Symbol("x", real=True)
z = sp.Symbol("z", positive=True)
u = sp.Symbol("u", real=True)
h = sp.Symbol("h", real=True)
w = sp.Symbol("w", positive=True)
VARIABLES = {s.name: s for s in (t, x, z, u, h, w)}

sigma = sp.Symbol("sigma", real=True)
eps = sp.Symbol("eps", real=True)
_PARAM_NAMES = (
    [f"c{i}" for i in range(11)]
    + ["a", "b", "c", "d", "m", "eps"]
    + [f"eps{i}" for i in range(1, 11)]
    + ["sigma"]
)
PARAMETERS = {n: sp.Symbol(n, real=True) for n in _PARAM_NAMES}
PARAMETERS["eps"] = eps
PARAMETERS["sigma"] = sigma
c = [PARAMETERS[f"c{i}"] for i in range(11)]
epsilons = [None] + [PARAMETERS[f"eps{i}"] for i in range(1, 11)]


def _jet_name(nt, nx):
    if nt == nx == 0:
        return "u"
    return "u_" + "t" * nt + "x" * nx


JET = {(0, 0): u}
for _n in range(1, JET_ORDER + 1):
    for _nt in range(_n + 1):
        JET[(_nt, _n - _nt)] = sp.Symbol(_jet_name(_nt, _n - _nt), real=True)
JET_INDEX = {s: k for k, s in JET.items()}


def jet(nt: int = 0, nx: int = 0) -> sp.Symbol:
    """Jet coordinate u_{t^nt x^nx}."""
    if nt + nx > JET_ORDER:
        from .errors import TruncationError

        raise TruncationError(f"jet order {nt + nx} exceeds truncation order {JET_ORDER}")
    return JET[(nt, nx)]


u_t, u_x, u_xx, u_xxx, u_xxxx = jet(1, 0), jet(0, 1), jet(0, 2), jet(0, 3), jet(0, 4)

# derivatives of the reduced unknowns: h(z) up to order 6, w(h) up to order 4
ODE_DERIVS = {
    "h": [h] + [sp.Symbol("h" + "'" * k, real=True) for k in range(1, 7)],
    "w": [w] + [sp.Symbol("w" + "'" * k, real=True) for k in range(1, 5)],
}
ODE_INDEX = {s: (base, k) for base, lst in ODE_DERIVS.items() for k, s in enumerate(lst)}


def hder(k: int) -> sp.Symbol:
    return ODE_DERIVS["h"][k]


def wder(k: int) -> sp.Symbol:
    return ODE_DERIVS["w"][k]


ELEMENT_NAMES = ("f", "g", "alpha", "beta", "gamma", "phi")
FUNCTIONS = {n: sp.Function(n) for n in ELEMENT_NAMES}
FIBER = {n: sp.Symbol(n, real=True) for n in ELEMENT_NAMES}

_ELEMENTARY = {
    "exp": sp.exp,
    "log": sp.log,
    "ln": sp.log,
    "sqrt": sp.sqrt,
    "arctan": sp.atan,
    "atan": sp.atan,
}

_LATEX_GREEK = {"alpha", "beta", "gamma", "phi", "sigma"}


def symbol(name: str) -> sp.Symbol:
    """Look up a registered symbol by its plain name."""
    for table in (VARIABLES, PARAMETERS, FIBER):
        if name in table:
            return table[name]
    for s in JET.values():
        if s.name == name:
            return s
    for s in ODE_INDEX:
        if s.name == name:
            return s
    raise UnknownSymbolError(f"unknown symbol {name!r}", 1)


# --- canonical form --------------------------------------------------------


def _reduce_sigma(e):
    if not e.has(sigma):
        return e
    return e.replace(
        lambda p: p.is_Pow and p.base == sigma and p.exp.is_Integer,
        lambda p: sigma ** (int(p.exp) % 2),
    )


def _check_supported(e):
    for p in e.atoms(sp.Pow):
        if p.exp.is_Rational and not p.exp.is_Integer:
            inner = p.base.atoms(sp.Pow)
            if any(q.exp.is_Rational and not q.exp.is_Integer for q in inner):
                raise UnsupportedFormError(f"nested radical {p}")
    for fn in e.atoms(sp.Function):
        if isinstance(fn, (sp.exp, sp.log, sp.atan)):
            continue
        if isinstance(type(fn), sp.core.function.UndefinedFunction):
            continue
        raise UnsupportedFormError(f"unsupported function {fn.func}")
    for fl in e.atoms(sp.Float):
        raise UnsupportedFormError(f"floating-point constant {fl}")


def _apply_derivatives(e):
    return e.replace(lambda q: isinstance(q, (sp.Derivative, sp.Subs)), lambda q: q.doit())


def normalize(e) -> sp.Expr:
    """Canonical form: expanded numerator over expanded denominator.

    Exponentials are merged per monomial, sigma**2 -> 1 and sqrt(w)**2 -> w.
    Idempotent; ``normalize(a - b) == 0`` exactly when ``a`` equals ``b``
    over the supported class.
    """
    e = sp.sympify(e)
    if isinstance(e, (sp.Integer, sp.Rational)):
        return e
    _check_supported(e)
    e = _reduce_sigma(sp.expand(e))
    if e == 0:
        return sp.Integer(0)
    num, den = sp.fraction(sp.cancel(sp.together(e)))
    num = _reduce_sigma(sp.expand(num))
    den = _reduce_sigma(sp.expand(den))
    if num == 0:
        return sp.Integer(0)
    if den.is_Add:
        # sigma reduction may expose a new common factor
        q = sp.cancel(num / den)
        num, den = sp.fraction(q)
        num, den = sp.expand(num), sp.expand(den)
        if den.is_Add:
            lead = _leading_coefficient(den)
            return sp.Mul(sp.expand(num / lead), sp.Pow(sp.expand(den / lead), -1))
    out = sp.expand(num / den)
    return sp.powsimp(out, combine="exp") if out.has(sp.exp) else out


def _leading_coefficient(poly_expr):
    terms = sorted(sp.Add.make_args(poly_expr), key=_term_sort_key)
    coeff, _ = terms[0].as_coeff_Mul()
    return coeff


def equals(a, b) -> bool:
    return normalize(sp.sympify(a) - sp.sympify(b)) == 0


def diff(e, v) -> sp.Expr:
    """Partial derivative; f(u) differentiates to f_u(u)."""
    return normalize(sp.diff(sp.sympify(e), v))


def substitute(e, binding: Binding | None = None) -> sp.Expr:
    """Simultaneous substitution of symbols and function symbols.

    A function key ``f`` maps to an expression in ``u`` giving f(u); its
    derivatives follow by differentiation.
    """
    e = sp.sympify(e)
    if not binding:
        return normalize(e)
    sym_keys = {k: v for k, v in binding.items() if isinstance(k, sp.Symbol)}
    fun_keys = {k: v for k, v in binding.items() if not isinstance(k, sp.Symbol)}
    dummies = {k: sp.Dummy(k.name) for k in sym_keys}
    e = e.xreplace(dummies)
    if fun_keys:
        for fn, value in fun_keys.items():
            y = sp.Dummy("y")
            lam = sp.Lambda(y, sp.sympify(value).xreplace({u: y}))
            e = e.replace(fn, lam)
        e = _apply_derivatives(e)
    e = e.xreplace({dummies[k]: sp.sympify(v) for k, v in sym_keys.items()})
    return normalize(e)


def solve_for(eq, s) -> sp.Expr:
    """Solve ``eq = 0`` for ``s`` where eq is affine in s."""
    eq = normalize(eq)
    coeff = normalize(sp.diff(eq, s))
    if coeff == 0:
        raise ZeroCoefficientError(f"{s} does not appear linearly in the equation")
    if normalize(sp.diff(coeff, s)) != 0:
        raise NotAffineError(f"equation is not affine in {s}")
    rest = normalize(eq - coeff * s)
    return normalize(-rest / coeff)


# --- ordering --------------------------------------------------------------

_VAR_ORDER = ("u", "h", "w", "t", "x", "z")


def symbol_rank(a) -> tuple:
    """Global rank of an atom; smaller ranks are more significant."""
    if a in JET_INDEX and a != u:
        nt, nx = JET_INDEX[a]
        return (0, -nt, -nx)
    if a in ODE_INDEX and ODE_INDEX[a][1] > 0:
        base, k = ODE_INDEX[a]
        return (1, base, -k)
    if isinstance(a, sp.Derivative) and isinstance(type(a.expr), sp.core.function.UndefinedFunction):
        return (2, ELEMENT_NAMES.index(a.expr.func.__name__) if a.expr.func.__name__ in ELEMENT_NAMES else 9,
                -a.derivative_count, str(a))
    if isinstance(type(a), sp.core.function.UndefinedFunction):
        return (2, ELEMENT_NAMES.index(a.func.__name__) if a.func.__name__ in ELEMENT_NAMES else 9, 0, str(a))
    if isinstance(a, sp.Symbol):
        if a.name in _VAR_ORDER:
            return (3, _VAR_ORDER.index(a.name))
        if a.name in FIBER:
            return (3, 10 + ELEMENT_NAMES.index(a.name))
        if a.name in PARAMETERS:
            return (5, _PARAM_NAMES.index(a.name))
        return (6, a.name)
    if isinstance(a, (sp.exp, sp.log, sp.atan)) or a.is_Pow:
        return (4, str(a))
    return (7, str(a))


_FACTOR_GROUP_ORDER = {5: 0, 2: 1, 4: 2, 3: 3, 1: 4, 0: 5, 6: 6, 7: 7}


def factor_rank(a) -> tuple:
    """Print order of factors inside a monomial: parameters lead, jets trail."""
    r = symbol_rank(a)
    return (_FACTOR_GROUP_ORDER[r[0]],) + r


def _powers(term):
    coeff, rest = term.as_coeff_Mul()
    out = {}
    for f in sp.Mul.make_args(rest):
        if f.is_Number:
            continue
        base, ex = f.as_base_exp()
        if isinstance(f, sp.exp):
            base, ex = f, sp.Integer(1)
        if base.is_Pow and not ex.is_Rational:
            base, ex = f, sp.Integer(1)
        if not ex.is_Rational:
            base, ex = f, sp.Integer(1)
        if base.is_Pow and base.exp == sp.Rational(1, 2):
            base, ex = f, sp.Integer(1)
        out[base] = out.get(base, 0) + ex
    return out


def _term_sort_key(term):
    powers = _powers(term)
    ranked = sorted(powers, key=symbol_rank)
    return tuple((symbol_rank(g), -powers[g]) for g in ranked) + (((9,), 0),)


def ordered_terms(e):
    """Terms of a sum in the canonical (lexicographic, degree-tiebreak) order."""
    terms = list(sp.Add.make_args(e))
    gens = set()
    for term in terms:
        gens.update(_powers(term))
    gens = sorted(gens, key=symbol_rank)

    def key(term):
        p = _powers(term)
        vec = tuple(-float(p.get(g, 0)) for g in gens)
        return vec + (-float(sum(p.values())), str(term))

    return sorted(terms, key=key)


# --- parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z]+)?'*)|(?P<op>\*\*|[-+*/^(),]))"
)


class _Parser:
    def __init__(self, text, extra):
        self.text = text
        self.extra = extra or {}
        self.tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                col = pos + 1 + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ParseError(f"unexpected character {text[col - 1]!r}", col)
            kind = m.lastgroup
            val = m.group(kind)
            col = m.start(kind) + 1
            if val == "**":
                val = "^"
            self.tokens.append((kind, val, col))
            pos = m.end()
        self.i = 0
        self.open_parens = []

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text) + 1)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, val, opened_at=None):
        kind, v, col = self.peek()
        if v != val:
            if opened_at is not None:
                raise ParseError(f"unclosed '(' opened", opened_at)
            raise ParseError(f"expected {val!r}", col)
        self.take()

    def parse(self):
        if not self.tokens:
            raise ParseError("empty expression", 1)
        e = self.expr()
        kind, v, col = self.peek()
        if kind is not None:
            raise ParseError(f"unexpected token {v!r}", col)
        return e

    def expr(self):
        kind, v, col = self.peek()
        sign = 1
        if v in ("+", "-"):
            self.take()
            sign = -1 if v == "-" else 1
        acc = sign * self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self):
        acc = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            acc = acc * rhs if op == "*" else acc / rhs
        return acc

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.base()
        if self.peek()[1] == "^":
            self.take()
            neg = False
            if self.peek()[1] == "-":
                self.take()
                neg = True
            ex = self.base()
            return base ** (-ex if neg else ex)
        return base

    def base(self):
        kind, v, col = self.take()
        if kind is None:
            if self.open_parens:
                raise ParseError("unexpected end of input inside '(' opened", self.open_parens[-1])
            raise ParseError("unexpected end of input", col)
        if kind == "num":
            return sp.Integer(int(v))
        if v == "(":
            self.open_parens.append(col)
            e = self.expr()
            self.expect(")", opened_at=col)
            self.open_parens.pop()
            return e
        if kind == "op":
            raise ParseError(f"unexpected token {v!r}", col)
        if self.peek()[1] == "(":
            _, _, open_col = self.take()
            self.open_parens.append(open_col)
            arg = self.expr()
            self.expect(")", opened_at=open_col)
            self.open_parens.pop()
            return self.call(v, arg, col)
        return self.ident(v, col)

    def call(self, name, arg, col):
        if name in _ELEMENTARY:
            return _ELEMENTARY[name](arg)
        fn, order = _split_function(name)
        if fn is None:
            raise UnknownSymbolError(f"unknown function {name!r}", col)
        base = FUNCTIONS[fn](u)
        d = sp.diff(base, u, order) if order else base
        return d if arg == u else d.subs(u, arg)

    def ident(self, name, col):
        if name in self.extra:
            return self.extra[name]
        try:
            return symbol(name)
        except UnknownSymbolError:
            pass
        fn, order = _split_function(name)
        if fn is not None and order > 0:
            return sp.diff(FUNCTIONS[fn](u), u, order)
        raise UnknownSymbolError(f"unknown symbol {name!r}", col)


def _split_function(name):
    if "_" in name:
        head, suffix = name.split("_", 1)
        if head in FUNCTIONS and set(suffix) == {"u"}:
            return head, len(suffix)
        return None, 0
    if name in FUNCTIONS:
        return name, 0
    return None, 0


def parse(text: str, symbols: Mapping[str, sp.Expr] | None = None) -> sp.Expr:
    """Parse plain-grammar text into a normalized expression.

    ``symbols`` adds extra names (e.g. basis labels ``Z1``) for this call.
    Bare ``f`` is the fiber coordinate; ``f(u)`` and ``f_u`` are the
    arbitrary element and its derivative.
    """
    return normalize(_Parser(text, symbols).parse())


def parse_raw(text: str, symbols: Mapping[str, sp.Expr] | None = None) -> sp.Expr:
    """Parse without normalizing (keeps sympy's automatic evaluation only)."""
    return _Parser(text, symbols).parse()


# --- printing --------------------------------------------------------------


def _is_sqrt(e):
    return e.is_Pow and e.exp == sp.Rational(1, 2)


def _plain_atom(e):
    if isinstance(e, sp.Symbol):
        return e.name
    if isinstance(e, sp.Derivative) and isinstance(type(e.expr), sp.core.function.UndefinedFunction):
        (var, n), = e.variable_count
        if var == u and e.expr.args == (u,):
            return f"{e.expr.func.__name__}_{'u' * n}"
    if isinstance(e, sp.Subs):
        d, (var,), (pt,) = e.args
        if isinstance(d, sp.Derivative):
            (_, n), = d.variable_count
            return f"{d.expr.func.__name__}_{'u' * n}({to_plain(pt)})"
    if isinstance(type(e), sp.core.function.UndefinedFunction):
        return f"{e.func.__name__}({', '.join(to_plain(a) for a in e.args)})"
    if isinstance(e, sp.exp):
        return f"exp({to_plain(e.args[0])})"
    if isinstance(e, sp.log):
        return f"log({to_plain(e.args[0])})"
    if isinstance(e, sp.atan):
        return f"arctan({to_plain(e.args[0])})"
    if _is_sqrt(e):
        return f"sqrt({to_plain(e.base)})"
    return None


def _plain_factor(e):
    """Printed factor with parentheses when it would not parse as a base."""
    s = to_plain(e)
    if e.is_Add or (e.is_Number and (e < 0 or not e.is_Integer)) or e.is_Mul:
        return f"({s})"
    return s


def _plain_power(base, ex):
    b = _plain_factor(base)
    if ex.is_Integer and ex > 0:
        return b if ex == 1 else f"{b}^{ex}"
    if ex.is_Integer:
        return f"{b}^{ex}"
    if ex.is_Rational:
        return f"{b}^({ex.p}/{ex.q})"
    return f"{b}^({to_plain(ex)})"


def _split_mul(e):
    coeff, rest = e.as_coeff_Mul()
    num, den = [], []
    for f in sorted(sp.Mul.make_args(rest), key=lambda q: factor_rank(q.as_base_exp()[0] if q.is_Pow else q)):
        if f.is_Number:
            coeff *= f
            continue
        if f.is_Pow and f.exp.is_Rational and f.exp < 0 and not isinstance(f, sp.exp):
            den.append(f.base ** -f.exp)
        else:
            num.append(f)
    return coeff, num, den


def to_plain(e) -> str:
    e = sp.sympify(e)
    atom = _plain_atom(e)
    if atom is not None:
        return atom
    if e.is_Integer:
        return str(e)
    if e.is_Rational:
        return f"{e.p}/{e.q}"
    if e.is_Add:
        out = ""
        for i, term in enumerate(ordered_terms(e)):
            s = to_plain(term)
            if i == 0:
                out = s
            elif s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out
    if e.is_Mul:
        coeff, num, den = _split_mul(e)
        sign = "-" if coeff < 0 else ""
        coeff = abs(coeff)
        parts = []
        if coeff.p != 1 or (not num and not den):
            parts.append(str(coeff.p))
        parts += [_plain_mul_factor(f) for f in num]
        s = "*".join(parts) if parts else "1"
        denom = coeff.q
        dparts = [str(denom)] if denom != 1 else []
        dparts += [_plain_mul_factor(f) for f in den]
        if dparts:
            dstr = dparts[0] if len(dparts) == 1 else "(" + "*".join(dparts) + ")"
            s = f"{s}/{dstr}"
        return sign + s
    if e.is_Pow:
        if e.exp.is_Rational and e.exp < 0:
            return f"1/{_plain_power(e.base, -e.exp)}"
        return _plain_power(e.base, e.exp)
    raise UnsupportedFormError(f"cannot print {e!r}")


def _plain_mul_factor(f):
    if f.is_Pow and not _is_sqrt(f) and not isinstance(f, sp.exp):
        return _plain_power(f.base, f.exp)
    if f.is_Add:
        return f"({to_plain(f)})"
    return to_plain(f)


def _latex_name(name):
    m = re.fullmatch(r"([A-Za-z]+?)(\d+)", name)
    if m and m.group(1) in ("c", "eps", "Z", "Y", "X"):
        head = r"\varepsilon" if m.group(1) == "eps" else m.group(1)
        return f"{head}_{{{m.group(2)}}}"
    if name == "eps":
        return r"\varepsilon"
    if name in _LATEX_GREEK:
        return "\\" + name
    if "_" in name:
        head, suf = name.split("_", 1)
        return f"{_latex_name(head)}_{{{suf}}}"
    return name


def to_latex(e) -> str:
    e = sp.sympify(e)
    if isinstance(e, sp.Symbol):
        return _latex_name(e.name)
    if e.is_Integer:
        return str(e)
    if e.is_Rational:
        sign = "-" if e < 0 else ""
        return f"{sign}\\frac{{{abs(e.p)}}}{{{e.q}}}"
    if isinstance(e, sp.Derivative) and isinstance(type(e.expr), sp.core.function.UndefinedFunction):
        (var, n), = e.variable_count
        return f"{_latex_name(e.expr.func.__name__)}_{{{'u' * n}}}"
    if isinstance(type(e), sp.core.function.UndefinedFunction):
        return f"{_latex_name(e.func.__name__)}({', '.join(to_latex(a) for a in e.args)})"
    if isinstance(e, sp.Subs):
        d, _, (pt,) = e.args
        (_, n), = d.variable_count
        return f"{_latex_name(d.expr.func.__name__)}_{{{'u' * n}}}({to_latex(pt)})"
    if isinstance(e, sp.exp):
        return f"e^{{{to_latex(e.args[0])}}}"
    if isinstance(e, sp.log):
        return f"\\ln\\left({to_latex(e.args[0])}\\right)"
    if isinstance(e, sp.atan):
        return f"\\arctan\\left({to_latex(e.args[0])}\\right)"
    if _is_sqrt(e):
        return f"\\sqrt{{{to_latex(e.base)}}}"
    if e.is_Add:
        out = ""
        for i, term in enumerate(ordered_terms(e)):
            s = to_latex(term)
            if i == 0:
                out = s
            elif s.startswith("-"):
                out += " - " + s[1:]
            else:
                out += " + " + s
        return out
    if e.is_Mul:
        coeff, num, den = _split_mul(e)
        sign = "-" if coeff < 0 else ""
        coeff = abs(coeff)
        nparts = [str(coeff.p)] if coeff.p != 1 else []
        nparts += [_latex_factor(f) for f in num]
        dparts = [str(coeff.q)] if coeff.q != 1 else []
        dparts += [_latex_factor(f) for f in den]
        ns = " ".join(nparts) if nparts else "1"
        if dparts:
            return f"{sign}\\frac{{{ns}}}{{{' '.join(dparts)}}}"
        return sign + ns
    if e.is_Pow:
        if e.exp.is_Rational and e.exp < 0:
            return f"\\frac{{1}}{{{to_latex(e.base ** -e.exp)}}}"
        base = _latex_factor(e.base)
        return f"{base}^{{{to_latex(e.exp)}}}"
    raise UnsupportedFormError(f"cannot print {e!r}")


def _latex_factor(f):
    s = to_latex(f)
    if f.is_Add:
        return f"\\left({s}\\right)"
    return s


def to_json_tree(e):
    e = sp.sympify(e)
    if e.is_Rational:
        return {"num": str(e)}
    if isinstance(e, sp.Symbol):
        return {"sym": e.name}
    if isinstance(e, sp.Derivative) and isinstance(type(e.expr), sp.core.function.UndefinedFunction):
        (var, n), = e.variable_count
        return {"apply": e.expr.func.__name__, "order": int(n), "arg": to_json_tree(e.expr.args[0])}
    if isinstance(type(e), sp.core.function.UndefinedFunction):
        return {"apply": e.func.__name__, "order": 0, "arg": to_json_tree(e.args[0])}
    for name, cls in (("exp", sp.exp), ("log", sp.log), ("arctan", sp.atan)):
        if isinstance(e, cls):
            return {"fn": name, "arg": to_json_tree(e.args[0])}
    if e.is_Add:
        return {"op": "add", "args": [to_json_tree(a) for a in ordered_terms(e)]}
    if e.is_Mul:
        return {"op": "mul", "args": [to_json_tree(a) for a in sorted(e.args, key=symbol_rank)]}
    if e.is_Pow:
        return {"op": "pow", "args": [to_json_tree(e.base), to_json_tree(e.exp)]}
    raise UnsupportedFormError(f"cannot serialize {e!r}")


def from_json_tree(node) -> sp.Expr:
    if "num" in node:
        return sp.Rational(node["num"])
    if "sym" in node:
        return symbol(node["sym"])
    if "apply" in node:
        arg = from_json_tree(node["arg"])
        base = FUNCTIONS[node["apply"]](u)
        d = sp.diff(base, u, node["order"]) if node["order"] else base
        return d if arg == u else d.subs(u, arg)
    if "fn" in node:
        return _ELEMENTARY[node["fn"]](from_json_tree(node["arg"]))
    args = [from_json_tree(a) for a in node["args"]]
    if node["op"] == "add":
        return sp.Add(*args)
    if node["op"] == "mul":
        return sp.Mul(*args)
    return sp.Pow(*args)


def to_string(e, format: str = "plain") -> str:
    """Render an expression as ``plain``, ``latex`` or ``json``."""
    if format == "plain":
        return to_plain(e)
    if format == "latex":
        return to_latex(e)
    if format == "json":
        return json.dumps(to_json_tree(e), sort_keys=True)
    raise ValueError(f"unknown format {format!r}")
