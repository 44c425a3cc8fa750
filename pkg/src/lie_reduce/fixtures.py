"""Loading of the stored reference data (tables, optimal system, worked cases).

The JSON files are transcriptions of published results and are never
regenerated from the code that they check.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import sympy as sp

from . import expr as E
from .errors import FixtureError, ParseError

ENV_VAR = "LIE_REDUCE_FIXTURES"
DEFAULT_DIR = Path(__file__).with_name("data")
LABELS = tuple(f"Z{k}" for k in range(1, 9))
_LABEL_SYMBOLS = {name: sp.Symbol(name) for name in LABELS}


def fixture_dir(override=None) -> Path:
    if override:
        return Path(override)
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else DEFAULT_DIR


def _parse(text, where, extra=None):
    try:
        return E.parse(str(text), {**_LABEL_SYMBOLS, **(extra or {})})
    except ParseError as err:
        raise FixtureError(f"{where}: {err}") from err


def label_vector(text, where="") -> list:
    """Coefficient vector of a linear combination of Z1..Z8."""
    e = _parse(text, where)
    vec = [E.normalize(sp.diff(e, _LABEL_SYMBOLS[n])) for n in LABELS]
    rest = E.normalize(e - sum(c * _LABEL_SYMBOLS[n] for c, n in zip(vec, LABELS)))
    if rest != 0 or any(v.has(*_LABEL_SYMBOLS.values()) for v in vec):
        raise FixtureError(f"{where}: {text!r} is not linear in Z1..Z8")
    return vec


@dataclass(frozen=True)
class Representative:
    label: str
    text: str
    vector: tuple
    parameters: tuple
    constraints: tuple

    def violations(self, values) -> list:
        """Constraint strings violated by the parameter values (a dict of Symbols)."""
        out = []
        for con in self.constraints:
            lhs, rhs = (E.parse(s) for s in con.split("!="))
            if E.normalize(E.substitute(lhs - rhs, values)) == 0:
                out.append(con)
        return out

    def instantiate(self, values) -> list:
        return [E.substitute(c, values) for c in self.vector]


@dataclass(frozen=True)
class CaseBundle:
    case: int
    representative: str
    values: dict
    Z: tuple
    member: dict
    equation: sp.Expr
    X3: str
    ansatz: dict
    ode: sp.Expr
    subode: sp.Expr | None
    solutions: list
    unsolved: str = ""


@dataclass
class FixtureSet:
    table1: list
    table2: list
    representatives: list
    cases: list
    source: Path = field(default=DEFAULT_DIR)

    @classmethod
    def load(cls, directory=None) -> "FixtureSet":
        root = fixture_dir(directory)
        raw = {}
        for name in ("table1", "table2", "optimal_system", "cases"):
            path = root / f"{name}.json"
            try:
                raw[name] = json.loads(path.read_text())
            except FileNotFoundError as err:
                raise FixtureError(f"missing fixture {path}") from err
            except json.JSONDecodeError as err:
                raise FixtureError(f"corrupt fixture {path}: {err}") from err
        try:
            out = cls(
                _table(raw["table1"], "table1"),
                _table(raw["table2"], "table2"),
                [_representative(r) for r in raw["optimal_system"]["representatives"]],
                [_case(c) for c in raw["cases"]["cases"]],
                root,
            )
        except (KeyError, TypeError) as err:
            raise FixtureError(f"malformed fixture in {root}: {err}") from err
        if len(out.representatives) != 34:
            raise FixtureError(f"expected 34 representatives, found {len(out.representatives)}")
        return out

    def representative(self, label) -> Representative:
        key = canonical_label(label)
        for r in self.representatives:
            if r.label == key:
                return r
        raise FixtureError(f"no representative {label!r}")

    def case(self, k) -> CaseBundle:
        for c in self.cases:
            if c.case == int(k):
                return c
        raise FixtureError(f"no case {k}")


def canonical_label(label: str) -> str:
    """'Z3', 'Z(3)' and 'Z^(3)' all name the representative Z^(3)."""
    s = label.strip().replace("^", "").replace("(", "").replace(")", "")
    if not (s.startswith("Z") and s[1:].isdigit()):
        raise FixtureError(f"bad representative label {label!r}")
    return f"Z^({int(s[1:])})"


def _table(data, where):
    entries = data["entries"]
    if len(entries) != 8 or any(len(row) != 8 for row in entries):
        raise FixtureError(f"{where}: expected an 8x8 table")
    return [[label_vector(cell, f"{where}[{i + 1}][{j + 1}]") for j, cell in enumerate(row)]
            for i, row in enumerate(entries)]


def _representative(r):
    vec = label_vector(r["element"], r["label"])
    return Representative(r["label"], r["element"], tuple(vec), tuple(r["parameters"]), tuple(r["constraints"]))


def _case(c):
    where = f"case {c['case']}"
    sols = []
    for s in c["solutions"]:
        extra = {n: sp.Symbol(n) for n in s.get("symbols", [])}
        entry = {"tag": s["tag"]}
        for key in ("h", "u", "relation"):
            if key in s:
                entry[key] = _parse(s[key], where, extra)
        entry["given"] = {E.symbol(k): _parse(v, where) for k, v in s.get("given", {}).items()}
        entry["reading"] = {extra[k]: _parse(v, where) for k, v in s.get("reading", {}).items()}
        sols.append(entry)
    return CaseBundle(
        case=int(c["case"]),
        representative=c["representative"],
        values={E.symbol(k): _parse(v, where) for k, v in c["values"].items()},
        Z=tuple(label_vector(c["Z"], where)),
        member={k: _parse(v, where) for k, v in c["member"].items()},
        equation=_parse(c["equation"], where),
        X3=c["X3"],
        ansatz={"z": _parse(c["ansatz"]["z"], where), "u": _parse(c["ansatz"]["u"], where),
                "domain": c["ansatz"].get("domain", "")},
        ode=_parse(c["ode"], where),
        subode=_parse(c["subode"], where) if c.get("subode") else None,
        solutions=sols,
        unsolved=c.get("unsolved", ""),
    )
