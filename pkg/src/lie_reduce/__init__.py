"""Symbolic Lie analysis of the generalized Kuramoto-Sivashinsky class

    u_t + f(u)_x + alpha(u) u_xx + phi(u)_xx + beta(u) u_xxx + gamma(u) u_xxxx = g(u)

covering the equivalence algebra and group, the commutator and adjoint
tables of the projected algebra, preliminary group classification and
similarity reductions to ODEs.
"""

from .errors import *  # noqa: F401,F403
from .expr import normalize, parse, to_string
from .lie import (
    UNRESOLVED,
    AlgebraBasis,
    VectorField,
    adjoint,
    adjoint_table,
    bracket,
    commutator_table,
    normalize_element,
)
from .jet import EquationInstance, check_symmetry, prolong, total_derivative
from .equivalence import (
    ClassMember,
    classify,
    equivalence_basis,
    equivalence_transformation,
    exponentiate,
    principal_algebra,
    projected_basis,
    verify_class_preservation,
)
from .reduction import (
    integrate_numeric,
    match_ansatz,
    pde_residual_numeric,
    reduce,
    solve_closed_form,
    substitute_w,
    verify_solution,
)

__all__ = [
    "normalize", "parse", "to_string",
    "UNRESOLVED", "AlgebraBasis", "VectorField", "adjoint", "adjoint_table", "bracket",
    "commutator_table", "normalize_element",
    "EquationInstance", "check_symmetry", "prolong", "total_derivative",
    "ClassMember", "classify", "equivalence_basis", "equivalence_transformation", "exponentiate",
    "principal_algebra", "projected_basis", "verify_class_preservation",
    "integrate_numeric", "match_ansatz", "pde_residual_numeric", "reduce", "solve_closed_form",
    "substitute_w", "verify_solution",
]
