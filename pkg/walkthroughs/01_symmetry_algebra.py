"""From the equivalence algebra to the optimal-system normalizer.

Run: python walkthroughs/01_symmetry_algebra.py
"""

from lie_reduce import expr as E
from lie_reduce.cli import Report, emit, suite_tables
from lie_reduce.equivalence import (
    ClassMember,
    equivalence_basis,
    equivalence_transformation,
    principal_algebra,
    projected_basis,
    verify_class_preservation,
)
from lie_reduce.fixtures import FixtureSet
from lie_reduce.lie import normalize_element

# Ten equivalence generators act on (t, x, u, f, g, alpha, beta, gamma, phi).
for label, Y in zip(equivalence_basis().labels, equivalence_basis()):
    print(f"{label:>3} = {Y.to_string()}")

# The closed-form group element, with every parameter left symbolic.
T = equivalence_transformation(E.epsilons[1:])
for coord in (E.t, E.x, E.u, E.FIBER["f"], E.FIBER["phi"]):
    print(f"{coord} -> {E.to_string(T[coord])}")

# It maps the class to itself: the residual against the original equation is 0.
print("preservation residual:", verify_class_preservation(T, ClassMember.opaque()))

# Only translations survive for arbitrary elements.
P = principal_algebra()
print("principal algebra:", ", ".join(V.to_string() for V in P.basis))

# Projections onto (u, f, ..., phi) give Z1..Z8 and their tables.
print(emit(suite_tables(FixtureSet.load(), compare=True), "plain"))

# Bring Z4 + 5 Z1 to a representative of its adjoint orbit.
r = normalize_element([5, 0, 0, 1, 0, 0, 0, 0], projected_basis())
print(r.label, r.element, r.transcript)
