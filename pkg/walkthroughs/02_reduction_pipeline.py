"""Classify, reduce and solve the four invariant members.

Run: python walkthroughs/02_reduction_pipeline.py
"""

from lie_reduce import expr as E
from lie_reduce.equivalence import classify, projected_basis
from lie_reduce.fixtures import FixtureSet
from lie_reduce.reduction import match_ansatz, reduce, solve_closed_form, substitute_w, verify_solution

F = FixtureSet.load()
for case in F.cases:
    Z = projected_basis().combine(list(case.Z))
    member, X3 = classify(Z)
    print(f"\ncase {case.case}: Z = {Z.to_string()}")
    print("  f =", E.to_string(member.f), " gamma =", E.to_string(member.gamma))
    print("  extra symmetry:", X3.to_string())

    A = match_ansatz(X3)
    R = reduce(member.equation(), A)
    print(f"  z = {E.to_string(A.z)}, u = {E.to_string(A.shape)}")
    print("  reduced:", R, " multiplier", E.to_string(R.multiplier))

    if R.order >= 2 and not R.lhs.has(E.z):
        print("  w = h'^2:", substitute_w(R))

    S = solve_closed_form(R if case.case != 3 else R.subs({E.c[6]: 0}))
    if S.solved:
        target = R if case.case != 3 else R.subs({E.c[6]: 0})
        form = S.explicit if S.explicit is not None else S.implicit
        print(f"  {S.tag}: {E.to_string(form)}  (residual {verify_solution(S, target)})")
    else:
        print("  no closed form:", S.reason)
