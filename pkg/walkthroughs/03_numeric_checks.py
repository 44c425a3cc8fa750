"""Numeric cross-checks of the Example 4 solution.

Run: python walkthroughs/03_numeric_checks.py
"""

import numpy as np

from lie_reduce.equivalence import classify, projected_basis
from lie_reduce.fixtures import FixtureSet
from lie_reduce.reduction import convergence_order, integrate_numeric, match_ansatz, reduce

case = FixtureSet.load().case(4)
member, X3 = classify(projected_basis().combine(list(case.Z)))
eq = member.equation()
R = reduce(eq, match_ansatz(X3))
params = {"c0": 0, "c2": 1, "c3": 1, "c4": 1, "c5": 1}

# RK45 against h(z) = z/2 + log(z)/z
exact = lambda z: z / 2 + np.log(z) / z  # noqa: E731
traj = integrate_numeric(R, {"h": exact(1.0)}, (1.0, 2.0), params=params)
zz = np.linspace(1, 2, 11)
print("max ODE error:", np.max(np.abs(traj.dense(zz)[0] - exact(zz))))

# Finite-difference residual of u(t, x) = t/2 + (x + log t)/t
U = lambda T, X: T / 2 + (X + np.log(T)) / T  # noqa: E731
hs = [1 / 32, 1 / 64, 1 / 128, 1 / 256]
res, orders = convergence_order(eq, U, (1.0, 2.0), (0.0, 1.0), hs, params)
for h, r in zip(hs, res):
    print(f"h = 1/{round(1 / h):<4d} residual {r:.3e}")
print("observed orders:", [round(p, 3) for p in orders])
