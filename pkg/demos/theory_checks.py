"""Small-penalty theory under X'X = n I, checked by simulation.

The sign of the helpful angle penalty flips at |cos| = 1/2 (no ridge) and at
the ridge crossover lambda1*. The Monte-Carlo curve confirms the sign.
"""

import numpy as np

from panreg import TheoryInstance, lambda1_star, mc_mse_curve, mse_derivative_at_zero, proportion_within

for p in (2, 3, 6, 15, 30):
    print(f"p = {p:2d}: P(|cos| < 1/2) = {proportion_within(0.5, p):.3f}")

for cos in (0.2, 0.8):
    x0 = np.array([1.0, 0.0])
    beta = np.array([cos, np.sqrt(1 - cos ** 2)])
    inst = TheoryInstance(x0, beta, sigma=1.0, n=400)
    print(f"cos {cos}: slope at 0 = {mse_derivative_at_zero(inst):+.2e}, "
          f"lambda1* = {lambda1_star(x0, beta, 1.0):.2f}")
    grid = [-10.0, -2.0, 2.0, 10.0]
    curve = mc_mse_curve(inst, grid, 200_000, seed=3)
    for l2, d, se in zip(grid, curve.diff_vs_zero, curve.diff_se):
        print(f"   lambda2 {l2:+5.1f}: MSE change {d:+.2e} +- {se:.1e}")
