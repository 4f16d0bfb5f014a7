"""How the PAN shrinkage factor depends on the angle to x0.

Prints the factor multiplying the OLS prediction for a grid of cosine
similarities. Positive angle penalties shrink most where x0 is nearly
orthogonal to the estimate; negative ones expand the prediction there.
"""

import numpy as np

from panreg import shrinkage_factor

cos = np.linspace(-1, 1, 9)
print("cos_sim " + " ".join(f"{c:6.2f}" for c in cos))
for l1 in (0.0, 0.5):
    for l2 in (-0.5, 0.25, 0.5, 0.75):
        f = shrinkage_factor(cos, 1.0, l1, l2)
        print(f"l1={l1:<3} l2={l2:<5}" + " ".join(f"{v:6.3f}" for v in f))

# past |beta|^2 a vector orthogonal to x0 beats the estimate itself, so the
# factor falls to zero at |cos| = 1
print("l2 = 2, |beta| = 1:", np.round(shrinkage_factor(cos, 1.0, 0.0, 2.0), 3))
