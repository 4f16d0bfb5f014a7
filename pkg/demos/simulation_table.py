"""A quick version of the simulation table.

Uses few replications and bootstrap samples so it finishes in about a
minute. The noise level is an argument: sigma = 3 with an orthonormal design
gives OLS errors near p * 9, while sigma = 1/sqrt(50) lands on the scale of
the published table.
"""

import argparse

import numpy as np

from panreg import SimulationConfig, emit_table, run_study

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--sigma", type=float, default=1 / np.sqrt(50))
parser.add_argument("--replications", type=int, default=20)
parser.add_argument("--B", type=int, default=200)
args = parser.parse_args()

reports = [run_study(SimulationConfig(p=6, beta_value=b, sigma=args.sigma,
                                      replications=args.replications, B=args.B))
           for b in (0.05, 0.10, 0.15, 0.20)]
print(emit_table(reports))
