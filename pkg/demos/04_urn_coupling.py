#!/usr/bin/env python3
"""Couple two runs that differ only in where vertex tau landed.

Both processes share their history before tau, place vertex tau
independently, then see identical arrival positions. Each step draws
the endpoints of both graphs jointly through a pair of weighted urns
whose marginals are the exact attachment laws; a draw that cannot be
kept in common is a mismatch. The running mismatch count grows like
(sigma / tau) ** a with a = m / (alpha * Theta), far slower than the
m * (sigma - tau + 1) draws made, which is what makes the degree
sequence concentrate.
"""

import numpy as np

from gpaf import ConstantKernel, ProcessParams, replica_seed
from gpaf.coupling import mismatch_growth_fit, run_coupled
from gpaf.theory import degree_growth_exponent

N, M, ALPHA, TAU = 20_000, 2, 4.0, 20
REPLICAS = 20

params = ProcessParams(n=N, m=M, alpha=ALPHA, delta=0.0,
                       kernel=ConstantKernel(), seed=11)
a = degree_growth_exponent(M, ALPHA, 0.0)
print(f"n={N}, m={M}, alpha={ALPHA}, perturbation at tau={TAU}; "
      f"predicted exponent a = {a:.3f}")

runs = []
for r in range(REPLICAS):
    cr = run_coupled(params.with_seed(replica_seed(params.seed, r)), TAU)
    runs.append(cr)
print(f"{REPLICAS} coupled pairs grown; final mismatch counts: "
      f"{sorted(cr.final() for cr in runs)}")

grid = np.unique(np.round(np.geomspace(TAU, N, 12)).astype(int))
mean = np.zeros(grid.size)
for cr in runs:
    mean += cr.mismatches[grid - TAU]
mean /= len(runs)
print("\n sigma    mean mismatches    m*(sigma-tau+1)")
for s, v in zip(grid, mean):
    print(f"{s:6d}    {v:11.2f}      {M * (s - TAU + 1):12d}")

fit = mismatch_growth_fit(runs, params)
print(f"\nfitted growth exponent {fit.slope:.3f} "
      f"(95% CI {fit.ci95[0]:.3f}..{fit.ci95[1]:.3f}); "
      f"bound a = {a:.3f} plus slack, and well below 1.")
