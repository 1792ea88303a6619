"""
More sensors, lower error
=========================

Grid-mean MSE as either network grows while the other stays at ten sensors,
averaged over a few random deployments. Adding precise sensors pays off much
faster than adding thresholded ones.
"""

import numpy as np

from hetsense import GridSpec, KernelSpec, MeanSpec, Prior
from hetsense.config import NetworkParams
from hetsense.experiments import mse_vs_counts

prior = Prior(MeanSpec(), KernelSpec(5.8, 10.0))
grid = GridSpec((0, 60), (20, 80), 15, 15)
counts = [5, 10, 20, 40]
rows = mse_vs_counts(prior, NetworkParams(), counts, fixed=10, seeds=5, grid=grid, seed=2015)

for sweep in ("high", "low"):
    print(f"growing the {sweep}-quality network:")
    for c in counts:
        sel = [r for r in rows if r["sweep"] == sweep and r[f"n_{sweep}"] == c]
        mse = np.mean([r["grid_mean_mse"] for r in sel])
        err = np.mean([r["grid_mean_sq_error"] for r in sel])
        print(f"  {c:3d} sensors: analytic {mse:.3f}   simulated {err:.3f}")
