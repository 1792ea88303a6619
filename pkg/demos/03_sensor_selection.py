"""
Cheapest sensor set for a guaranteed MSE
========================================

At a query point we want the MSE below a bound while paying as little as
possible: 150 per precise sensor, 30 per thresholded one. The cross-entropy
method searches activation masks; with 15 sensors exhaustive search is still
affordable, so the two can be compared directly.
"""

from hetsense import CemConfig, Infeasible, KernelSpec, MeanSpec, Prior, SelectionProblem
from hetsense import brute_force_select, cem_select
from hetsense.config import DEFAULT_REGION, NetworkParams
from hetsense.experiments import synthetic_array
from hetsense.selection import achieved_mse

prior = Prior(MeanSpec(), KernelSpec(5.8, 10.0))
arr = synthetic_array(NetworkParams(), 5, 10, *DEFAULT_REGION, seed=12)
print("sensors:", arr.ids)

for qos in (3.4, 3.8, 4.2):
    problem = SelectionProblem((10.0, 50.0), qos, arr, prior)
    mask, best = brute_force_select(problem)
    try:
        state, trace = cem_select(problem, CemConfig(seed=1))
    except Infeasible as exc:
        print(f"qos {qos}: infeasible ({exc})")
        continue
    print(f"\nqos {qos}: optimum cost {-best:.0f}, CEM cost {-state.best_utility:.0f}")
    for t in trace:
        print(f"  iter {t.iter:2d}  beta {t.beta:8.1f}  best U {t.best_utility:8.1f}  p in [{t.p_min:.2f}, {t.p_max:.2f}]")
    chosen = [i for i, m in zip(arr.ids, state.best_mask) if m]
    print(f"  chosen {chosen}, mse {achieved_mse(problem, state.best_mask):.3f} < {qos}")
