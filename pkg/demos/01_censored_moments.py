"""
Moments of a thresholded Gaussian reading
=========================================

A low-quality sensor passes the field value through only when it exceeds a
threshold. Its reading is ``f 1(f >= T) + V``. Everything the estimator
needs is a handful of truncated moments of ``f``, computed here in closed
form and checked against plain Monte Carlo.
"""

import numpy as np

from hetsense import Gauss1, Gauss2, bvn_upper, cens_cross_m11, cond_linear_cross, mc_oracle
from hetsense import trunc_m0, trunc_m1, trunc_m2

# one site of a zero-mean field with variance 5.8, threshold at 0
g = Gauss1(0.0, np.sqrt(5.8))
T = 0.0
for name, fn in (("m0", trunc_m0), ("m1", trunc_m1), ("m2", trunc_m2)):
    est, se = mc_oracle(name, g, T, 1_000_000, seed=1)
    print(f"{name}: closed form {fn(g, T):.6f}   MC {est:.6f} +- {se:.6f}")

# moving the threshold sweeps the reading from "always on" to "pure noise"
for T in (-10.0, -1.0, 0.0, 1.0, 10.0):
    print(f"T={T:+5.1f}  P(active)={trunc_m0(g, T):.4f}  E[signal]={trunc_m1(g, T):+.4f}")

# two nearby sites are correlated; their censored product moment needs the
# bivariate law, evaluated by one-dimensional quadrature after whitening
pair = Gauss2(0.2, -0.1, 1.0, 1.5, 0.7)
print("P(both active)   ", bvn_upper(pair, 0.0, 0.0))
print("E[f1 f2 1 1]     ", cens_cross_m11(pair, 0.0, 0.0), mc_oracle("m11", pair, (0.0, 0.0), 1_000_000, seed=2))
print("E[f1 f2 1(f2>=0)]", cond_linear_cross(pair, 0.0), mc_oracle("cross", pair, 0.0, 1_000_000, seed=3))

# at rho = 0 the pair factorizes into univariate pieces
indep = Gauss2(0.0, 0.0, 1.0, 1.0, 0.0)
print("independent orthant:", bvn_upper(indep, 0.0, 0.0), "= 0.25")
