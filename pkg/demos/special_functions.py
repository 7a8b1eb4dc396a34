"""Lambert W, the Chernoff exponent D_gamma and the curve-intersection solver.

Run:  python demos/special_functions.py
"""

import math

import numpy as np

from gtlab.special import d_gamma, d_gamma_inverse, intersection_solve, lambert_w0, lambert_w_m1

# Both real branches meet at x = -1/e, where W = -1.
x = np.array([-1 / math.e, -0.3, -0.1, -1e-3])
print("x          W0(x)        W-1(x)")
for xi, a, b in zip(x, lambert_w0(x), lambert_w_m1(x)):
    print(f"{xi:<10.4g} {a:<12.8f} {b:.8f}")

# D_gamma(t) = t log(t/gamma) - t + gamma is the exponent in Poisson/binomial
# tail bounds: it is zero at t = gamma and grows on either side.
gamma = 0.4
ts = np.linspace(0, 1.2, 7)
print("\nD_0.4(t):", np.round(d_gamma(gamma, ts), 4))

# Inverting it gives the threshold at which a tail probability decays at a chosen rate.
for y in (0.05, 0.2):
    lo, hi = d_gamma_inverse(gamma, y, upper=False), d_gamma_inverse(gamma, y)
    print(f"D = {y}: t in ({lo:.5f}, {hi:.5f})")

# Where does D_g1(t) = c D_g2(t) - d cross between g1 and g2?  The solver uses
# a closed form through Lambert W and reports when no crossing exists.
for args in [(0.5, 1.0, 1.0, 0.0), (0.2, 0.9, 2.0, 0.1), (0.5, 1.0, 0.1, 1.0)]:
    sol = intersection_solve(*args)
    where = f"t* = {sol.t_star:.10f} via {sol.method}" if sol.has_root else f"no root, min gap {sol.min_value:.5f}"
    print(f"g1={args[0]}, g2={args[1]}, c={args[2]}, d={args[3]}: {where}")
