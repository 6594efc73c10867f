"""Invariant sets versus Lyapunov level sets on dx/dt = -x + x^3.

The equilibria at +-1 bound the region of attraction (-1, 1). Both the
general conditions and the classical level-set configuration should stop
just below gamma = 1 for R = x^2.
"""

import numpy as np

from attrakt import parse_system
from attrakt.roa import algorithm3, step1_feasible, step1_maximize_gamma
from attrakt.sysparse import RunConfig, parse_polynomial

sys_ = parse_system("vars: x\ndot x = -x + x^3\n")
R = parse_polynomial("x^2", ["x"])
cfg = RunConfig(deg_VN=2, gamma_lo=0.1)

res = step1_maximize_gamma(sys_, R, cfg)
print(f"largest certified level for R = x^2: gamma = {res.gamma:.6f}")
print(f"  V_N = {res.V_N.to_text(['x'])}")
print(f"  p   = {res.p.to_text(['x'])}")

# feasibility answers of both configurations around the threshold
for g in (0.5, 0.9, 0.999, 1.1):
    general = step1_feasible(sys_, R, g, cfg) is not None
    level_set = step1_feasible(sys_, R, g, cfg, level_set=True) is not None
    print(f"gamma = {g:<6} general: {'feasible' if general else 'infeasible':<10} "
          f"level set: {'feasible' if level_set else 'infeasible'}")

# the full iteration seeds with R0 = x^2/2 from the linearization, so its
# levels are half as large; in x it cannot do better than the interval (-1, 1)
certs = algorithm3(sys_, cfg)
print("gamma trace:", ", ".join(f"{c.gamma:.5f}" for c in certs))
final = certs[-1]
xs = np.linspace(0.0, 1.5, 150001)[:, None]
edge = xs[final.R.evaluate(xs) <= final.gamma].max()
print(f"final R = {final.R.to_text(['x'])}, certified interval |x| <= {edge:.4f}")
