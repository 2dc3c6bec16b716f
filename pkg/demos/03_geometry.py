"""
Geometry behind the sample complexity
=====================================

The error bounds are driven by Gaussian widths of tangent cones and by
Gaussian squared distances to scaled subdifferentials. Here the closed-form
upper bounds are set against Monte Carlo estimates.
"""

import math

import numpy as np

from dithercs import L1Norm, NuclearNorm, StructureSpec
from dithercs.geometry import (
    eta2_bound_closed_form,
    geometry_report,
    mc_eta2_l1,
    mc_gaussian_complexity_ball,
    mc_tangent_width_l1,
    width_bound_closed_form,
)

# %% Width of the l1 tangent cone at a 5-sparse point.
for n in (128, 256, 512):
    signs = np.zeros(n)
    signs[:5] = 1
    mc = mc_tangent_width_l1(signs, samples=5_000, seed=n)
    bound = width_bound_closed_form(StructureSpec.sparse(n, 5))
    print(f"n={n:4d}  MC omega^2={mc.mean**2:6.2f}  closed form {bound:6.2f}")

# %% Squared distance to lam * subdifferential, just above the validity threshold.
spec = StructureSpec.sparse(256, 5)
signs = np.zeros(256)
signs[:5] = 1
for lam in (2.85, 3.33, 4.5):
    est = mc_eta2_l1(signs, lam, samples=5_000, seed=3)
    print(f"lam={lam:4.2f}  MC eta^2={est.mean:6.2f}  closed form {eta2_bound_closed_form(spec, lam):6.2f}")

# %% Complexity of unit balls.
print("gamma(B1^256)        ", round(mc_gaussian_complexity_ball(L1Norm(), 256, 5_000).mean, 3),
      " vs sqrt(2 ln 256) =", round(math.sqrt(2 * math.log(256)), 3))
print("gamma(nuclear, d=16) ", round(mc_gaussian_complexity_ball(NuclearNorm(16), 256, 500).mean, 3),
      " vs 2 sqrt(d) = 8")

# %% One report bundles it all for a problem size.
rep = geometry_report(spec, StructureSpec.sparse(500, 5), m=500, delta=0.1, epsilon=0.0, samples=2_000)
for key, val in rep.as_dict().items():
    print(f"  {key:<20} {val:.4f}")
