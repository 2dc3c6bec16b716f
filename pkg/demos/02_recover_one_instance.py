"""
Recovering a sparse signal under sparse corruption
==================================================

Build one dithered measurement problem, then compare three estimators:
the constrained Lasso with oracle radii, the penalized Lasso with the
default weights, and one-shot projected back projection (PBP).
"""

import math

import numpy as np

from dithercs import (
    L1Norm,
    MeasurementEnsemble,
    NoiseSpec,
    QuantizationScheme,
    StructureSpec,
    generate_ground_truth,
    linear_observe,
    observe,
    plan_lambdas,
    sample_matrix,
    sample_noise,
    solve_constrained,
    solve_pbp,
    solve_unconstrained,
)

n, m, s, k, delta = 256, 400, 5, 5, 0.1
signal, corruption = StructureSpec.sparse(n, s), StructureSpec.sparse(m, k)
truth = generate_ground_truth(signal, corruption, seed=11)
Phi = sample_matrix(MeasurementEnsemble("gaussian"), m, n, seed=12)
ybar = linear_observe(Phi, truth, sample_noise(NoiseSpec(0.0), m, seed=13))
y, _ = observe(ybar, QuantizationScheme("uniform", delta), seed=14)

l1 = L1Norm()
R1, R2 = l1.evaluate(truth.x_star), l1.evaluate(truth.v_star)


def report(name, sol):
    ex = np.linalg.norm(sol.x_hat - truth.x_star)
    ev = np.linalg.norm(sol.v_hat - truth.v_star)
    print(f"{name:<14} err_x={ex:.4f} err_v={ev:.4f} joint={math.hypot(ex, ev):.4f} iters={sol.iters}")


report("constrained", solve_constrained(Phi, y, l1, R1, l1, R2))
plan = plan_lambdas(signal, m, delta, 0.0)
print(f"lambda1={plan.lambda1:.3f} lambda2={plan.lambda2:.3f}")
report("penalized", solve_unconstrained(Phi, y, l1, l1, plan))
report("pbp", solve_pbp(Phi, y, l1, R1, l1, R2))

# %% The supports are found exactly even though every measurement was rounded.
sol = solve_constrained(Phi, y, l1, R1, l1, R2)
print("signal support   ", np.flatnonzero(truth.x_star))
print("largest estimates", np.sort(np.argsort(-np.abs(sol.x_hat))[:s]))
