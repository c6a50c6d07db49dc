r"""
Best rank-r approximation by descent in charts
==============================================

Minimise ``0.5 ||W - A||_F^2`` over rank-``r`` matrices ``W``.  Each step is
taken in chart coordinates, after which the chart is recentred at the new
iterate.  The minimiser is the truncated SVD, which we use as a check.
"""

import numpy as np

from matbundle import OptimizerConfig, distance_objective, minimize, random_start, truncated_svd

n, m, r = 20, 15, 3
a = np.random.default_rng(0).standard_normal((n, m))

start = random_start(a, r, seed=1)
point, trace = minimize(start, distance_objective(a), OptimizerConfig())

best = truncated_svd(a, r)
print("iterations:", trace.iterations, " converged:", trace.converged)
print("relative error vs SVD: %.2e" % (np.linalg.norm(point.matrix - best) / np.linalg.norm(best)))
print("objective: %.6f  (optimum %.6f)" % (trace.values[-1], 0.5 * np.linalg.norm(a - best) ** 2))

# a coarse view of the trace
for rec in trace.records[:: max(1, len(trace.records) // 8)]:
    print("%4d  f=%.6e  |grad|=%.2e  sigma ratio=%.2e" % (rec.iter, rec.f, rec.grad_norm, rec.boundary_sigma_ratio))

###############################################################################
# Plain steepest descent is also available, at the price of many more steps.
_, slow = minimize(start, distance_objective(a), OptimizerConfig(method="gd", max_iters=200))
print("gradient descent after 200 steps: f=%.6e |grad|=%.2e" % (slow.values[-1], slow.records[-1].grad_norm))
