r"""
The non-compact Stiefel manifold as a bundle
============================================

Full-rank ``k x r`` matrices fibre over the Grassmannian: ``W`` lies above
``col(W)`` and the fibre is a copy of ``GL_r``.  The chart ``(X, G)`` splits
a matrix into a base coordinate and a fibre coordinate.
"""

import numpy as np

from matbundle import StiefelChart, bundle_project, random_full_rank

k, r = 6, 2
rng = np.random.default_rng(11)
chart = StiefelChart.at(random_full_rank(k, r, rng))
w = random_full_rank(k, r, rng)

x, g = chart.apply(w)
print("base coordinate", x.shape, "fibre coordinate", g.shape)
print("reconstruction error:", np.linalg.norm(chart.inverse((x, g)) - w))

# right multiplication by GL_r moves along the fibre and leaves X alone
a = random_full_rank(r, r, rng)
x_a, g_a = chart.apply(w @ a)
print("X unchanged:", np.allclose(x_a, x), " G picks up the factor:", np.allclose(g_a, g @ a))
print("same base point:", bundle_project(w @ a) == bundle_project(w))

###############################################################################
# Tangent vectors split the same way.  Pushing ``(Xdot, Gdot)`` forward and
# pulling back recovers them; the differential matches a difference quotient.

xd, gd = rng.standard_normal(x.shape), rng.standard_normal(g.shape)
zdot = chart.tangent_push((xd, gd))
back = chart.tangent_pull(zdot)
print("pull o push:", np.allclose(back[0], xd) and np.allclose(back[1], gd))

h = 1e-6
fd = (chart.inverse((x + h * xd, g + h * gd)) - chart.inverse((x - h * xd, g - h * gd))) / (2 * h)
print("differential vs finite difference:", np.linalg.norm(fd - chart.differential((x, g), (xd, gd))))

horizontal, vertical = chart.tangent_split(zdot)
print("split recombines:", np.allclose(horizontal + vertical, zdot))
