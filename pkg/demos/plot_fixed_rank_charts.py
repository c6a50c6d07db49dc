r"""
Charts on fixed-rank matrices
=============================

A rank-``r`` matrix ``A`` is written ``(U + U_perp X) H (V + V_perp Y)^T``.
The chart is built from ``U`` and ``V`` alone, so the middle factor of the
point it is centred at plays no role.
"""

import numpy as np

from matbundle import FixedRankChart, RankRPoint, random_full_rank, random_rank_r

n, m, r = 9, 7, 2
rng = np.random.default_rng(5)
a = random_rank_r(n, m, r, rng)

p = RankRPoint.from_matrix(a, r)
chart = FixedRankChart.at(p)
print("manifold dimension:", chart.dimension, "=", (n + m - r) * r)

coords = chart.apply(p.matrix)
print("centre has X = 0:", np.allclose(coords.X, 0), " Y = 0:", np.allclose(coords.Y, 0))

# a different point in the same chart
b = random_rank_r(n, m, r, rng)
cb = chart.apply(b)
print("round trip:", np.linalg.norm(chart.inverse(cb) - b) / np.linalg.norm(b))

###############################################################################
# Centre a second chart at ``U G' V^T`` for an unrelated invertible ``G'``.
# It reads off bit-identical coordinates for ``b``.

q = RankRPoint(p.U, random_full_rank(r, r, rng), p.V)
other = FixedRankChart.at(q)
print("different point:", not np.allclose(q.matrix, p.matrix))
print("bitwise equal coordinates:", all(np.array_equal(u, v) for u, v in zip(other.apply(b)[:3], cb[:3])))

###############################################################################
# The tangent maps at the centre.  ``pull o push`` is the identity on
# coordinates; ``push o pull`` projects an ambient matrix onto the tangent
# space, dropping the part that lies in ``U_perp (.) V_perp^T``.

xd = rng.standard_normal((n - r, r))
yd = rng.standard_normal((m - r, r))
hd = rng.standard_normal((r, r))
back = chart.tangent_pull(p.G, chart.tangent_push(p.G, (xd, yd, hd)))
print("pull o push:", all(np.allclose(u, v) for u, v in zip(back, (xd, yd, hd))))

z = rng.standard_normal((n, m))
proj = chart.tangent_push(p.G, chart.tangent_pull(p.G, z))
normal = chart.U_perp @ chart.U_perp.T @ z @ chart.V_perp @ chart.V_perp.T
print("push o pull is the tangent projection:", np.allclose(proj, z - normal))
