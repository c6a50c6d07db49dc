r"""
Charts on the Grassmannian
==========================

A chart centred at ``col(Z)`` sends an ``r``-dimensional subspace of ``R^k``
to a ``(k - r) x r`` matrix.  Here we move a subspace around between two
charts and look at the additive group structure that a chart induces.
"""

import numpy as np

from matbundle import GrassmannChart, Subspace, random_full_rank

k, r = 7, 2
rng = np.random.default_rng(3)

chart = GrassmannChart.at(random_full_rank(k, r, rng))
s = Subspace(random_full_rank(k, r, rng))
print("chart dimension:", chart.dimension)

# coordinates and back
x = chart.apply(s)
print("coordinates have shape", x.shape)
print("round trip distance:", chart.inverse(x).distance(s))

# a second chart sees the same subspace through the transition map
other = GrassmannChart.at(random_full_rank(k, r, rng))
x2 = chart.transition(other, x)
print("transition agrees with direct evaluation:", np.allclose(x2, other.apply(s)))

###############################################################################
# Adding coordinates defines a group with identity ``col(Z)``.  The map to
# ``GL_k`` goes through a matrix exponential that is exactly ``I + N``
# because ``N = Z_perp X Z^+`` squares to zero.

t = Subspace(random_full_rank(k, r, rng))
n = chart.algebra_element(chart.apply(t))
print("|N @ N| =", np.linalg.norm(n @ n))

lhs = chart.gamma(chart.group_op(s, t))
rhs = chart.gamma(s) @ chart.gamma(t)
print("gamma is a homomorphism:", np.allclose(lhs, rhs))
print("s * s^-1 is the identity:", chart.group_op(s, chart.group_inverse(s)) == chart.identity)

###############################################################################
# A subspace orthogonal to the centre is not covered.
far = Subspace(chart.complement[:, :r])
print("orthogonal subspace in domain:", chart.contains(far))
