"""Hypothesis strategies for well-conditioned random instances."""
import numpy as np
from hypothesis import strategies as st

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def grassmann_dims(draw, max_k=10):
    k = draw(st.integers(2, max_k))
    r = draw(st.integers(1, k - 1))
    return k, r


@st.composite
def fixed_rank_dims(draw, max_dim=9):
    n = draw(st.integers(2, max_dim))
    m = draw(st.integers(2, max_dim))
    r = draw(st.integers(1, min(n, m) - 1))
    return n, m, r


def gaussian(rng, *shape):
    return np.random.default_rng(rng).standard_normal(shape)


def well_conditioned(rng, r):
    rng = np.random.default_rng(rng)
    p, _ = np.linalg.qr(rng.standard_normal((r, r)))
    q, _ = np.linalg.qr(rng.standard_normal((r, r)))
    return p @ np.diag(rng.uniform(0.5, 2.0, r)) @ q.T
