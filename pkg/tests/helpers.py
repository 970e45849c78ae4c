"""Shared constructors for the test suite."""

import numpy as np

from rvqlab.channel import ChannelRealization


def complex_gaussian(rng, shape):
    g = rng.standard_normal(tuple(shape) + (2,))
    return g[..., 0] + 1j * g[..., 1]


def random_channel(rng, n_r, n_t):
    return ChannelRealization(complex_gaussian(rng, (n_r, n_t)))


def random_full_rank(rng, n, cond_floor=1e-3):
    # redraw until comfortably away from the singular guard
    while True:
        a = complex_gaussian(rng, (n, n))
        sv = np.linalg.svd(a, compute_uv=False)
        if sv[-1] > cond_floor * sv[0]:
            return a


def diag_channel(lam):
    """Channel realization whose gram is diag(lam)."""
    root = np.sqrt(np.asarray(lam, dtype=float))
    return ChannelRealization(np.diag(root).astype(complex))
