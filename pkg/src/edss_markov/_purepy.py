"""Pure numpy implementation of the simulation kernels.

Mirrors ``_kernels.pyx`` exactly; used when the compiled extension is not
available or ``EDSS_MARKOV_PURE=1`` is set.
"""

import numpy as np

from . import rng


def _pick(cum_rows, u):
    # index of the first cumulative probability exceeding u, row by row
    return (u[:, None] >= cum_rows).sum(axis=1)


def simulate_panel(cum_init, cum_mats, hazard, n, seed, offset=0, stream=rng.STREAM_SIMULATE):
    """Walk ``n`` subjects through the chain.

    Parameters
    ----------
    cum_init : (G,) cumulative initial distribution
    cum_mats : (K, G, G) cumulative rows of the per-interval matrices
    hazard : (K, G) dropout probability before each interval, by current group
    n : number of subjects; subject ``i`` uses counter index ``offset + i``

    Returns
    -------
    int8 array (n, K + 1); -1 after dropout.
    """
    cum_init = np.ascontiguousarray(cum_init, dtype=np.float64)
    cum_mats = np.ascontiguousarray(cum_mats, dtype=np.float64)
    hazard = np.ascontiguousarray(hazard, dtype=np.float64)
    k_steps = cum_mats.shape[0]
    out = np.full((n, k_steps + 1), -1, dtype=np.int8)
    if n == 0:
        return out
    idx = np.arange(offset, offset + n, dtype=np.uint64)
    u1, _ = rng.uniform_pairs(seed, 0, stream, idx)
    state = _pick(np.broadcast_to(cum_init, (n, cum_init.size)), u1)
    out[:, 0] = state
    alive = np.ones(n, dtype=bool)
    for s in range(1, k_steps + 1):
        u1, u2 = rng.uniform_pairs(seed, s, stream, idx)
        alive &= ~(u2 < hazard[s - 1, np.where(alive, state, 0)])
        nxt = _pick(cum_mats[s - 1, np.where(alive, state, 0)], u1)
        state = np.where(alive, nxt, state)
        out[alive, s] = state[alive]
    return out
