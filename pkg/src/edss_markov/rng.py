"""Counter-based random numbers (Philox4x32-10), vectorised with numpy.

Every random draw in the package is a pure function of ``(seed, counter)``:

* key     = (seed & 0xFFFFFFFF, seed >> 32)      for a 64-bit seed
* counter = (step, stream, index & 0xFFFFFFFF, index >> 32)

``index`` is the subject (or walk) number and ``step`` the visit/draw number,
so any subset of subjects can be generated in any order, on any number of
threads, with bit-identical results.  One Philox block yields four 32-bit
words, turned into two doubles in [0, 1) with 53 bits each
(``((w0 >> 5) * 2**26 + (w1 >> 6)) / 2**53``).

The round function and constants follow Salmon et al. (SC'11, Random123);
the known-answer vectors are checked in the test-suite.
"""

import numpy as np

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
ROUNDS = 10

# stream tags (second counter word)
STREAM_SIMULATE = 0
STREAM_SPLIT = 1
STREAM_WALK = 2

_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


def split_seed(seed):
    """Return the two 32-bit key words for a 64-bit seed."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed & 0xFFFFFFFF, seed >> 32


def philox4x32(counter, key):
    """Apply Philox4x32-10 to an ``(n, 4)`` array of counters.

    Parameters
    ----------
    counter : array_like, shape (n, 4) or (4,)
        Counter words (values < 2**32).
    key : pair of int
        Key words (values < 2**32).

    Returns
    -------
    ndarray of uint32 with the same shape as ``counter``.
    """
    ctr = np.asarray(counter, dtype=np.uint64)
    single = ctr.ndim == 1
    ctr = np.atleast_2d(ctr)
    c0, c1, c2, c3 = (ctr[:, i].copy() for i in range(4))
    k0 = np.uint64(key[0])
    k1 = np.uint64(key[1])
    m0 = np.uint64(PHILOX_M0)
    m1 = np.uint64(PHILOX_M1)
    for r in range(ROUNDS):
        if r:
            k0 = (k0 + np.uint64(PHILOX_W0)) & _MASK32
            k1 = (k1 + np.uint64(PHILOX_W1)) & _MASK32
        p0 = m0 * c0
        p1 = m1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ k1,
            p0 & _MASK32,
        )
    out = np.stack([c0, c1, c2, c3], axis=1).astype(np.uint32)
    return out[0] if single else out


def words_to_unit(hi, lo):
    """Combine two 32-bit words into a double in [0, 1) with 53 random bits."""
    hi = np.asarray(hi, dtype=np.uint64) >> np.uint64(5)
    lo = np.asarray(lo, dtype=np.uint64) >> np.uint64(6)
    return (hi.astype(np.float64) * 67108864.0 + lo.astype(np.float64)) * (1.0 / 9007199254740992.0)


def uniform_pairs(seed, step, stream, index):
    """Two independent uniforms per ``index`` for a given ``(step, stream)``.

    ``index`` is an integer array; returns two float64 arrays of its shape.
    """
    k = split_seed(seed)
    index = np.asarray(index, dtype=np.uint64)
    n = index.size
    ctr = np.empty((n, 4), dtype=np.uint64)
    ctr[:, 0] = step
    ctr[:, 1] = stream
    ctr[:, 2] = index.ravel() & _MASK32
    ctr[:, 3] = index.ravel() >> _SHIFT32
    w = philox4x32(ctr, k).astype(np.uint64)
    u1 = words_to_unit(w[:, 0], w[:, 1]).reshape(index.shape)
    u2 = words_to_unit(w[:, 2], w[:, 3]).reshape(index.shape)
    return u1, u2


def permutation(n, seed, stream=STREAM_SPLIT):
    """Portable Fisher-Yates permutation of ``range(n)``.

    For ``i`` from ``n - 1`` down to 1, swap position ``i`` with
    ``j = floor(u_i * (i + 1))`` where ``u_i`` is the first uniform drawn at
    counter ``(i, stream, 0, 0)``.
    """
    perm = list(range(n))
    if n < 2:
        return perm
    idx = np.arange(1, n, dtype=np.uint64)
    k = split_seed(seed)
    ctr = np.zeros((n - 1, 4), dtype=np.uint64)
    ctr[:, 0] = idx
    ctr[:, 1] = stream
    w = philox4x32(ctr, k).astype(np.uint64)
    u = words_to_unit(w[:, 0], w[:, 1])
    for i in range(n - 1, 0, -1):
        j = int(u[i - 1] * (i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm
