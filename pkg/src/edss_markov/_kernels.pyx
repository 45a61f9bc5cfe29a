# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels (see ``_purepy`` for the reference version)."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint32_t, uint64_t, int8_t

cnp.import_array()

cdef uint64_t M0 = 0xD2511F53
cdef uint64_t M1 = 0xCD9E8D57
cdef uint32_t W0 = 0x9E3779B9
cdef uint32_t W1 = 0xBB67AE85


cdef inline void philox(uint32_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t c0 = c[0], c1 = c[1], c2 = c[2], c3 = c[3]
    cdef int r
    for r in range(10):
        if r:
            k0 = k0 + W0
            k1 = k1 + W1
        p0 = M0 * <uint64_t>c0
        p1 = M1 * <uint64_t>c2
        c0, c1, c2, c3 = (<uint32_t>(p1 >> 32)) ^ c1 ^ k0, <uint32_t>p1, \
                         (<uint32_t>(p0 >> 32)) ^ c3 ^ k1, <uint32_t>p0
    c[0] = c0
    c[1] = c1
    c[2] = c2
    c[3] = c3


cdef inline double unit(uint32_t hi, uint32_t lo) noexcept nogil:
    return (<double>(hi >> 5) * 67108864.0 + <double>(lo >> 6)) * (1.0 / 9007199254740992.0)


cdef inline int pick(const double* cum, int g, double u) noexcept nogil:
    cdef int j = 0
    cdef int count = 0
    for j in range(g):
        if u >= cum[j]:
            count += 1
    return count


def philox_block(counter, key):
    """Philox4x32-10 of one counter (4 words) under ``key`` (2 words)."""
    cdef uint32_t c[4]
    for i in range(4):
        c[i] = <uint32_t>int(counter[i])
    philox(c, <uint32_t>int(key[0]), <uint32_t>int(key[1]))
    return (c[0], c[1], c[2], c[3])


def simulate_panel(cum_init, cum_mats, hazard, Py_ssize_t n, seed, Py_ssize_t offset=0, int stream=0):
    cdef const double[::1] ci = np.ascontiguousarray(cum_init, dtype=np.float64)
    cdef const double[:, :, ::1] cm = np.ascontiguousarray(cum_mats, dtype=np.float64)
    cdef const double[:, ::1] hz = np.ascontiguousarray(hazard, dtype=np.float64)
    cdef Py_ssize_t k_steps = cm.shape[0]
    cdef int g = ci.shape[0]
    out_arr = np.full((n, k_steps + 1), -1, dtype=np.int8)
    cdef int8_t[:, ::1] out = out_arr
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must be in [0, 2**64)")
    cdef uint32_t k0 = <uint32_t>(seed & 0xFFFFFFFF)
    cdef uint32_t k1 = <uint32_t>(seed >> 32)
    cdef uint32_t c[4]
    cdef Py_ssize_t i, s
    cdef uint64_t idx
    cdef int state
    cdef double u1, u2
    with nogil:
        for i in range(n):
            idx = <uint64_t>(offset + i)
            c[0] = 0
            c[1] = <uint32_t>stream
            c[2] = <uint32_t>idx
            c[3] = <uint32_t>(idx >> 32)
            philox(c, k0, k1)
            state = pick(&ci[0], g, unit(c[0], c[1]))
            out[i, 0] = <int8_t>state
            for s in range(1, k_steps + 1):
                c[0] = <uint32_t>s
                c[1] = <uint32_t>stream
                c[2] = <uint32_t>idx
                c[3] = <uint32_t>(idx >> 32)
                philox(c, k0, k1)
                u1 = unit(c[0], c[1])
                u2 = unit(c[2], c[3])
                if u2 < hz[s - 1, state]:
                    break
                state = pick(&cm[s - 1, state, 0], g, u1)
                out[i, s] = <int8_t>state
    return out_arr
