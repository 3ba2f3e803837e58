# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled bit-twiddling kernels for constrained Fock bases.

Each function mirrors one in ``_fallback`` and must return identical arrays.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()


cdef extern from *:
    int _ctz "__builtin_ctzll"(unsigned long long) nogil


cdef inline Py_ssize_t _lower_bound(const int64_t* states, Py_ssize_t lo, Py_ssize_t hi, int64_t key) noexcept nogil:
    # first index in [lo, hi) whose value is >= key
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if states[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _gallop(const int64_t* states, Py_ssize_t d, Py_ssize_t hint, int64_t key) noexcept nogil:
    # lower bound of ``key`` searching forward from ``hint`` (requires
    # states[hint - 1] < key); cheap when consecutive keys are close
    cdef Py_ssize_t step = 1, lo = hint, hi = hint
    while hi < d and states[hi] < key:
        lo = hi + 1
        hi += step
        step <<= 1
    if hi > d:
        hi = d
    return _lower_bound(states, lo, hi, key)


def enumerate_states(upper_masks, int n_sites):
    """All bitmasks with no bond set twice, ascending.

    ``upper_masks[i]`` holds the neighbours of site ``i`` with larger index.
    """
    cdef const int64_t[::1] upper = np.ascontiguousarray(upper_masks, dtype=np.int64)
    cdef int64_t[::1] lower = np.zeros(max(n_sites, 1), dtype=np.int64)
    cdef int i, j
    cdef uint64_t m
    for i in range(n_sites):
        m = <uint64_t>upper[i]
        while m:
            j = _ctz(m)
            lower[j] |= <int64_t>1 << i
            m &= m - 1
    # adding site i to states built from sites < i yields values above all
    # of them, so appending keeps the array sorted
    buf = np.zeros(64, dtype=np.int64)
    cdef int64_t[::1] bv = buf
    cdef Py_ssize_t n = 1, k, grow
    for i in range(n_sites):
        grow = 0
        for k in range(n):
            if (bv[k] & lower[i]) == 0:
                grow += 1
        if n + grow > bv.shape[0]:
            buf = np.resize(buf, max(2 * bv.shape[0], n + grow))
            bv = buf
        grow = n
        with nogil:
            for k in range(n):
                if (bv[k] & lower[i]) == 0:
                    bv[grow] = bv[k] | (<int64_t>1 << i)
                    grow += 1
        n = grow
    return np.array(buf[:n])


def flip_connections(states_in, nbr_masks):
    """Rows, cols and flipped site of every allowed single-site flip."""
    cdef const int64_t[::1] states = np.ascontiguousarray(states_in, dtype=np.int64)
    cdef const int64_t[::1] nbr = np.ascontiguousarray(nbr_masks, dtype=np.int64)
    cdef Py_ssize_t d = states.shape[0], k, nnz = 0, pos, hint_up, hint_down, r
    cdef int n = nbr.shape[0], i
    cdef int64_t s, bit, key
    cdef const int64_t* sp = &states[0] if d else NULL
    offsets = np.empty(d + 1, dtype=np.int64)
    cdef int64_t[::1] off = offsets
    with nogil:
        off[0] = 0
        for k in range(d):
            s = states[k]
            for i in range(n):
                if (s & nbr[i]) == 0:
                    nnz += 1
            off[k + 1] = nnz
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    sites = np.empty(nnz, dtype=np.int64)
    cursor = np.array(offsets[:d])
    cdef int64_t[::1] rv = rows, cv = cols, sv = sites, cur = cursor
    # site-major sweep: for a fixed site the targets of adding (and of
    # removing) the excitation increase with k, so the search resumes from
    # the previous hit; cursors keep the output state-major
    with nogil:
        for i in range(n):
            bit = <int64_t>1 << i
            hint_up = 0
            hint_down = 0
            for k in range(d):
                s = sp[k]
                if (s & nbr[i]) != 0:
                    continue
                key = s ^ bit
                if s & bit:
                    r = _gallop(sp, d, hint_down, key)
                    hint_down = r
                else:
                    r = _gallop(sp, d, hint_up, key)
                    hint_up = r
                pos = cur[k]
                cur[k] += 1
                rv[pos] = r if (r < d and sp[r] == key) else -1
                cv[pos] = k
                sv[pos] = i
    return rows, cols, sites


def permute_states(states_in, perm_in):
    """Move bit ``i`` of every state to position ``perm[i]``."""
    cdef const int64_t[::1] states = np.ascontiguousarray(states_in, dtype=np.int64)
    cdef const int64_t[::1] perm = np.ascontiguousarray(perm_in, dtype=np.int64)
    cdef Py_ssize_t d = states.shape[0], k
    cdef int n = perm.shape[0], i
    cdef uint64_t s
    cdef int64_t t
    out = np.empty(d, dtype=np.int64)
    cdef int64_t[::1] ov = out
    with nogil:
        for k in range(d):
            s = <uint64_t>states[k]
            t = 0
            # visit set bits only; constrained states are sparse
            while s:
                i = _ctz(s)
                t |= <int64_t>1 << perm[i]
                s &= s - 1
            ov[k] = t
    return out


def lookup(states_in, keys_in):
    """Index of each key in the sorted ``states`` array, or -1."""
    cdef const int64_t[::1] states = np.ascontiguousarray(states_in, dtype=np.int64)
    cdef const int64_t[::1] keys = np.ascontiguousarray(keys_in, dtype=np.int64)
    cdef Py_ssize_t m = keys.shape[0], k, d = states.shape[0], r = 0
    cdef int64_t key, last = 0
    out = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] ov = out
    if d == 0:
        out[:] = -1
        return out
    cdef const int64_t* sp = &states[0]
    with nogil:
        for k in range(m):
            key = keys[k]
            # resume from the previous hit while keys increase
            if k > 0 and key > last:
                r = _gallop(sp, d, r, key)
            else:
                r = _lower_bound(sp, 0, d, key)
            last = key
            ov[k] = r if (r < d and sp[r] == key) else -1
    return out
