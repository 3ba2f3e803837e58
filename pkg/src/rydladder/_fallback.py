"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def enumerate_states(upper_masks, n_sites):
    """All bitmasks with no bond set twice, ascending."""
    upper = np.asarray(upper_masks, dtype=np.int64)
    states = np.zeros(1, dtype=np.int64)
    # upper[i] only involves larger indices, so grow from the top site down
    for i in range(n_sites - 1, -1, -1):
        ok = states[(states & upper[i]) == 0]
        states = np.concatenate([states, ok | np.int64(1 << i)])
    return np.sort(states)


def lookup(states, keys):
    """Index of each key in the sorted ``states`` array, or -1."""
    states = np.asarray(states, dtype=np.int64)
    keys = np.asarray(keys, dtype=np.int64)
    if states.size == 0:
        return np.full(keys.shape, -1, dtype=np.int64)
    idx = np.searchsorted(states, keys)
    idx = np.minimum(idx, states.size - 1)
    return np.where(states[idx] == keys, idx, -1).astype(np.int64)


def flip_connections(states, nbr_masks):
    """Rows, cols and flipped site of every allowed single-site flip."""
    states = np.asarray(states, dtype=np.int64)
    rows, cols, sites = [], [], []
    for i, mask in enumerate(np.asarray(nbr_masks, dtype=np.int64)):
        k = np.flatnonzero((states & mask) == 0)
        rows.append(lookup(states, states[k] ^ np.int64(1 << i)))
        cols.append(k)
        sites.append(np.full(k.size, i, dtype=np.int64))
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    sites = np.concatenate(sites) if sites else np.zeros(0, dtype=np.int64)
    # match the compiled kernel's state-major ordering
    order = np.lexsort((sites, cols))
    return rows[order], cols[order], sites[order]


def permute_states(states, perm):
    """Move bit ``i`` of every state to position ``perm[i]``."""
    states = np.asarray(states, dtype=np.int64)
    out = np.zeros_like(states)
    for i, p in enumerate(np.asarray(perm, dtype=np.int64)):
        out |= ((states >> i) & 1) << p
    return out
