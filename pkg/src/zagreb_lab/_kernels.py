"""Numba kernels for tree growth.

Every kernel consumes a pre-drawn vector of attachment choices: for node
``i`` (``2 <= i <= n``) the entry ``choices[i - 2]`` is a uniform integer in
``[0, i - 1)`` (non-plane: parent - 1) or ``[0, 2i - 3)`` (plane: gap index).
Keeping the random draws outside the kernel keeps the RNG in numpy.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _ipow(base, k):
    out = 1
    for _ in range(k):
        out *= base
    return out


@njit(cache=True)
def grow(choices, plane):
    """Return ``(parent, pos)`` where ``pos[i]`` is the sibling slot chosen by node ``i``.

    For the plane model the slot is the insertion position among the siblings
    present at the time ``i`` arrives; for the non-plane model it is simply
    the number of earlier siblings.
    """
    n = choices.shape[0] + 1
    parent = np.zeros(n + 1, np.int64)
    pos = np.zeros(n + 1, np.int64)
    nchild = np.zeros(n + 1, np.int64)
    gaps = np.empty(2 * n - 1 if plane else 1, np.int64)
    copies = np.empty(2 * n - 1 if plane else 1, np.int64)
    gaps[0] = 1
    copies[0] = 0
    size = 1
    for i in range(2, n + 1):
        c = choices[i - 2]
        if plane:
            p = gaps[c]
            q = copies[c]
            gaps[size] = p
            copies[size] = nchild[p] + 1
            gaps[size + 1] = i
            copies[size + 1] = 0
            size += 2
        else:
            p = c + 1
            q = nchild[p]
        nchild[p] += 1
        parent[i] = p
        pos[i] = q
    return parent, pos


@njit(cache=True)
def sibling_order(parent, pos):
    """CSR ``(offsets, flat)`` of children in final left-to-right order."""
    n = parent.shape[0] - 1
    head = np.zeros(n + 1, np.int64)
    nxt = np.zeros(n + 1, np.int64)
    count = np.zeros(n + 1, np.int64)
    for i in range(2, n + 1):
        p = parent[i]
        q = pos[i]
        if q == 0:
            nxt[i] = head[p]
            head[p] = i
        else:
            cur = head[p]
            for _ in range(q - 1):
                cur = nxt[cur]
            nxt[i] = nxt[cur]
            nxt[cur] = i
        count[p] += 1
    offsets = np.zeros(n + 2, np.int64)
    for v in range(1, n + 1):
        offsets[v + 1] = offsets[v] + count[v]
    flat = np.zeros(max(n - 1, 0), np.int64)
    for v in range(1, n + 1):
        cur = head[v]
        j = offsets[v]
        while cur != 0:
            flat[j] = cur
            j += 1
            cur = nxt[cur]
    return offsets, flat


@njit(cache=True)
def subtree_sizes(parent):
    n = parent.shape[0] - 1
    size = np.ones(n + 1, np.int64)
    size[0] = 0
    for v in range(n, 1, -1):
        size[parent[v]] += size[v]
    return size


@njit(cache=True, nogil=True)
def _grow_one(choices, plane, k, want_split, deg, parent, gaps, copies):
    n = choices.shape[0] + 1
    for v in range(n + 1):
        deg[v] = 0
    z = 0
    maxdeg = 0
    first = 2
    size = 1
    gaps[0] = 1
    copies[0] = 0
    for i in range(2, n + 1):
        c = choices[i - 2]
        if plane:
            p = gaps[c]
            q = copies[c]
            # root's children: its own count is deg[1]; others carry +1
            nc = deg[p] if p == 1 else deg[p] - 1
            gaps[size] = p
            copies[size] = nc + 1
            gaps[size + 1] = i
            copies[size + 1] = 0
            size += 2
            if p == 1 and q == 0:
                first = i
        else:
            p = c + 1
        d = deg[p]
        z += _ipow(d + 1, k) - _ipow(d, k) + 1
        deg[p] = d + 1
        deg[i] = 1
        if d + 1 > maxdeg:
            maxdeg = d + 1
        parent[i] = p
    split = 0
    if want_split and n >= 2:
        sizes = np.ones(n + 1, np.int64)
        for v in range(n, 1, -1):
            sizes[parent[v]] += sizes[v]
        split = sizes[first]
    return z, deg[1], maxdeg, split


@njit(cache=True, nogil=True)
def grow_stats_batch(choices, plane, k, want_split):
    """Zagreb value, root degree, max degree and left-most subtree size per row.

    The Zagreb value is accumulated incrementally: attaching a leaf to a node
    of degree ``d`` adds ``(d + 1)^k - d^k + 1``.
    """
    reps = choices.shape[0]
    n = choices.shape[1] + 1
    zs = np.zeros(reps, np.int64)
    rs = np.zeros(reps, np.int64)
    mx = np.zeros(reps, np.int64)
    sp = np.zeros(reps, np.int64)
    deg = np.zeros(n + 1, np.int64)
    parent = np.zeros(n + 1, np.int64)
    gaps = np.empty(2 * n - 1, np.int64)
    copies = np.empty(2 * n - 1, np.int64)
    for r in range(reps):
        z, root, m, s = _grow_one(choices[r], plane, k, want_split, deg, parent, gaps, copies)
        zs[r] = z
        rs[r] = root
        mx[r] = m
        sp[r] = s
    return zs, rs, mx, sp
