"""Numba kernels for the hot Monte Carlo paths.

Site labels follow M = i*L + j (column i, row j). Bond layout:
horizontal bond (i,j)-(i+1,j) has index i*L + j for i < L-1, vertical bond
(i,j)-(i,j+1) has index i*(L-1) + j for j < L-1. Row j = 0 is the top edge.

Direction codes: 0 = up (j-1), 1 = down (j+1), 2 = left (i-1), 3 = right (i+1).

The sweep bodies are written out longhand instead of via shared helpers:
factoring the per-site update into an inlined function costs about 2x here.
"""

import numpy as np
from numba import njit

# virtual node offsets relative to N = L*L
TOP = 0
BOTTOM = 1
LEFT_EDGE = 2
RIGHT_EDGE = 3


@njit(cache=True, inline="always")
def _find(parent, x):
    # path compression by halving
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, inline="always")
def _union_roots(parent, size, ra, rb):
    # weighted union of two distinct roots; returns the surviving root
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra


@njit(cache=True)
def allocate_barriers(L, n_d, u_sites, u_patterns, patterns, horiz, vert, out_sites):
    """Select n_d distinct sites and close their pattern bonds in place.

    Site selection is a partial Fisher-Yates shuffle driven by u_sites,
    pattern choice is uniform over the rows of `patterns` (direction codes,
    -1 marks an unused slot). Bonds falling outside the lattice are skipped.
    Returns the number of bonds that flipped from open to closed.
    """
    N = L * L
    labels = np.arange(N, dtype=np.int64)
    npat = patterns.shape[0]
    newly = 0
    for t in range(n_d):
        pick = t + int(u_sites[t] * (N - t))
        s = labels[pick]
        labels[pick] = labels[t]
        labels[t] = s
        out_sites[t] = s
        i = s // L
        j = s - i * L
        p = int(u_patterns[t] * npat)
        for k in range(2):
            d = patterns[p, k]
            if d < 0:
                continue
            if d == 0:  # up
                if j > 0:
                    idx = i * (L - 1) + j - 1
                    if vert[idx] != 0:
                        vert[idx] = 0
                        newly += 1
            elif d == 1:  # down
                if j < L - 1:
                    idx = i * (L - 1) + j
                    if vert[idx] != 0:
                        vert[idx] = 0
                        newly += 1
            elif d == 2:  # left
                if i > 0:
                    if horiz[s - L] != 0:
                        horiz[s - L] = 0
                        newly += 1
            else:  # right
                if i < L - 1:
                    if horiz[s] != 0:
                        horiz[s] = 0
                        newly += 1
    return newly


@njit(cache=True)
def sweep_random(L, horiz, vert, u, either_mode):
    """Add sites in uniform random order until a cluster spans; -1 if none.

    The permutation is generated lazily (front-partial Fisher-Yates from u)
    so the sweep can stop at the first spanning event.
    """
    N = L * L
    parent = np.empty(N + 4, dtype=np.int64)
    size = np.ones(N + 4, dtype=np.int64)
    for k in range(N + 4):
        parent[k] = k
    occupied = np.zeros(N, dtype=np.uint8)
    order = np.empty(N, dtype=np.int64)
    for k in range(N):
        order[k] = k
    for t in range(N):
        pick = t + int(u[t] * (N - t))
        s = order[pick]
        order[pick] = order[t]
        order[t] = s
        occupied[s] = 1
        i = s // L
        j = s - i * L
        r = _find(parent, s)
        if i < L - 1 and horiz[s] != 0 and occupied[s + L] != 0:
            rb = _find(parent, s + L)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if i > 0 and horiz[s - L] != 0 and occupied[s - L] != 0:
            rb = _find(parent, s - L)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if j < L - 1 and vert[i * (L - 1) + j] != 0 and occupied[s + 1] != 0:
            rb = _find(parent, s + 1)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if j > 0 and vert[i * (L - 1) + j - 1] != 0 and occupied[s - 1] != 0:
            rb = _find(parent, s - 1)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if j == 0:
            rb = _find(parent, N + TOP)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        elif j == L - 1:
            rb = _find(parent, N + BOTTOM)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if either_mode:
            if i == 0:
                rb = _find(parent, N + LEFT_EDGE)
                if r != rb:
                    r = _union_roots(parent, size, r, rb)
            elif i == L - 1:
                rb = _find(parent, N + RIGHT_EDGE)
                if r != rb:
                    _union_roots(parent, size, r, rb)
        if _find(parent, N + TOP) == _find(parent, N + BOTTOM):
            return t + 1
        if either_mode and _find(parent, N + LEFT_EDGE) == _find(parent, N + RIGHT_EDGE):
            return t + 1
    return -1


@njit(cache=True)
def sweep_ordered(L, horiz, vert, order, either_mode):
    """Same sweep with an explicit site order (tests, controlled runs)."""
    N = L * L
    parent = np.empty(N + 4, dtype=np.int64)
    size = np.ones(N + 4, dtype=np.int64)
    for k in range(N + 4):
        parent[k] = k
    occupied = np.zeros(N, dtype=np.uint8)
    for t in range(order.shape[0]):
        s = order[t]
        occupied[s] = 1
        i = s // L
        j = s - i * L
        r = _find(parent, s)
        if i < L - 1 and horiz[s] != 0 and occupied[s + L] != 0:
            rb = _find(parent, s + L)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if i > 0 and horiz[s - L] != 0 and occupied[s - L] != 0:
            rb = _find(parent, s - L)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if j < L - 1 and vert[i * (L - 1) + j] != 0 and occupied[s + 1] != 0:
            rb = _find(parent, s + 1)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if j > 0 and vert[i * (L - 1) + j - 1] != 0 and occupied[s - 1] != 0:
            rb = _find(parent, s - 1)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if j == 0:
            rb = _find(parent, N + TOP)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        elif j == L - 1:
            rb = _find(parent, N + BOTTOM)
            if r != rb:
                r = _union_roots(parent, size, r, rb)
        if either_mode:
            if i == 0:
                rb = _find(parent, N + LEFT_EDGE)
                if r != rb:
                    r = _union_roots(parent, size, r, rb)
            elif i == L - 1:
                rb = _find(parent, N + RIGHT_EDGE)
                if r != rb:
                    _union_roots(parent, size, r, rb)
        if _find(parent, N + TOP) == _find(parent, N + BOTTOM):
            return t + 1
        if either_mode and _find(parent, N + LEFT_EDGE) == _find(parent, N + RIGHT_EDGE):
            return t + 1
    return -1


@njit(cache=True)
def cluster_occupied(L, horiz, vert, occupied):
    """Root label per site for a fixed occupancy pattern; -1 when unoccupied."""
    N = L * L
    parent = np.empty(N, dtype=np.int64)
    size = np.ones(N, dtype=np.int64)
    for k in range(N):
        parent[k] = k
    for s in range(N):
        if occupied[s] == 0:
            continue
        i = s // L
        j = s - i * L
        if i < L - 1 and horiz[s] != 0 and occupied[s + L] != 0:
            ra = _find(parent, s)
            rb = _find(parent, s + L)
            if ra != rb:
                _union_roots(parent, size, ra, rb)
        if j < L - 1 and vert[i * (L - 1) + j] != 0 and occupied[s + 1] != 0:
            ra = _find(parent, s)
            rb = _find(parent, s + 1)
            if ra != rb:
                _union_roots(parent, size, ra, rb)
    roots = np.empty(N, dtype=np.int64)
    for s in range(N):
        roots[s] = _find(parent, s) if occupied[s] != 0 else -1
    return roots
