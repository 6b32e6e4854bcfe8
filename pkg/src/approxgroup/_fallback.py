"""Numpy implementations of the compiled kernels in ``_ext.pyx``.

Same signatures and results; used when the extension is not built or when
``APPROXGROUP_PURE=1`` is set.
"""
from __future__ import annotations

import numpy as np


def _positions(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _decode(x, d, m):
    x = np.array(x, dtype=np.int64, copy=True)
    out = np.empty((d,) + x.shape, dtype=np.int64)
    for p in range(d - 1, -1, -1):
        out[p] = x % m
        x //= m
    return out


def _encode(c, m):
    x = np.zeros(c.shape[1:], dtype=np.int64)
    for p in range(c.shape[0]):
        x = x * m + c[p]
    return x


def utmod_mul(a, b, n, m):
    d = n * (n - 1) // 2
    pos = {ij: p for p, ij in enumerate(_positions(n))}
    ca, cb = _decode(a, d, m), _decode(b, d, m)
    cc = (ca + cb) % m
    for (i, j), p in pos.items():
        for k in range(i + 1, j):
            cc[p] = (cc[p] + ca[pos[i, k]] * cb[pos[k, j]] % m) % m
    return _encode(cc, m)


def utmod_inv(a, n, m):
    d = n * (n - 1) // 2
    pos = {ij: p for p, ij in enumerate(_positions(n))}
    ca = _decode(a, d, m)
    cb = np.zeros_like(ca)
    for gap in range(1, n):
        for i in range(n - gap):
            j = i + gap
            s = ca[pos[i, j]].copy()
            for k in range(i + 1, j):
                s = (s + ca[pos[i, k]] * cb[pos[k, j]] % m) % m
            cb[pos[i, j]] = (m - s) % m
    return _encode(cb, m)


def utmod_product(a, b, n, m, order):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = []
    step = max(1, 2_000_000 // max(len(b), 1))
    for s in range(0, len(a), step):
        blk = a[s:s + step]
        out.append(np.unique(utmod_mul(np.repeat(blk, len(b)), np.tile(b, len(blk)), n, m)))
    if not out:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(out))


def table_product(table, a, b):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if len(a) == 0 or len(b) == 0:
        return np.empty(0, dtype=np.int64)
    return np.unique(table[np.ix_(a, b)]).astype(np.int64)


def table_ball_sizes(table, gens, start, n_max):
    order = table.shape[0]
    seen = np.zeros(order, dtype=bool)
    seen[start] = True
    frontier = np.array([start], dtype=np.int64)
    total = 1
    sizes = np.empty(n_max + 1, dtype=np.int64)
    sizes[0] = 1
    gens = np.asarray(gens, dtype=np.int64)
    for radius in range(1, n_max + 1):
        if len(frontier):
            cand = np.unique(table[np.ix_(frontier, gens)])
            new = cand[~seen[cand]]
            seen[new] = True
            total += len(new)
            frontier = new.astype(np.int64)
        sizes[radius] = total
    return sizes


def table_closure(table, gens, start):
    order = table.shape[0]
    seen = np.zeros(order, dtype=bool)
    seen[start] = True
    frontier = np.array([start], dtype=np.int64)
    gens = np.asarray(gens, dtype=np.int64)
    while len(frontier) and len(gens):
        cand = np.unique(table[np.ix_(frontier, gens)])
        new = cand[~seen[cand]]
        seen[new] = True
        frontier = new.astype(np.int64)
    return np.flatnonzero(seen).astype(np.int64)
