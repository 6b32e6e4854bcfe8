# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for index-space arithmetic in finite contexts.

Element indices are mixed-radix encodings of canonical coordinates, so the
numeric order of indices is the canonical element order.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, int32_t, uint8_t

cnp.import_array()

DEF MAXD = 136


cdef inline void _decode(int64_t x, int d, int64_t m, int64_t* out) noexcept nogil:
    cdef int p
    for p in range(d - 1, -1, -1):
        out[p] = x % m
        x = x // m


cdef inline int64_t _encode(int d, int64_t m, int64_t* c) noexcept nogil:
    cdef int64_t x = 0
    cdef int p
    for p in range(d):
        x = x * m + c[p]
    return x


cdef inline int _pos(int n, int i, int j) noexcept nogil:
    # row-major position of entry (i, j), 0 <= i < j < n
    return i * n - (i * (i + 1)) // 2 + (j - i - 1)


cdef inline void _utmul(int n, int64_t m, int64_t* a, int64_t* b, int64_t* c) noexcept nogil:
    cdef int i, j, k
    cdef int64_t s
    for i in range(n):
        for j in range(i + 1, n):
            s = (a[_pos(n, i, j)] + b[_pos(n, i, j)]) % m
            for k in range(i + 1, j):
                s = (s + (a[_pos(n, i, k)] * b[_pos(n, k, j)]) % m) % m
            c[_pos(n, i, j)] = s


cdef inline void _utinv(int n, int64_t m, int64_t* a, int64_t* b) noexcept nogil:
    cdef int i, j, k, gap
    cdef int64_t s
    for gap in range(1, n):
        for i in range(n - gap):
            j = i + gap
            s = a[_pos(n, i, j)]
            for k in range(i + 1, j):
                s = (s + (a[_pos(n, i, k)] * b[_pos(n, k, j)]) % m) % m
            b[_pos(n, i, j)] = (m - s) % m


def utmod_mul(const int64_t[::1] a, const int64_t[::1] b, int n, int64_t m):
    cdef Py_ssize_t L = a.shape[0], t
    cdef int d = n * (n - 1) // 2
    cdef int64_t ca[MAXD]
    cdef int64_t cb[MAXD]
    cdef int64_t cc[MAXD]
    out = np.empty(L, dtype=np.int64)
    cdef int64_t[::1] o = out
    if d > MAXD:
        raise ValueError("matrix size too large for compiled kernel")
    if n == 3:
        _utmul3(a, b, m, o)
        return out
    with nogil:
        for t in range(L):
            _decode(a[t], d, m, ca)
            _decode(b[t], d, m, cb)
            _utmul(n, m, ca, cb, cc)
            o[t] = _encode(d, m, cc)
    return out


cdef void _utmul3(const int64_t[::1] a, const int64_t[::1] b, int64_t m, int64_t[::1] o) noexcept nogil:
    # coordinates (e12, e13, e23), index e12*m^2 + e13*m + e23
    cdef Py_ssize_t t
    cdef int64_t x, y, a1, a2, a3, b1, b2, b3, c1, c2, c3
    for t in range(a.shape[0]):
        x = a[t]
        y = b[t]
        a3 = x % m
        x = x // m
        a2 = x % m
        a1 = x // m
        b3 = y % m
        y = y // m
        b2 = y % m
        b1 = y // m
        c1 = a1 + b1
        if c1 >= m:
            c1 -= m
        c3 = a3 + b3
        if c3 >= m:
            c3 -= m
        c2 = (a2 + b2 + a1 * b3) % m
        o[t] = (c1 * m + c2) * m + c3


def utmod_inv(const int64_t[::1] a, int n, int64_t m):
    cdef Py_ssize_t L = a.shape[0], t
    cdef int d = n * (n - 1) // 2
    cdef int64_t ca[MAXD]
    cdef int64_t cb[MAXD]
    out = np.empty(L, dtype=np.int64)
    cdef int64_t[::1] o = out
    if d > MAXD:
        raise ValueError("matrix size too large for compiled kernel")
    with nogil:
        for t in range(L):
            _decode(a[t], d, m, ca)
            _utinv(n, m, ca, cb)
            o[t] = _encode(d, m, cb)
    return out


def utmod_product(const int64_t[::1] a, const int64_t[::1] b, int n, int64_t m, int64_t order):
    """Sorted distinct products a_i * b_j, using a mark buffer of size ``order``."""
    cdef Py_ssize_t i, j, na = a.shape[0], nb = b.shape[0]
    cdef int d = n * (n - 1) // 2
    cdef int64_t ca[MAXD]
    cdef int64_t cb[MAXD]
    cdef int64_t cc[MAXD]
    cdef int64_t x
    cdef Py_ssize_t count = 0
    marks = np.zeros(order, dtype=np.uint8)
    cdef uint8_t[::1] mk = marks
    if d > MAXD:
        raise ValueError("matrix size too large for compiled kernel")
    with nogil:
        for i in range(na):
            _decode(a[i], d, m, ca)
            for j in range(nb):
                _decode(b[j], d, m, cb)
                _utmul(n, m, ca, cb, cc)
                x = _encode(d, m, cc)
                if mk[x] == 0:
                    mk[x] = 1
                    count += 1
    return np.flatnonzero(marks).astype(np.int64)


def table_product(const int32_t[:, ::1] table, const int64_t[::1] a, const int64_t[::1] b):
    """Sorted distinct products a_i * b_j read from a Cayley table."""
    cdef Py_ssize_t i, j, na = a.shape[0], nb = b.shape[0]
    cdef Py_ssize_t order = table.shape[0]
    cdef int32_t x
    marks = np.zeros(order, dtype=np.uint8)
    cdef uint8_t[::1] mk = marks
    with nogil:
        for i in range(na):
            for j in range(nb):
                x = table[a[i], b[j]]
                mk[x] = 1
    return np.flatnonzero(marks).astype(np.int64)


def table_ball_sizes(const int32_t[:, ::1] table, const int64_t[::1] gens, int64_t start, Py_ssize_t n_max):
    """|S^0|, ..., |S^n_max| for right multiplication by ``gens`` from ``start``.

    Stops early once a layer is empty; the remaining entries repeat the total.
    """
    cdef Py_ssize_t order = table.shape[0], ng = gens.shape[0]
    cdef Py_ssize_t head = 0, tail = 1, layer_end, radius, g
    cdef int32_t x, y
    seen = np.zeros(order, dtype=np.uint8)
    queue = np.empty(order, dtype=np.int32)
    sizes = np.empty(n_max + 1, dtype=np.int64)
    cdef uint8_t[::1] sn = seen
    cdef int32_t[::1] q = queue
    cdef int64_t[::1] sz = sizes
    sn[start] = 1
    q[0] = <int32_t>start
    sz[0] = 1
    with nogil:
        for radius in range(1, n_max + 1):
            layer_end = tail
            while head < layer_end:
                x = q[head]
                head += 1
                for g in range(ng):
                    y = table[x, gens[g]]
                    if sn[y] == 0:
                        sn[y] = 1
                        q[tail] = y
                        tail += 1
            sz[radius] = tail
    return sizes


def table_closure(const int32_t[:, ::1] table, const int64_t[::1] gens, int64_t start):
    """Sorted indices reachable from ``start`` by right multiplication by ``gens``."""
    cdef Py_ssize_t order = table.shape[0], ng = gens.shape[0]
    cdef Py_ssize_t head = 0, tail = 1, g
    cdef int32_t x, y
    seen = np.zeros(order, dtype=np.uint8)
    queue = np.empty(order, dtype=np.int32)
    cdef uint8_t[::1] sn = seen
    cdef int32_t[::1] q = queue
    sn[start] = 1
    q[0] = <int32_t>start
    with nogil:
        while head < tail:
            x = q[head]
            head += 1
            for g in range(ng):
                y = table[x, gens[g]]
                if sn[y] == 0:
                    sn[y] = 1
                    q[tail] = y
                    tail += 1
    return np.flatnonzero(seen).astype(np.int64)
