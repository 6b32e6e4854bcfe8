"""Concrete groups with exact arithmetic and canonical element keys.

Every context works on *keys*: hashable canonical forms whose natural order
(via ``ctx.sort_key``) is the canonical element order.  Finite contexts use
integer keys in ``range(order)``; the integer is the mixed-radix encoding of
the canonical coordinate tuple, so integer order equals lexicographic
coordinate order and the identity is always key ``0``.  Infinite contexts use
coordinate tuples (matrices, abelian groups) or reduced words (free groups).

:class:`Element` wraps a key together with its context for the public API;
the algorithms in the other modules work on raw keys.
"""
from __future__ import annotations

import math
import random
from functools import reduce

import numpy as np

from . import kernels
from .errors import CapExceeded, ContextMismatch, SpecError, UnsupportedOperation

DEFAULT_CAP = 2_000_000
TABLE_LIMIT = 1024
MARK_LIMIT = 1 << 24
MAX_ORDER = 1 << 62
NAMES = "xyzwabcdefghijklmnopqrstuv"


class GroupCtx:
    """Base class for group contexts.

    Subclasses implement ``identity``, ``mul``, ``inv``, ``coords``,
    ``from_coords``, ``generators`` and ``spec``.
    """

    kind = "abstract"
    finite = False
    order: int | None = None

    def __init__(self, cap=None):
        cap = DEFAULT_CAP if cap is None else int(cap)
        if cap <= 0:
            raise SpecError("enumeration cap must be positive")
        self.cap = cap

    # -- arithmetic -------------------------------------------------------
    identity = None

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def sort_key(self, k):
        return k

    def sorted(self, keys):
        return sorted(keys, key=self.sort_key)

    def commutator(self, a, b):
        """``[a, b] = a^-1 b^-1 a b``."""
        return self.mul(self.mul(self.inv(a), self.inv(b)), self.mul(a, b))

    def conj(self, a, g):
        """``g^-1 a g``."""
        return self.mul(self.mul(self.inv(g), a), g)

    def power(self, a, e):
        if e < 0:
            a, e = self.inv(a), -e
        result, base = self.identity, a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def product(self, keys):
        return reduce(self.mul, keys, self.identity)

    def element_order(self, a, limit):
        """Order of ``a`` if it is at most ``limit``, else ``None``."""
        x = a
        for t in range(1, limit + 1):
            if x == self.identity:
                return t
            x = self.mul(x, a)
        return None

    def is_abelian_ctx(self):
        return False

    def infinite_order(self, k):
        """True when ``k`` certainly has infinite order."""
        return False

    # -- naming and parsing ----------------------------------------------
    def generators(self):
        raise NotImplementedError

    def generator_names(self):
        return NAMES[: len(self.generators())]

    def named(self):
        return dict(zip(self.generator_names(), self.generators()))

    def parse_word(self, word):
        names = self.named()
        key = self.identity
        for ch in word.strip():
            if ch in "1e ":
                continue
            if ch in names:
                g = names[ch]
            elif ch.lower() in names:
                g = self.inv(names[ch.lower()])
            else:
                raise SpecError(f"unknown generator {ch!r} in word {word!r}")
            key = self.mul(key, g)
        return key

    def key_of(self, obj):
        if isinstance(obj, Element):
            if obj.ctx != self:
                raise ContextMismatch(f"element of {obj.ctx!r} used in {self!r}")
            return obj.key
        if isinstance(obj, str):
            return self.parse_word(obj)
        if isinstance(obj, (list, tuple)):
            return self.from_coords(obj)
        raise SpecError(f"cannot interpret {obj!r} as an element of {self!r}")

    def element(self, obj=None):
        if obj is None:
            return Element(self, self.identity)
        return Element(self, self.key_of(obj))

    def wrap(self, key):
        return Element(self, key)

    def coords(self, k):
        raise NotImplementedError

    def from_coords(self, c):
        raise NotImplementedError

    def to_json(self, k):
        return list(self.coords(k))

    def random_key(self, rng):
        raise NotImplementedError

    # -- identity of contexts --------------------------------------------
    def spec(self):
        raise NotImplementedError

    def signature(self):
        s = dict(self.spec())
        s.pop("cap", None)
        return repr(sorted(s.items()))

    def __eq__(self, other):
        return self is other or (isinstance(other, GroupCtx) and self.signature() == other.signature())

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self):
        return f"{type(self).__name__}({self.signature()})"

    def check_cap(self, size, what="set"):
        if size > self.cap:
            raise CapExceeded(f"{what} reached {size} elements, cap is {self.cap}", partial=size)


class FiniteCtx(GroupCtx):
    """A finite context with integer keys and vectorized index arithmetic."""

    finite = True
    identity = 0

    def __init__(self, cap=None):
        super().__init__(cap)
        self._table = None

    def mul_idx(self, a, b):
        raise NotImplementedError

    def inv_idx(self, a):
        raise NotImplementedError

    def mul(self, a, b):
        return int(self.mul_idx(np.array([a], dtype=np.int64), np.array([b], dtype=np.int64))[0])

    def inv(self, a):
        return int(self.inv_idx(np.array([a], dtype=np.int64))[0])

    def sorted(self, keys):
        return sorted(keys)

    def all_idx(self):
        return np.arange(self.order, dtype=np.int64)

    def random_key(self, rng):
        return int(rng.randrange(self.order))

    def table(self):
        """Cayley table ``t[a, b] = a*b`` (int32), cached; ``None`` if too large."""
        if self._table is None and self.order <= TABLE_LIMIT:
            idx = self.all_idx()
            a = np.repeat(idx, self.order)
            b = np.tile(idx, self.order)
            self._table = np.ascontiguousarray(self.mul_idx(a, b).reshape(self.order, self.order).astype(np.int32))
        return self._table

    def product_idx(self, a, b):
        """Sorted distinct products ``x*y`` for ``x`` in ``a``, ``y`` in ``b``."""
        a = np.ascontiguousarray(a, dtype=np.int64)
        b = np.ascontiguousarray(b, dtype=np.int64)
        if len(a) == 0 or len(b) == 0:
            return np.empty(0, dtype=np.int64)
        t = self.table()
        if t is not None:
            return kernels.table_product(t, a, b)
        return self._product_chunked(a, b)

    def _product_chunked(self, a, b):
        out = []
        step = max(1, 2_000_000 // len(b))
        for s in range(0, len(a), step):
            blk = a[s:s + step]
            out.append(np.unique(self.mul_idx(np.repeat(blk, len(b)), np.tile(b, len(blk)))))
        return np.unique(np.concatenate(out))

    def commutator_idx(self, a, b):
        ia, ib = self.inv_idx(a), self.inv_idx(b)
        return self.mul_idx(self.mul_idx(ia, ib), self.mul_idx(a, b))

    def conj_idx(self, a, g):
        """``g^-1 a g`` elementwise."""
        return self.mul_idx(self.mul_idx(self.inv_idx(g), a), g)

    def key_of(self, obj):
        if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
            k = int(obj)
            if not 0 <= k < self.order:
                raise SpecError(f"index {k} out of range for {self!r}")
            return k
        return super().key_of(obj)


def _broadcast(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
    shape = a.shape
    return np.ascontiguousarray(a.ravel()), np.ascontiguousarray(b.ravel()), shape


# --------------------------------------------------------------------------
# unitriangular matrices
# --------------------------------------------------------------------------


class _UTMixin:
    def _setup_ut(self, n):
        if not isinstance(n, int) or n < 2:
            raise SpecError("unitriangular contexts need n >= 2")
        self.n = n
        self.d = n * (n - 1) // 2
        self.positions = [(i, j) for i in range(n) for j in range(i + 1, n)]
        self._pos = {ij: p for p, ij in enumerate(self.positions)}
        # (p, [(p_ik, p_kj), ...]) in row-major order
        self._terms = [
            (p, [(self._pos[i, k], self._pos[k, j]) for k in range(i + 1, j)])
            for p, (i, j) in enumerate(self.positions)
        ]
        self._inv_order = sorted(range(self.d), key=lambda p: self.positions[p][1] - self.positions[p][0])

    def _mul_c(self, a, b):
        return [a[p] + b[p] + sum(a[u] * b[v] for u, v in terms) for p, terms in self._terms]

    def _inv_c(self, a):
        b = [0] * self.d
        for p in self._inv_order:
            b[p] = -(a[p] + sum(a[u] * b[v] for u, v in self._terms[p][1]))
        return b

    def _ut_generators_c(self):
        gens = []
        for i in range(self.n - 1):
            c = [0] * self.d
            c[self._pos[i, i + 1]] = 1
            gens.append(c)
        return gens

    def _ut_named_extra(self):
        # the Heisenberg centre generator I+E13 is conventionally called z
        if self.n == 3:
            c = [0] * self.d
            c[self._pos[0, 2]] = 1
            return {"z": c}
        return {}

    def matrix(self, k):
        """Full matrix (nested lists) of the element with key ``k``."""
        c = self.coords(k)
        rows = [[1 if i == j else 0 for j in range(self.n)] for i in range(self.n)]
        for p, (i, j) in enumerate(self.positions):
            rows[i][j] = c[p]
        return rows


class UTIntCtx(_UTMixin, GroupCtx):
    """Upper unitriangular ``n x n`` integer matrices (arbitrary precision)."""

    kind = "ut_int"

    def __init__(self, n, cap=None):
        GroupCtx.__init__(self, cap)
        self._setup_ut(n)
        self.identity = (0,) * self.d

    def mul(self, a, b):
        return tuple(self._mul_c(a, b))

    def inv(self, a):
        return tuple(self._inv_c(a))

    def coords(self, k):
        return k

    def from_coords(self, c):
        c = tuple(int(x) for x in c)
        if len(c) != self.d:
            raise SpecError(f"expected {self.d} coordinates, got {len(c)}")
        return c

    def generators(self):
        return [tuple(c) for c in self._ut_generators_c()]

    def named(self):
        out = dict(zip(self.generator_names(), self.generators()))
        out.update({k: tuple(v) for k, v in self._ut_named_extra().items()})
        return out

    def random_key(self, rng):
        return tuple(rng.randint(-4, 4) for _ in range(self.d))

    def infinite_order(self, k):
        return k != self.identity  # torsion-free

    def spec(self):
        return {"kind": "ut_int", "n": self.n, "cap": self.cap}


class UTModCtx(_UTMixin, FiniteCtx):
    """Upper unitriangular ``n x n`` matrices over ``Z/m``; order ``m^(n(n-1)/2)``."""

    kind = "ut_mod"

    def __init__(self, n, m, cap=None):
        FiniteCtx.__init__(self, cap)
        self._setup_ut(n)
        if not isinstance(m, int) or m < 2:
            raise SpecError("modular contexts need m >= 2")
        if m > (1 << 31):
            raise SpecError("modulus too large for indexed arithmetic")
        self.m = m
        self.order = m ** self.d
        if self.order > MAX_ORDER:
            raise SpecError(f"order {self.order} too large for indexed arithmetic")

    def _decode(self, k):
        c = [0] * self.d
        for p in range(self.d - 1, -1, -1):
            k, c[p] = divmod(k, self.m)
        return c

    def _encode(self, c):
        k = 0
        for x in c:
            k = k * self.m + x % self.m
        return k

    def mul(self, a, b):
        return self._encode(self._mul_c(self._decode(a), self._decode(b)))

    def inv(self, a):
        return self._encode(self._inv_c(self._decode(a)))

    def mul_idx(self, a, b):
        a, b, shape = _broadcast(a, b)
        return kernels.utmod_mul(a, b, self.n, self.m).reshape(shape)

    def inv_idx(self, a):
        a = np.asarray(a, dtype=np.int64)
        return kernels.utmod_inv(np.ascontiguousarray(a.ravel()), self.n, self.m).reshape(a.shape)

    def product_idx(self, a, b):
        a = np.ascontiguousarray(a, dtype=np.int64)
        b = np.ascontiguousarray(b, dtype=np.int64)
        if len(a) == 0 or len(b) == 0:
            return np.empty(0, dtype=np.int64)
        t = self.table()
        if t is not None:
            return kernels.table_product(t, a, b)
        if self.order <= MARK_LIMIT:
            return kernels.utmod_product(a, b, self.n, self.m, self.order)
        return self._product_chunked(a, b)

    def coords(self, k):
        return tuple(self._decode(k))

    def from_coords(self, c):
        c = [int(x) for x in c]
        if len(c) != self.d:
            raise SpecError(f"expected {self.d} coordinates, got {len(c)}")
        return self._encode(c)

    def generators(self):
        return [self._encode(c) for c in self._ut_generators_c()]

    def named(self):
        out = dict(zip(self.generator_names(), self.generators()))
        out.update({k: self._encode(v) for k, v in self._ut_named_extra().items()})
        return out

    def spec(self):
        return {"kind": "ut_mod", "n": self.n, "m": self.m, "cap": self.cap}


# --------------------------------------------------------------------------
# abelian products
# --------------------------------------------------------------------------


def _mixed_radix_weights(radices):
    w, acc = [], 1
    for r in reversed(radices):
        w.append(acc)
        acc *= r
    return list(reversed(w)), acc


class FiniteAbelianCtx(FiniteCtx):
    """``Z/m_1 x ... x Z/m_r`` with every ``m_i >= 2``."""

    kind = "abelian"

    def __init__(self, moduli, cap=None):
        FiniteCtx.__init__(self, cap)
        self.moduli = tuple(int(m) for m in moduli)
        if not self.moduli or any(m < 2 for m in self.moduli):
            raise SpecError("finite abelian factors need moduli >= 2")
        self.weights, self.order = _mixed_radix_weights(self.moduli)
        if self.order > MAX_ORDER:
            raise SpecError("order too large for indexed arithmetic")

    def is_abelian_ctx(self):
        return True

    def _decode(self, k):
        return [(k // w) % m for w, m in zip(self.weights, self.moduli)]

    def _encode(self, c):
        return sum((x % m) * w for x, m, w in zip(c, self.moduli, self.weights))

    def mul(self, a, b):
        if len(self.moduli) == 1:
            return (a + b) % self.moduli[0]
        return self._encode([x + y for x, y in zip(self._decode(a), self._decode(b))])

    def inv(self, a):
        return self._encode([-x for x in self._decode(a)])

    def mul_idx(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.int64)
        for w, m in zip(self.weights, self.moduli):
            out += (((a // w) % m + (b // w) % m) % m) * w
        return out

    def inv_idx(self, a):
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros(a.shape, dtype=np.int64)
        for w, m in zip(self.weights, self.moduli):
            out += ((-((a // w) % m)) % m) * w
        return out

    def coords(self, k):
        return tuple(self._decode(k))

    def from_coords(self, c):
        if len(c) != len(self.moduli):
            raise SpecError(f"expected {len(self.moduli)} coordinates")
        return self._encode([int(x) for x in c])

    def generators(self):
        return [self._encode([1 if i == j else 0 for j in range(len(self.moduli))]) for i in range(len(self.moduli))]

    def spec(self):
        return {"kind": "abelian", "moduli": list(self.moduli), "cap": self.cap}


class AbelianCtx(GroupCtx):
    """Abelian product with at least one infinite cyclic factor (modulus 0)."""

    kind = "abelian"

    def __init__(self, moduli, cap=None):
        GroupCtx.__init__(self, cap)
        self.moduli = tuple(int(m) for m in moduli)
        if not self.moduli or any(m < 0 or m == 1 for m in self.moduli):
            raise SpecError("abelian moduli must be 0 or >= 2")
        self.identity = (0,) * len(self.moduli)

    def is_abelian_ctx(self):
        return True

    def _red(self, c):
        return tuple(x % m if m else x for x, m in zip(c, self.moduli))

    def mul(self, a, b):
        return self._red([x + y for x, y in zip(a, b)])

    def inv(self, a):
        return self._red([-x for x in a])

    def power(self, a, e):
        return self._red([x * e for x in a])

    def infinite_order(self, k):
        return any(x and not m for x, m in zip(k, self.moduli))

    def coords(self, k):
        return k

    def from_coords(self, c):
        if len(c) != len(self.moduli):
            raise SpecError(f"expected {len(self.moduli)} coordinates")
        return self._red([int(x) for x in c])

    def generators(self):
        r = len(self.moduli)
        return [tuple(1 if i == j else 0 for j in range(r)) for i in range(r)]

    def random_key(self, rng):
        return self._red([rng.randint(-10, 10) for _ in self.moduli])

    def spec(self):
        return {"kind": "abelian", "moduli": list(self.moduli), "cap": self.cap}


# --------------------------------------------------------------------------
# free groups
# --------------------------------------------------------------------------


class FreeCtx(GroupCtx):
    """Free group on ``rank`` generators; keys are freely reduced words.

    A word is a tuple of nonzero ints, ``i+1`` for generator ``i`` and
    ``-(i+1)`` for its inverse.  Canonical order: by length, then
    lexicographically with ``x < X < y < Y < ...``.
    """

    kind = "free"
    identity = ()

    def __init__(self, rank, cap=None):
        GroupCtx.__init__(self, cap)
        if not isinstance(rank, int) or rank < 1 or rank > len(NAMES):
            raise SpecError(f"free group rank must be in 1..{len(NAMES)}")
        self.rank = rank

    def mul(self, a, b):
        i = 0
        la, lb = len(a), len(b)
        while i < la and i < lb and a[la - 1 - i] == -b[i]:
            i += 1
        return a[: la - i] + b[i:]

    def inv(self, a):
        return tuple(-x for x in reversed(a))

    def infinite_order(self, k):
        return k != ()

    def sort_key(self, k):
        return (len(k), tuple(2 * abs(x) - (2 if x > 0 else 1) for x in k))

    def coords(self, k):
        return k

    def from_coords(self, c):
        key = ()
        for x in c:
            x = int(x)
            if x == 0 or abs(x) > self.rank:
                raise SpecError(f"bad letter {x} for free group of rank {self.rank}")
            key = self.mul(key, (x,))
        return key

    def generators(self):
        return [(i + 1,) for i in range(self.rank)]

    def to_json(self, k):
        return "".join(NAMES[x - 1] if x > 0 else NAMES[-x - 1].upper() for x in k)

    def random_key(self, rng):
        letters = [i + 1 for i in range(self.rank)] + [-(i + 1) for i in range(self.rank)]
        return self.from_coords([rng.choice(letters) for _ in range(rng.randint(0, 6))])

    def spec(self):
        return {"kind": "free", "rank": self.rank, "cap": self.cap}


# --------------------------------------------------------------------------
# direct products
# --------------------------------------------------------------------------


class ProductCtx(GroupCtx):
    """Direct product with at least one infinite factor; keys are tuples."""

    kind = "product"

    def __init__(self, factors, cap=None):
        GroupCtx.__init__(self, cap)
        self.factors = tuple(factors)
        if not self.factors:
            raise SpecError("product needs at least one factor")
        self.identity = tuple(f.identity for f in self.factors)

    def mul(self, a, b):
        return tuple(f.mul(x, y) for f, x, y in zip(self.factors, a, b))

    def inv(self, a):
        return tuple(f.inv(x) for f, x in zip(self.factors, a))

    def sort_key(self, k):
        return tuple(f.sort_key(x) for f, x in zip(self.factors, k))

    def infinite_order(self, k):
        return any(f.infinite_order(x) for f, x in zip(self.factors, k))

    def coords(self, k):
        return tuple(f.coords(x) for f, x in zip(self.factors, k))

    def from_coords(self, c):
        if len(c) != len(self.factors):
            raise SpecError("product element needs one entry per factor")
        return tuple(f.key_of(x) for f, x in zip(self.factors, c))

    def to_json(self, k):
        return [f.to_json(x) for f, x in zip(self.factors, k)]

    def is_abelian_ctx(self):
        return all(f.is_abelian_ctx() for f in self.factors)

    def generators(self):
        gens = []
        for i, f in enumerate(self.factors):
            for g in f.generators():
                gens.append(tuple(g if j == i else h.identity for j, h in enumerate(self.factors)))
        return gens

    def random_key(self, rng):
        return tuple(f.random_key(rng) for f in self.factors)

    def spec(self):
        return {"kind": "product", "factors": [f.spec() for f in self.factors], "cap": self.cap}


class FiniteProductCtx(FiniteCtx):
    """Direct product of finite contexts; mixed-radix integer keys."""

    kind = "product"

    def __init__(self, factors, cap=None):
        FiniteCtx.__init__(self, cap)
        self.factors = tuple(factors)
        if not self.factors or not all(f.finite for f in self.factors):
            raise SpecError("finite product needs finite factors")
        self.weights, self.order = _mixed_radix_weights([f.order for f in self.factors])
        if self.order > MAX_ORDER:
            raise SpecError("order too large for indexed arithmetic")

    def _split(self, k):
        return [(k // w) % f.order for w, f in zip(self.weights, self.factors)]

    def _join(self, parts):
        return sum(p * w for p, w in zip(parts, self.weights))

    def mul(self, a, b):
        return self._join([f.mul(x, y) for f, x, y in zip(self.factors, self._split(a), self._split(b))])

    def inv(self, a):
        return self._join([f.inv(x) for f, x in zip(self.factors, self._split(a))])

    def mul_idx(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros(a.shape, dtype=np.int64)
        for w, f in zip(self.weights, self.factors):
            out += f.mul_idx((a // w) % f.order, (b // w) % f.order) * w
        return out

    def inv_idx(self, a):
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros(a.shape, dtype=np.int64)
        for w, f in zip(self.weights, self.factors):
            out += f.inv_idx((a // w) % f.order) * w
        return out

    def is_abelian_ctx(self):
        return all(f.is_abelian_ctx() for f in self.factors)

    def coords(self, k):
        return tuple(f.coords(x) for f, x in zip(self.factors, self._split(k)))

    def from_coords(self, c):
        if len(c) != len(self.factors):
            raise SpecError("product element needs one entry per factor")
        return self._join([f.key_of(x) for f, x in zip(self.factors, c)])

    def to_json(self, k):
        return [f.to_json(x) for f, x in zip(self.factors, self._split(k))]

    def generators(self):
        gens = []
        for i, f in enumerate(self.factors):
            for g in f.generators():
                gens.append(self._join([g if j == i else 0 for j in range(len(self.factors))]))
        return gens

    def spec(self):
        return {"kind": "product", "factors": [f.spec() for f in self.factors], "cap": self.cap}


# --------------------------------------------------------------------------
# elements
# --------------------------------------------------------------------------


class Element:
    """A group element: a canonical key bound to its context."""

    __slots__ = ("ctx", "key")

    def __init__(self, ctx, key):
        self.ctx = ctx
        self.key = key

    def _other(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        if other.ctx is not self.ctx and other.ctx != self.ctx:
            raise ContextMismatch("operands belong to different contexts")
        return other.key

    def __mul__(self, other):
        k = self._other(other)
        if k is NotImplemented:
            return NotImplemented
        return Element(self.ctx, self.ctx.mul(self.key, k))

    def inv(self):
        return Element(self.ctx, self.ctx.inv(self.key))

    def __pow__(self, e):
        return Element(self.ctx, self.ctx.power(self.key, int(e)))

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self.key == other.key and (self.ctx is other.ctx or self.ctx == other.ctx)

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other):
        self._other(other)
        return self.ctx.sort_key(self.key) < self.ctx.sort_key(other.key)

    @property
    def coords(self):
        return self.ctx.coords(self.key)

    def is_identity(self):
        return self.key == self.ctx.identity

    def to_json(self):
        return self.ctx.to_json(self.key)

    def __repr__(self):
        return f"Element({self.ctx.kind}, {self.to_json()!r})"


def simple_commutator(ctx, xs):
    """``[x_1, ..., x_k]`` with ``[x_1, ..., x_k] = [[x_1, ..., x_{k-1}], x_k]``.

    Returns the element and its word length over the ``xs`` alphabet.
    """
    xs = list(xs)
    if len(xs) < 2:
        raise SpecError("a simple commutator needs at least two entries")
    keys = [ctx.key_of(x) for x in xs]
    c = keys[0]
    for k in keys[1:]:
        c = ctx.commutator(c, k)
    return Element(ctx, c), commutator_word_length(len(keys))


def simple_commutator_key(ctx, keys):
    c = keys[0]
    for k in keys[1:]:
        c = ctx.commutator(c, k)
    return c


def commutator_word_length(weight):
    """Word length of a weight-``weight`` simple commutator: l(1)=1, l(k)=2l(k-1)+2."""
    if weight < 1:
        raise SpecError("weight must be positive")
    return 3 * 2 ** (weight - 1) - 2


# --------------------------------------------------------------------------
# homomorphisms
# --------------------------------------------------------------------------


class Homomorphism:
    """A homomorphism between contexts, evaluated on keys."""

    rule = "abstract"

    def __init__(self, source, target):
        self.source = source
        self.target = target

    def apply_key(self, k):
        raise NotImplementedError

    def apply_keys(self, keys):
        return [self.apply_key(k) for k in keys]

    def __call__(self, a):
        if not isinstance(a, Element) or (a.ctx is not self.source and a.ctx != self.source):
            raise ContextMismatch("element is not in the source context")
        return Element(self.target, self.apply_key(a.key))

    def in_kernel(self, k):
        return self.apply_key(k) == self.target.identity

    def spec(self):
        return {"rule": self.rule, "source": self.source.spec(), "target": self.target.spec()}

    def __repr__(self):
        return f"{type(self).__name__}({self.source!r} -> {self.target!r})"


class IdentityHom(Homomorphism):
    rule = "identity"

    def __init__(self, ctx):
        super().__init__(ctx, ctx)

    def apply_key(self, k):
        return k


class Reduction(Homomorphism):
    """Entrywise reduction: ``ut_int(n) -> ut_mod(n, m)``, ``ut_mod(n, m1) -> ut_mod(n, m2)``
    with ``m2 | m1``, or componentwise reduction of abelian products."""

    rule = "reduce"

    def __init__(self, source, target):
        super().__init__(source, target)
        if isinstance(source, (UTIntCtx, UTModCtx)) and isinstance(target, UTModCtx):
            if source.n != target.n or (isinstance(source, UTModCtx) and source.m % target.m):
                raise SpecError("incompatible unitriangular reduction")
        elif isinstance(source, (AbelianCtx, FiniteAbelianCtx)) and isinstance(target, (AbelianCtx, FiniteAbelianCtx)):
            if len(source.moduli) != len(target.moduli):
                raise SpecError("abelian reduction needs equal ranks")
            for s, t in zip(source.moduli, target.moduli):
                if (t == 0 and s != 0) or (s != 0 and t != 0 and s % t):
                    raise SpecError(f"cannot reduce Z/{s} to Z/{t}")
        else:
            raise SpecError("reduction is defined for unitriangular and abelian contexts")

    def apply_key(self, k):
        return self.target.from_coords(self.source.coords(k))

    def spec(self):
        s = super().spec()
        s["m"] = getattr(self.target, "m", None) or list(self.target.moduli)
        return s


class Projection(Homomorphism):
    """Coordinate projection of a product (or abelian product) onto some factors."""

    rule = "project"

    def __init__(self, source, indices):
        self.indices = tuple(indices)
        if isinstance(source, (ProductCtx, FiniteProductCtx)):
            parts = [source.factors[i] for i in self.indices]
            target = parts[0] if len(parts) == 1 else make_product(parts, cap=source.cap)
        elif isinstance(source, (AbelianCtx, FiniteAbelianCtx)):
            target = make_context({"kind": "abelian", "moduli": [source.moduli[i] for i in self.indices], "cap": source.cap})
        else:
            raise SpecError("projection needs a product or abelian source")
        super().__init__(source, target)

    def apply_key(self, k):
        c = self.source.coords(k)
        picked = [c[i] for i in self.indices]
        if isinstance(self.source, (AbelianCtx, FiniteAbelianCtx)) or len(picked) > 1:
            return self.target.from_coords(picked)
        return self.target.from_coords(picked[0]) if isinstance(picked[0], (list, tuple)) else self.target.key_of(picked[0])

    def spec(self):
        s = super().spec()
        s["indices"] = list(self.indices)
        return s


class GeneratorImages(Homomorphism):
    """Homomorphism out of a free group fixed by the images of its generators."""

    rule = "images"

    def __init__(self, source, target, images):
        if not isinstance(source, FreeCtx):
            raise SpecError("generator-image maps need a free-group source")
        images = [target.key_of(x) for x in images]
        if len(images) != source.rank:
            raise SpecError(f"need {source.rank} generator images, got {len(images)}")
        super().__init__(source, target)
        self.images = images
        self._inv_images = [target.inv(x) for x in images]

    def apply_key(self, k):
        out = self.target.identity
        for x in k:
            out = self.target.mul(out, self.images[x - 1] if x > 0 else self._inv_images[-x - 1])
        return out

    def spec(self):
        s = super().spec()
        s["images"] = [self.target.to_json(x) for x in self.images]
        return s


def hom_apply(phi, a):
    """Apply ``phi`` to the element ``a``."""
    return phi(a)


# --------------------------------------------------------------------------
# construction from specs
# --------------------------------------------------------------------------

_KIND_ALIASES = {
    "ut_mod": "ut_mod",
    "unitriangular-mod": "ut_mod",
    "ut_int": "ut_int",
    "unitriangular-integer": "ut_int",
    "abelian": "abelian",
    "abelian-product": "abelian",
    "free": "free",
    "free-group": "free",
    "product": "product",
    "direct-product": "product",
}


def make_product(factors, cap=None):
    if all(f.finite for f in factors):
        return FiniteProductCtx(factors, cap)
    return ProductCtx(factors, cap)


def parse_group_shorthand(text):
    """``ut_mod:3:5``, ``ut_int:3``, ``abelian:5,0``, ``free:2`` -> spec dict."""
    parts = text.strip().split(":")
    kind = _KIND_ALIASES.get(parts[0])
    try:
        if kind == "ut_mod" and len(parts) == 3:
            return {"kind": kind, "n": int(parts[1]), "m": int(parts[2])}
        if kind == "ut_int" and len(parts) == 2:
            return {"kind": kind, "n": int(parts[1])}
        if kind == "abelian" and len(parts) == 2:
            return {"kind": kind, "moduli": [int(x) for x in parts[1].split(",")]}
        if kind == "free" and len(parts) == 2:
            return {"kind": kind, "rank": int(parts[1])}
    except ValueError as exc:
        raise SpecError(f"malformed group shorthand {text!r}") from exc
    raise SpecError(f"malformed group shorthand {text!r}")


def make_context(spec):
    """Build a context from a group-description record (dict or shorthand string)."""
    if isinstance(spec, str):
        spec = parse_group_shorthand(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpecError("group spec must be a mapping with a 'kind'")
    kind = _KIND_ALIASES.get(spec["kind"])
    cap = spec.get("cap")
    try:
        if kind == "ut_mod":
            return UTModCtx(int(spec["n"]), int(spec["m"]), cap)
        if kind == "ut_int":
            return UTIntCtx(int(spec["n"]), cap)
        if kind == "abelian":
            moduli = [int(m) for m in spec["moduli"]]
            if moduli and all(m >= 2 for m in moduli):
                return FiniteAbelianCtx(moduli, cap)
            return AbelianCtx(moduli, cap)
        if kind == "free":
            return FreeCtx(int(spec["rank"]), cap)
        if kind == "product":
            factors = [make_context(dict(f, cap=f.get("cap", cap)) if isinstance(f, dict) else f) for f in spec["factors"]]
            return make_product(factors, cap)
    except KeyError as exc:
        raise SpecError(f"group spec missing field {exc}") from exc
    raise SpecError(f"unsupported group kind {spec['kind']!r}")


def group_arithmetic(ctx, op, *args):
    """Dispatch ``mul``/``inv``/``identity``/``key`` on elements of ``ctx``."""
    if op == "mul":
        a, b = args
        return ctx.element(a) * ctx.element(b)
    if op == "inv":
        return ctx.element(args[0]).inv()
    if op == "identity":
        return ctx.element()
    if op == "key":
        return ctx.key_of(args[0])
    raise SpecError(f"unknown arithmetic op {op!r}")


def make_rng(seed=0):
    return random.Random(seed)


def require_finite(ctx, what="operation"):
    if not ctx.finite:
        raise UnsupportedOperation(f"{what} needs a finite context; finitize through a quotient first")


def log_order(ctx):
    return math.log(ctx.order) if ctx.finite else math.inf
