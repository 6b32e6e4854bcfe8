"""Finite sets in a group context: product sets, doubling, covering certificates.

Sets in finite contexts are sorted ``int64`` index arrays; in infinite
contexts they are frozensets of keys with a lazily computed canonical order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CapExceeded, ContextMismatch, SpecError
from .groups import Element, GroupCtx, make_rng

MASK_LIMIT = 1 << 24
COSET_UNION_THRESHOLD = 1 << 20


class ElementSet:
    """An immutable finite set of elements of one context."""

    __slots__ = ("ctx", "note", "_idx", "_set", "_sorted", "_cache")

    def __init__(self, ctx: GroupCtx, keys, note: str = "explicit", _trusted: bool = False):
        self.ctx = ctx
        self.note = note
        self._cache = {}
        self._sorted = None
        if ctx.finite:
            if _trusted:
                arr = keys
            else:
                arr = np.unique(np.asarray(list(keys) if not isinstance(keys, np.ndarray) else keys, dtype=np.int64))
            self._idx = np.ascontiguousarray(arr, dtype=np.int64)
            self._set = None
        else:
            self._idx = None
            self._set = keys if (_trusted and isinstance(keys, frozenset)) else frozenset(keys)
        ctx.check_cap(len(self))

    @classmethod
    def of(cls, ctx, elems, note="explicit"):
        return cls(ctx, [ctx.key_of(e) for e in elems], note)

    # -- basic protocol ---------------------------------------------------
    def __len__(self):
        return len(self._idx) if self._idx is not None else len(self._set)

    @property
    def idx(self):
        if self._idx is None:
            raise SpecError("index arrays exist only in finite contexts")
        return self._idx

    def keys(self):
        """Keys in canonical order."""
        if self._idx is not None:
            return self._idx.tolist()
        if self._sorted is None:
            self._sorted = self.ctx.sorted(self._set)
        return self._sorted

    def keyset(self):
        if self._set is None:
            self._set = frozenset(self._idx.tolist())
        return self._set

    def __iter__(self):
        return (Element(self.ctx, k) for k in self.keys())

    def elements(self):
        return list(self)

    def contains_key(self, k):
        if self._idx is not None:
            i = np.searchsorted(self._idx, k)
            return bool(i < len(self._idx) and self._idx[i] == k)
        return k in self._set

    def contains_idx(self, arr):
        arr = np.asarray(arr, dtype=np.int64)
        if len(self._idx) == 0:
            return np.zeros(arr.shape, dtype=bool)
        pos = np.minimum(np.searchsorted(self._idx, arr), len(self._idx) - 1)
        return self._idx[pos] == arr

    def __contains__(self, e):
        if isinstance(e, Element):
            if e.ctx != self.ctx:
                return False
            return self.contains_key(e.key)
        return self.contains_key(self.ctx.key_of(e))

    def min_key(self):
        return self.keys()[0]

    def _same(self, other):
        if other.ctx is not self.ctx and other.ctx != self.ctx:
            raise ContextMismatch("sets live in different contexts")

    def __eq__(self, other):
        if not isinstance(other, ElementSet):
            return NotImplemented
        if other.ctx != self.ctx or len(self) != len(other):
            return False
        if self._idx is not None:
            return bool(np.array_equal(self._idx, other._idx))
        return self._set == other._set

    def __hash__(self):
        return hash((len(self), tuple(self.keys()[:8])))

    def issubset(self, other):
        return self.first_missing(other) is None

    def first_missing(self, other):
        """Canonical-minimal key of ``self`` not in ``other`` (any container with ``contains_key``)."""
        if self._idx is not None and hasattr(other, "contains_idx"):
            miss = ~other.contains_idx(self._idx)
            return int(self._idx[np.argmax(miss)]) if miss.any() else None
        for k in self.keys():
            if not other.contains_key(k):
                return k
        return None

    def restrict(self, H, note=None):
        """``self ∩ H`` where ``H`` supports ``contains_key`` (or ``contains_idx``)."""
        note = note or f"{self.note}∩H"
        if self._idx is not None and hasattr(H, "contains_idx"):
            return ElementSet(self.ctx, self._idx[H.contains_idx(self._idx)], note, _trusted=True)
        return ElementSet(self.ctx, [k for k in self.keys() if H.contains_key(k)], note)

    def union(self, other):
        self._same(other)
        if self._idx is not None:
            return ElementSet(self.ctx, np.union1d(self._idx, other._idx), "union", _trusted=True)
        return ElementSet(self.ctx, self._set | other._set, "union", _trusted=True)

    def intersection(self, other):
        self._same(other)
        if self._idx is not None:
            return ElementSet(self.ctx, np.intersect1d(self._idx, other._idx), "intersection", _trusted=True)
        return ElementSet(self.ctx, self._set & other._set, "intersection", _trusted=True)

    def difference(self, other):
        self._same(other)
        if self._idx is not None:
            return ElementSet(self.ctx, np.setdiff1d(self._idx, other._idx), "difference", _trusted=True)
        return ElementSet(self.ctx, self._set - other._set, "difference", _trusted=True)

    def inverse(self):
        if self._idx is not None:
            return ElementSet(self.ctx, np.unique(self.ctx.inv_idx(self._idx)), "inverse", _trusted=True)
        return ElementSet(self.ctx, frozenset(self.ctx.inv(k) for k in self._set), "inverse", _trusted=True)

    def is_symmetric(self):
        return self.inverse() == self

    def image(self, phi, note="image"):
        if phi.source != self.ctx:
            raise ContextMismatch("set is not in the homomorphism's source")
        return ElementSet(phi.target, phi.apply_keys(self.keys()), note)

    def translate(self, x, left=True):
        """``xS`` (or ``Sx``) for a key ``x``."""
        ctx = self.ctx
        if self._idx is not None:
            xs = np.full(len(self._idx), x, dtype=np.int64)
            prod = ctx.mul_idx(xs, self._idx) if left else ctx.mul_idx(self._idx, xs)
            return ElementSet(ctx, np.unique(prod), "translate", _trusted=True)
        return ElementSet(ctx, frozenset(ctx.mul(x, k) if left else ctx.mul(k, x) for k in self._set), "translate", _trusted=True)

    def to_json(self):
        return [self.ctx.to_json(k) for k in self.keys()]

    def __repr__(self):
        return f"{type(self).__name__}(|S|={len(self)}, {self.note})"


class SymSet(ElementSet):
    """A finite symmetric set containing the identity."""

    __slots__ = ()

    def __init__(self, ctx, keys, note="explicit", _trusted=False):
        super().__init__(ctx, keys, note, _trusted)
        if not _trusted:
            if not self.contains_key(ctx.identity):
                raise SpecError("set does not contain the identity")
            if not self.is_symmetric():
                raise SpecError("set is not closed under inverses")

    @classmethod
    def from_set(cls, S: ElementSet, note=None):
        return cls(S.ctx, S._idx if S._idx is not None else S._set, note or S.note)


def as_symset(S):
    return S if isinstance(S, SymSet) else SymSet.from_set(S)


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------


def symmetrize(ctx: GroupCtx, elems) -> SymSet:
    """``{1} ∪ elems ∪ elems^-1``."""
    keys = [ctx.key_of(e) for e in elems]
    allk = [ctx.identity] + keys + [ctx.inv(k) for k in keys]
    return SymSet(ctx, allk, "symmetrized")


def coset_components(ctx, H, left=True):
    """Label every element of a finite context by its coset ``gH`` (``left``) or ``Hg``.

    The cosets are the connected components of ``g -- g·h`` (resp. ``h·g``) over
    the generators of ``H``; labels are cached on ``H``.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    cache = H._cache.setdefault("coset_labels", {})
    if left not in cache:
        g = ctx.all_idx()
        cols = [ctx.mul_idx(g, np.full(len(g), h, dtype=np.int64)) if left else ctx.mul_idx(np.full(len(g), h, dtype=np.int64), g) for h in H.gens]
        rows = np.tile(g, len(cols))
        graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, np.concatenate(cols))), shape=(len(g), len(g)))
        cache[left] = connected_components(graph, directed=False)[1]
    return cache[left]


def _coset_union(ctx, S, H, left=True):
    """``S·H`` (``left``) or ``H·S`` for a subgroup ``H``, marked in a mask over the group.

    Chooses the cheapest of: labelling all cosets of ``H`` at once, sweeping
    the elements of ``H``, or generating the cosets met by ``S`` one at a time.
    """
    gens = getattr(H, "gens", None)
    h = H.idx
    if gens and 4 * ctx.order * len(gens) < len(S) * len(h):
        comp = coset_components(ctx, H, left)
        hit = np.zeros(comp.max() + 1, dtype=bool)
        hit[comp[S]] = True
        return np.flatnonzero(hit[comp])
    mask = np.zeros(ctx.order, dtype=bool)
    if len(h) * len(h) <= ctx.order:
        for x in h:
            xx = np.full(len(S), x, dtype=np.int64)
            mask[ctx.mul_idx(S, xx) if left else ctx.mul_idx(xx, S)] = True
        return np.flatnonzero(mask)
    for s in S:
        if mask[s]:
            continue
        ss = np.full(len(h), s, dtype=np.int64)
        mask[ctx.mul_idx(ss, h) if left else ctx.mul_idx(h, ss)] = True
    return np.flatnonzero(mask)


def mul_sets(X: ElementSet, Y: ElementSet, note="product") -> ElementSet:
    """The product set ``XY``."""
    X._same(Y)
    ctx = X.ctx
    if ctx.finite:
        if len(X) * len(Y) > COSET_UNION_THRESHOLD:
            if getattr(Y, "is_subgroup", False):
                return ElementSet(ctx, _coset_union(ctx, X.idx, Y, left=True), note, _trusted=True)
            if getattr(X, "is_subgroup", False):
                return ElementSet(ctx, _coset_union(ctx, Y.idx, X, left=False), note, _trusted=True)
        return ElementSet(ctx, ctx.product_idx(X.idx, Y.idx), note, _trusted=True)
    out = set()
    mul = ctx.mul
    ys = Y.keys()
    for x in X.keys():
        for y in ys:
            out.add(mul(x, y))
        if len(out) > ctx.cap:
            raise CapExceeded(f"product set exceeded cap {ctx.cap}", partial=len(out))
    return ElementSet(ctx, frozenset(out), note, _trusted=True)


def product_set(A: SymSet, m: int) -> SymSet:
    """``A^m``; powers of ``A`` are cached on ``A``.

    Uses ``A^m = A^(m-1) ∪ F·A`` where ``F = A^(m-1) \\ A^(m-2)`` (valid as 1 ∈ A).
    """
    if m < 1:
        raise SpecError("power must be positive")
    powers = A._cache.setdefault("powers", {1: A})
    if m in powers:
        return powers[m]
    ctx = A.ctx
    top = max(p for p in powers if p <= m)
    cur = powers[top]
    prev = powers.get(top - 1, SymSet(ctx, [ctx.identity], "trivial", _trusted=True) if top == 1 else None)
    if prev is None:
        prev = product_set(A, top - 1)
    for p in range(top + 1, m + 1):
        try:
            frontier = cur.difference(prev)
            if len(frontier) == 0:
                nxt = cur
            else:
                grown = mul_sets(frontier, A)
                nxt = cur.union(grown) if ctx.finite else ElementSet(ctx, cur._set | grown._set, _trusted=True)
        except CapExceeded as exc:
            raise CapExceeded(f"A^{p} exceeded cap {ctx.cap}", partial=max(exc.partial or 0, len(cur))) from None
        nxt = SymSet(ctx, nxt._idx if ctx.finite else nxt._set, f"power({A.note},{p})", _trusted=True)
        powers[p] = nxt
        prev, cur = cur, nxt
    return powers[m]


def doubling(A: SymSet) -> Fraction:
    """``|A^2| / |A|`` as an exact rational."""
    return Fraction(len(product_set(A, 2)), len(A))


# --------------------------------------------------------------------------
# greedy covering
# --------------------------------------------------------------------------


def _greedy_cover(ctx, target: ElementSet, B: ElementSet):
    """Greedy ``X`` with ``target ⊆ XB``.

    Repeatedly take the canonical-minimal uncovered ``y``; among ``x ∈ yB^-1``
    pick the one covering the most uncovered points, preferring the identity
    and then the canonical-minimal key on ties.
    """
    X = []
    if len(target) == 0:
        return X
    if ctx.finite and getattr(B, "is_subgroup", False):
        return _coset_cover(ctx, target, B)
    Binv_keys = B.inverse().keys()
    if ctx.finite:
        Bidx = B.idx
        Binv = np.asarray(Binv_keys, dtype=np.int64)
        tidx = target.idx
        use_mask = ctx.order <= MASK_LIMIT
        if use_mask:
            unc = np.zeros(ctx.order, dtype=bool)
            unc[tidx] = True
        else:
            unc_sorted = tidx.copy()
        remaining = len(tidx)
        pos = 0
        while remaining:
            if use_mask:
                while not unc[tidx[pos]]:
                    pos += 1
                y = int(tidx[pos])
            else:
                y = int(unc_sorted[0])
            cand = np.unique(ctx.mul_idx(np.full(len(Binv), y, dtype=np.int64), Binv))
            prods = ctx.mul_idx(cand[:, None], Bidx[None, :])
            if use_mask:
                hits = unc[prods]
            else:
                p = np.minimum(np.searchsorted(unc_sorted, prods), len(unc_sorted) - 1)
                hits = unc_sorted[p] == prods
            score = hits.sum(axis=1)
            best = score.max()
            winners = cand[score == best]
            x = 0 if (winners == 0).any() else int(winners.min())
            row = np.flatnonzero(cand == x)[0]
            newly = np.unique(prods[row][hits[row]])
            if use_mask:
                unc[newly] = False
            else:
                unc_sorted = np.setdiff1d(unc_sorted, newly)
            remaining -= len(newly)
            X.append(x)
        return X
    mul = ctx.mul
    Bk = B.keys()
    unc = set(target.keys())
    order = target.keys()
    pos = 0
    ident = ctx.identity
    while unc:
        while order[pos] not in unc:
            pos += 1
        y = order[pos]
        best, best_x = -1, None
        cands = {mul(y, b) for b in Binv_keys}
        for x in ctx.sorted(cands):
            s = sum(1 for b in Bk if mul(x, b) in unc)
            if s > best or (s == best and x == ident):
                best, best_x = s, x
        for b in Bk:
            unc.discard(mul(best_x, b))
        X.append(best_x)
    return X


def _coset_cover(ctx, target, H):
    # for a subgroup every candidate in yH covers the same coset, so the
    # greedy rule reduces to one representative per coset met by the target
    X = []
    unc = target.idx
    Hidx = H.idx
    while len(unc):
        y = int(unc[0])
        coset = ctx.mul_idx(np.full(len(Hidx), y, dtype=np.int64), Hidx)
        X.append(0 if (coset == 0).any() else int(coset.min()))
        unc = np.setdiff1d(unc, coset, assume_unique=False)
    return X


def cover_translates(A: ElementSet, B: ElementSet) -> ElementSet:
    """Greedy ``X`` with ``A ⊆ XB`` (``B`` must contain the identity)."""
    A._same(B)
    if not B.contains_key(A.ctx.identity):
        raise SpecError("covering set must contain the identity")
    X = _greedy_cover(A.ctx, A, B)
    return ElementSet(A.ctx, X, "cover")


def covers(X: ElementSet, B: ElementSet, T: ElementSet):
    """Return the canonical-minimal element of ``T`` not in ``XB`` (``None`` if covered)."""
    return T.first_missing(mul_sets(X, B))


def ruzsa_packing(A: SymSet):
    """Maximal ``X0 ⊆ A^2`` (canonical greedy) with the translates ``xA`` pairwise disjoint."""
    ctx = A.ctx
    A2 = product_set(A, 2)
    X0 = []
    if ctx.finite and ctx.order <= MASK_LIMIT:
        used = np.zeros(ctx.order, dtype=bool)
        for x in A2.idx:
            tr = ctx.mul_idx(np.full(len(A), x, dtype=np.int64), A.idx)
            if not used[tr].any():
                X0.append(int(x))
                used[tr] = True
        return X0
    used = set()
    for x in A2.keys():
        tr = A.translate(x).keys()
        if not used.intersection(tr):
            X0.append(x)
            used.update(tr)
    return X0


@dataclass
class ApproxCertificate:
    """``A^2 ⊆ XA`` with ``K = |X|``."""

    A: SymSet
    X: ElementSet
    K: int
    doubling: Fraction
    tripling: Fraction
    packing_size: int
    notes: list = field(default_factory=list)

    @property
    def within_ruzsa_bound(self):
        return self.K <= self.tripling

    def verify(self):
        A2 = product_set(self.A, 2)
        missing = covers(self.X, self.A, A2)
        return missing is None and len(self.X) == self.K and self.doubling <= self.K

    def to_json(self):
        return {
            "K": self.K,
            "cover": self.X.to_json(),
            "doubling": str(self.doubling),
            "tripling": str(self.tripling),
            "set_size": len(self.A),
            "within_ruzsa_bound": self.within_ruzsa_bound,
            "packing_size": self.packing_size,
        }


def certify_approx(A: SymSet) -> ApproxCertificate:
    """Certify ``A`` as a ``K``-approximate group with ``K = |X|``, ``A^2 ⊆ XA``.

    The cover is the canonical greedy cover of ``A^2`` by left translates of
    ``A``.  The maximal disjoint-translate packing is also computed; it always
    satisfies ``|X0| ≤ |A^3|/|A|`` and ``A^2 ⊆ X0 A^2``.
    """
    A = as_symset(A)
    A2 = product_set(A, 2)
    A3 = product_set(A, 3)
    X = ElementSet(A.ctx, _greedy_cover(A.ctx, A2, A), "cover")
    packing = ruzsa_packing(A)
    cert = ApproxCertificate(
        A=A,
        X=X,
        K=len(X),
        doubling=Fraction(len(A2), len(A)),
        tripling=Fraction(len(A3), len(A)),
        packing_size=len(packing),
    )
    if covers(X, A, A2) is not None:
        raise AssertionError("greedy cover does not cover A^2")
    if cert.doubling > cert.K:
        raise AssertionError("doubling exceeds certified K")
    if not cert.within_ruzsa_bound:
        cert.notes.append("cover size exceeds |A^3|/|A|")
    return cert


# --------------------------------------------------------------------------
# section-2 inequalities
# --------------------------------------------------------------------------


def coset_representatives(A: ElementSet, H):
    """Canonical-first representatives ``X ⊆ A`` of the left cosets ``aH`` meeting ``A``."""
    ctx = A.ctx
    reps = []
    if ctx.finite and hasattr(H, "idx"):
        seen = set()
        Hidx = H.idx
        for a in A.keys():
            label = int(ctx.mul_idx(np.full(len(Hidx), a, dtype=np.int64), Hidx).min())
            if label not in seen:
                seen.add(label)
                reps.append(a)
        return reps
    inv = ctx.inv
    for a in A.keys():
        ia = inv(a)
        if not any(H.contains_key(ctx.mul(ia, r)) for r in reps):
            reps.append(a)
    return reps


def _claim(name, ok, **values):
    return {"name": name, "status": "pass" if ok else "fail", **values}


def verify_section2(A: SymSet, H, m: int, K) -> dict:
    """Check the covering, sandwich, Ruzsa-cover and intersection inequalities for ``(A, H)``.

    ``K`` is either an :class:`ApproxCertificate` for ``A`` or an integer at least
    the certified constant.  Failures indicate implementation bugs.
    """
    if m < 2:
        raise SpecError("m must be at least 2")
    cert = K if isinstance(K, ApproxCertificate) else certify_approx(A)
    Kval = cert.K if isinstance(K, ApproxCertificate) else int(K)
    if cert.K > Kval:
        raise SpecError(f"K={Kval} is below the certified constant {cert.K}")
    ctx = A.ctx
    claims = []

    A2 = product_set(A, 2)
    A3 = product_set(A, 3)
    Am = product_set(A, m)
    A2H = A2.restrict(H)
    AmH = Am.restrict(H)

    # A^m ∩ H is covered by K^(m-1) translates h_x (A^2 ∩ H), x ∈ X^(m-1)
    words = ElementSet(ctx, [ctx.identity])
    for _ in range(m - 1):
        words = mul_sets(words, cert.X)
    translates = []
    for x in words.keys():
        hit = A.translate(x).restrict(H)
        if len(hit):
            translates.append(hit.min_key())
    T = ElementSet(ctx, translates)
    miss = covers(T, A2H, AmH) if len(T) else (AmH.min_key() if len(AmH) else None)
    claims.append(
        _claim(
            "covering",
            miss is None and len(T) <= Kval ** (m - 1),
            translates=len(T),
            bound=Kval ** (m - 1),
            witness=None if miss is None else ctx.to_json(miss),
        )
    )

    # |A| <= |A^2 ∩ H| |AH/H| <= |A^3|, A ⊆ X (A^2 ∩ H)
    reps = ElementSet(ctx, coset_representatives(A, H))
    n_cos = len(reps)
    mid = len(A2H) * n_cos
    miss = covers(reps, A2H, A)
    claims.append(
        _claim(
            "sandwich",
            len(A) <= mid <= len(A3) and miss is None,
            lower=len(A),
            middle=mid,
            upper=len(A3),
            cosets=n_cos,
            witness=None if miss is None else ctx.to_json(miss),
        )
    )

    # |AH/H| <= K' K^2 with K' = |A| / |A^2 ∩ H|
    kprime = Fraction(len(A), len(A2H))
    claims.append(_claim("ruzsa_cover", n_cos <= kprime * Kval**2, cosets=n_cos, bound=str(kprime * Kval**2)))

    # |A^m ∩ H| <= |A^(m+1)| / |A| when A^2 ∩ H = {1}
    if len(A2H) == 1:
        Am1 = product_set(A, m + 1)
        claims.append(
            _claim("intersection", len(AmH) * len(A) <= len(Am1), lhs=len(AmH), rhs=str(Fraction(len(Am1), len(A))))
        )
    else:
        claims.append({"name": "intersection", "status": "skipped", "reason": "A^2 ∩ H is nontrivial"})

    return {
        "m": m,
        "K": Kval,
        "claims": claims,
        "passed": all(c["status"] != "fail" for c in claims),
    }


def centraliser_slice(A: SymSet, omega, m: int, K: int):
    """Most popular value of ``[ω, x]`` over ``x ∈ A``; returns ``(a, {x a^-1})``.

    Ties are broken by the canonical-minimal ``x`` realising a most popular
    value.  Every element of the slice commutes with ``ω``.
    """
    ctx = A.ctx
    w = ctx.key_of(omega)
    if not product_set(A, m).contains_key(w):
        raise SpecError("ω is not in A^m")
    keys = A.keys()
    if ctx.finite:
        idx = A.idx
        vals = ctx.commutator_idx(np.full(len(idx), w, dtype=np.int64), idx)
        uniq, inverse, counts = np.unique(vals, return_inverse=True, return_counts=True)
        best = counts.max()
        first = np.flatnonzero(counts[inverse] == best)[0]
        a = int(idx[first])
        cls = idx[vals == vals[first]]
        sl = ctx.mul_idx(cls, np.full(len(cls), ctx.inv(a), dtype=np.int64))
        slice_set = ElementSet(ctx, np.unique(sl), "slice", _trusted=True)
    else:
        tally = {}
        firsts = {}
        for x in keys:
            c = ctx.commutator(w, x)
            tally[c] = tally.get(c, 0) + 1
            firsts.setdefault(c, x)
        best = max(tally.values())
        a = min((firsts[c] for c in tally if tally[c] == best), key=ctx.sort_key)
        target = ctx.commutator(w, a)
        ia = ctx.inv(a)
        slice_set = ElementSet(ctx, [ctx.mul(x, ia) for x in keys if ctx.commutator(w, x) == target], "slice")
    return Element(ctx, a), slice_set


def slice_bound_holds(A: SymSet, slice_set: ElementSet, m: int, K: int) -> bool:
    """``|slice| ≥ |A| / K^(2m+2)``, exactly."""
    return len(slice_set) * K ** (2 * m + 2) >= len(A)


# --------------------------------------------------------------------------
# set specifications
# --------------------------------------------------------------------------


def _parse_ball_shorthand(text):
    # ball:gens=xy:r=2
    fields = dict(part.split("=", 1) for part in text.split(":")[1:] if "=" in part)
    if "gens" not in fields or "r" not in fields:
        raise SpecError(f"malformed ball shorthand {text!r}")
    return {"ball": {"gens": list(fields["gens"]), "radius": int(fields["r"])}}


def parse_set_shorthand(text):
    text = text.strip()
    if text.startswith("ball:"):
        return _parse_ball_shorthand(text)
    if text.startswith("interval:"):
        return {"interval": int(text.split(":", 1)[1])}
    if text == "whole":
        return {"whole": True}
    if text.startswith("subgroup:"):
        return {"subgroup": {"gens": list(text.split(":", 1)[1])}}
    raise SpecError(f"malformed set shorthand {text!r}")


def build_set(ctx: GroupCtx, spec) -> SymSet:
    """Build a symmetric set from a JSON spec or shorthand string.

    Accepted forms: an explicit element list (symmetrized), ``{"ball": {"gens",
    "radius"}}``, ``{"interval": N}``, ``{"power": {"set", "m"}}``,
    ``{"subgroup": {"gens"}}``, ``{"whole": true}`` and
    ``{"random": {"size", "seed"}}`` (finite contexts).
    """
    if isinstance(spec, str):
        spec = parse_set_shorthand(spec)
    if isinstance(spec, list):
        return symmetrize(ctx, spec)
    if not isinstance(spec, dict) or len(spec) != 1:
        raise SpecError("set spec must be a list or a single-key mapping")
    (kind, body), = spec.items()
    if kind == "ball":
        S = symmetrize(ctx, body["gens"])
        r = int(body["radius"])
        if r < 0:
            raise SpecError("radius must be non-negative")
        if r == 0:
            return SymSet(ctx, [ctx.identity], "ball")
        out = product_set(S, r)
        return SymSet(ctx, out._idx if ctx.finite else out._set, f"ball(r={r})", _trusted=True)
    if kind == "interval":
        N = int(body)
        gens = ctx.generators()
        if len(gens) != 1 or not ctx.is_abelian_ctx():
            raise SpecError("interval sets need a cyclic context")
        g = gens[0]
        return SymSet(ctx, [ctx.power(g, t) for t in range(-N, N + 1)], f"interval({N})")
    if kind == "power":
        base = build_set(ctx, body["set"])
        out = product_set(base, int(body["m"]))
        return SymSet(ctx, out._idx if ctx.finite else out._set, f"power(m={body['m']})", _trusted=True)
    if kind == "subgroup":
        from .subgroups import closure

        H = closure(ctx, body["gens"])
        return SymSet(ctx, H.idx, "subgroup", _trusted=True)
    if kind == "whole":
        if not ctx.finite:
            raise SpecError("the whole group is a finite set only in finite contexts")
        return SymSet(ctx, ctx.all_idx(), "whole", _trusted=True)
    if kind == "random":
        if not ctx.finite:
            raise SpecError("random sets need a finite context")
        rng = make_rng(int(body.get("seed", 0)))
        size = int(body["size"])
        picks = [ctx.random_key(rng) for _ in range(size)]
        return symmetrize(ctx, picks)
    raise SpecError(f"unknown set constructor {kind!r}")
