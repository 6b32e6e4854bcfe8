"""Subgroups of finite contexts, quotients, and the lower central series."""
from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import CapExceeded, SpecError, UnsupportedOperation
from .groups import Element, FiniteCtx, Homomorphism, TABLE_LIMIT
from .setcalc import MASK_LIMIT, ElementSet, SymSet

PAIR_AUDIT_LIMIT = 10**4
AUDIT_SAMPLES = 4096


class Subgroup(SymSet):
    """A finite subgroup given by generators together with its full element table."""

    is_subgroup = True

    __slots__ = ("gens",)

    def __init__(self, ctx, keys, gens, note="subgroup", _trusted=True):
        super().__init__(ctx, keys, note, _trusted=True)
        self.gens = [g for g in dict.fromkeys(gens) if g != ctx.identity]

    @property
    def order(self):
        return len(self)

    def generators(self):
        return [Element(self.ctx, g) for g in self.gens]

    def is_trivial(self):
        return len(self) == 1

    def audit(self, pair_limit=PAIR_AUDIT_LIMIT, samples=AUDIT_SAMPLES, seed=0):
        """Closure audit: every product of two table entries is in the table.

        Exhaustive for ``|H| <= pair_limit``; above that, random pairs plus the
        generator translates ``H·g``.
        """
        ctx = self.ctx
        if not self.contains_key(ctx.identity):
            return False
        if ctx.finite:
            idx = self.idx
            if len(idx) <= pair_limit:
                step = max(1, 4_000_000 // len(idx))
                for s in range(0, len(idx), step):
                    blk = idx[s:s + step]
                    prod = ctx.mul_idx(blk[:, None], idx[None, :]).ravel()
                    if not self.contains_idx(prod).all():
                        return False
            else:
                rng = np.random.default_rng(seed)
                a = rng.choice(idx, samples)
                b = rng.choice(idx, samples)
                if not self.contains_idx(ctx.mul_idx(a, b)).all():
                    return False
                for g in self.gens:
                    if not self.contains_idx(ctx.mul_idx(idx, np.full(len(idx), g, dtype=np.int64))).all():
                        return False
            return bool(self.contains_idx(ctx.inv_idx(idx)).all())
        keys = self.keys()
        if len(keys) <= pair_limit:
            return all(self.contains_key(ctx.mul(a, b)) for a in keys for b in keys)
        rng = np.random.default_rng(seed)
        picks = rng.integers(0, len(keys), size=(samples, 2))
        return all(self.contains_key(ctx.mul(keys[i], keys[j])) for i, j in picks)

    def to_json(self):
        return {"generators": [self.ctx.to_json(g) for g in self.gens], "order": len(self)}

    def __repr__(self):
        return f"Subgroup(order={len(self)}, gens={len(self.gens)})"


class PredicateSubgroup:
    """A (possibly infinite) subgroup known only through a membership test."""

    def __init__(self, ctx, predicate, name="H"):
        self.ctx = ctx
        self.predicate = predicate
        self.name = name

    def contains_key(self, k):
        return bool(self.predicate(k))

    def __repr__(self):
        return f"PredicateSubgroup({self.name})"


def kernel_subgroup(phi: Homomorphism):
    """``ker φ`` as a membership predicate."""
    return PredicateSubgroup(phi.source, phi.in_kernel, f"ker({phi.rule})")


# --------------------------------------------------------------------------
# closure
# --------------------------------------------------------------------------


def _closure_idx(ctx, gens):
    gens = np.unique(np.asarray(gens, dtype=np.int64))
    if len(gens) == 0:
        return np.zeros(1, dtype=np.int64)
    t = ctx.table()
    if t is not None:
        return kernels.table_closure(t, gens, 0)
    if ctx.order <= MASK_LIMIT:
        seen = np.zeros(ctx.order, dtype=bool)
        seen[0] = True
        frontier = np.zeros(1, dtype=np.int64)
        total = 1
        while len(frontier):
            cand = np.unique(ctx.mul_idx(frontier[:, None], gens[None, :]))
            new = cand[~seen[cand]]
            seen[new] = True
            total += len(new)
            if total > ctx.cap:
                raise CapExceeded(f"closure exceeded cap {ctx.cap}", partial=total)
            frontier = new
        return np.flatnonzero(seen).astype(np.int64)
    elems = np.zeros(1, dtype=np.int64)
    frontier = elems
    while len(frontier):
        cand = np.unique(ctx.mul_idx(frontier[:, None], gens[None, :]))
        new = np.setdiff1d(cand, elems)
        elems = np.union1d(elems, new)
        if len(elems) > ctx.cap:
            raise CapExceeded(f"closure exceeded cap {ctx.cap}", partial=len(elems))
        frontier = new
    return elems


def _closure_keys(ctx, gens):
    for g in gens:
        if ctx.infinite_order(g):
            raise UnsupportedOperation("closure is infinite; finitize through a quotient first")
    seen = {ctx.identity}
    frontier = [ctx.identity]
    allg = list(gens) + [ctx.inv(g) for g in gens]
    while frontier:
        nxt = []
        for x in frontier:
            for g in allg:
                y = ctx.mul(x, g)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        if len(seen) > ctx.cap:
            raise CapExceeded(f"closure exceeded cap {ctx.cap}", partial=len(seen))
        frontier = nxt
    return frozenset(seen)


def closure(ctx, gens, note="closure") -> Subgroup:
    """``⟨gens⟩`` by breadth-first search."""
    keys = [ctx.key_of(g) for g in gens]
    if ctx.finite:
        elems = _closure_idx(ctx, keys)
    else:
        elems = _closure_keys(ctx, keys)
    H = Subgroup(ctx, elems, keys, note)
    ctx.check_cap(len(H), "closure")
    return H


def trivial_subgroup(ctx):
    return Subgroup(ctx, np.zeros(1, dtype=np.int64) if ctx.finite else frozenset([ctx.identity]), [], "trivial")


def whole_group(ctx):
    if not ctx.finite:
        raise UnsupportedOperation("the whole group is not finite")
    return closure(ctx, ctx.generators(), "whole")


def subgroup_from_elements(ctx, elems, note="subgroup") -> Subgroup:
    """Wrap a set known to be a subgroup, choosing generators greedily in canonical order."""
    S = elems if isinstance(elems, ElementSet) else ElementSet(ctx, elems)
    gens = []
    cur = trivial_subgroup(ctx)
    target = len(S)
    if ctx.finite:
        idx = S.idx
        while len(cur) < target:
            miss = idx[~cur.contains_idx(idx)]
            gens.append(int(miss[0]))
            cur = closure(ctx, gens)
    else:
        for k in S.keys():
            if len(cur) == target:
                break
            if not cur.contains_key(k):
                gens.append(k)
                cur = closure(ctx, gens)
    if len(cur) != target or not S.issubset(cur):
        raise AssertionError("element set is not a subgroup")
    return Subgroup(ctx, cur._idx if ctx.finite else cur._set, gens, note)


def subgroup_join(H1: Subgroup, H2: Subgroup) -> Subgroup:
    """``⟨H1 ∪ H2⟩``."""
    H1._same(H2)
    if H2.issubset(H1):
        return H1
    if H1.issubset(H2):
        return H2
    return closure(H1.ctx, H1.gens + H2.gens, "join")


# --------------------------------------------------------------------------
# normality, centralizers, series
# --------------------------------------------------------------------------


def _conj_all(ctx, H: Subgroup, g):
    """Keys of ``g^-1 H g``."""
    if ctx.finite:
        return ctx.conj_idx(H.idx, np.full(len(H), g, dtype=np.int64))
    return [ctx.conj(h, g) for h in H.keys()]


def is_normal(H: Subgroup, G: Subgroup) -> bool:
    """``g^-1 h g ∈ H`` for all generators ``g`` of ``G`` and all ``h ∈ H``."""
    H._same(G)
    if not H.issubset(G):
        raise SpecError("H is not contained in G")
    return normality_witness(H, G) is None


def normality_witness(H, G):
    ctx = H.ctx
    for g in G.gens:
        conj = _conj_all(ctx, H, g)
        if ctx.finite:
            bad = ~H.contains_idx(conj)
            if bad.any():
                return (int(H.idx[np.argmax(bad)]), g)
        else:
            for h, c in zip(H.keys(), conj):
                if not H.contains_key(c):
                    return (h, g)
    return None


def normal_closure(ctx, elems, G: Subgroup, note="normal closure") -> Subgroup:
    """Smallest subgroup normalised by ``G`` containing ``elems``."""
    H = closure(ctx, elems, note)
    while True:
        new = []
        for g in G.gens:
            for h in H.gens:
                c = ctx.conj(h, g)
                if not H.contains_key(c):
                    new.append(c)
        if not new:
            return H
        H = closure(ctx, H.gens + sorted(set(new), key=ctx.sort_key), note)


def centralizer(G: Subgroup, omega) -> Subgroup:
    """``C_G(ω)`` by scanning ``G``."""
    ctx = G.ctx
    w = ctx.key_of(omega)
    if not G.contains_key(w):
        raise SpecError("ω is not in G")
    if ctx.finite:
        idx = G.idx
        comm = ctx.commutator_idx(np.full(len(idx), w, dtype=np.int64), idx)
        elems = idx[comm == 0]
    else:
        elems = [g for g in G.keys() if ctx.commutator(w, g) == ctx.identity]
    return subgroup_from_elements(ctx, elems, "centralizer")


def center(G: Subgroup) -> Subgroup:
    """``Z(G)``: elements commuting with every generator of ``G``."""
    ctx = G.ctx
    if ctx.finite:
        idx = G.idx
        ok = np.ones(len(idx), dtype=bool)
        for g in G.gens:
            ok &= ctx.commutator_idx(idx, np.full(len(idx), g, dtype=np.int64)) == 0
        elems = idx[ok]
    else:
        elems = [x for x in G.keys() if all(ctx.commutator(x, g) == ctx.identity for g in G.gens)]
    return subgroup_from_elements(ctx, elems, "center")


def commutator_of(H: Subgroup, K: Subgroup, within: Subgroup | None = None) -> Subgroup:
    """``[H, K]`` = normal closure in ``⟨H, K⟩`` of ``{[h, k] : h ∈ H, k ∈ gens(K)}``."""
    ctx = H.ctx
    if ctx.finite:
        vals = []
        for k in K.gens:
            vals.append(np.unique(ctx.commutator_idx(H.idx, np.full(len(H), k, dtype=np.int64))))
        comms = np.unique(np.concatenate(vals)) if vals else np.zeros(0, dtype=np.int64)
        comms = comms[comms != 0].tolist()
    else:
        comms = sorted({ctx.commutator(h, k) for h in H.keys() for k in K.gens} - {ctx.identity}, key=ctx.sort_key)
    ambient = within if within is not None else subgroup_join(H, K)
    # generators greedily: skip commutators already generated
    return normal_closure(ctx, _independent(ctx, comms), ambient, "commutator")


def _independent(ctx, keys):
    gens = []
    cur = trivial_subgroup(ctx)
    for k in keys:
        if not cur.contains_key(k):
            gens.append(k)
            cur = closure(ctx, gens)
    return gens


def lower_central_series(G: Subgroup):
    """``(series, step)`` with ``γ_1 = G``, ``γ_{i+1} = [γ_i, G]``.

    The series ends at the trivial subgroup when ``G`` is nilpotent; otherwise
    it ends at the first repeated term and ``step`` is ``None``.
    """
    series = [G]
    while not series[-1].is_trivial():
        nxt = commutator_of(series[-1], G, within=G)
        if len(nxt) == len(series[-1]):
            return series, None
        series.append(nxt)
    return series, len(series) - 1 if len(G) > 1 else 0


def is_nilpotent(G: Subgroup) -> bool:
    return lower_central_series(G)[1] is not None


def commutator_subgroup(G: Subgroup) -> Subgroup:
    """``[G, G]`` (the second term of the lower central series)."""
    return commutator_of(G, G, within=G)


def derived_commutator_subgroup(ctx, gens):
    """``[G, G]`` for ``G = ⟨gens⟩``; errors for infinite closures."""
    return commutator_subgroup(closure(ctx, gens))


# --------------------------------------------------------------------------
# quotients
# --------------------------------------------------------------------------


class QuotientCtx(FiniteCtx):
    """``G/N`` with cosets labelled by their canonical-minimal representative.

    Labels are ordered by representative, so the identity coset is label 0 and
    integer order on labels is the canonical order.
    """

    kind = "quotient"

    def __init__(self, G: Subgroup, N: Subgroup):
        parent = G.ctx
        if not parent.finite:
            raise UnsupportedOperation("quotients are built over finite contexts")
        super().__init__(parent.cap)
        self.parent = parent
        self.G = G
        self.N = N
        gidx = G.idx
        nidx = N.idx
        if len(nidx) == 1:
            labels = np.arange(len(gidx), dtype=np.int64)
            reps = gidx.copy()
        elif len(nidx) * len(nidx) <= len(gidx) and len(N.gens) < len(nidx):
            # cosets gN are the components of the graph g -- g·n over generators n of N
            rows = np.tile(np.arange(len(gidx)), len(N.gens))
            cols = np.concatenate(
                [np.searchsorted(gidx, parent.mul_idx(gidx, np.full(len(gidx), n, dtype=np.int64))) for n in N.gens]
            )
            graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(len(gidx), len(gidx)))
            _, comp = connected_components(graph, directed=False)
            # gidx is sorted, so a component's first position holds its least element
            _, first = np.unique(comp, return_index=True)
            order = np.argsort(first)
            rank = np.empty(len(order), dtype=np.int64)
            rank[order] = np.arange(len(order))
            labels = rank[comp]
            reps = gidx[np.sort(first)]
        else:
            labels = np.full(len(gidx), -1, dtype=np.int64)
            reps = []
            for pos in range(len(gidx)):
                if labels[pos] >= 0:
                    continue
                g = gidx[pos]
                coset = parent.mul_idx(np.full(len(nidx), g, dtype=np.int64), nidx)
                labels[np.searchsorted(gidx, coset)] = len(reps)
                reps.append(int(g))
            reps = np.asarray(reps, dtype=np.int64)
        self.labels = labels
        self.reps = reps
        self.order = len(reps)
        if self.order * len(N) != len(G):
            raise AssertionError("coset partition does not tile G")

    def label_of(self, x):
        x = np.asarray(x, dtype=np.int64)
        pos = np.searchsorted(self.G.idx, x)
        return self.labels[np.minimum(pos, len(self.labels) - 1)]

    def mul_idx(self, a, b):
        return self.label_of(self.parent.mul_idx(self.reps[np.asarray(a)], self.reps[np.asarray(b)]))

    def inv_idx(self, a):
        return self.label_of(self.parent.inv_idx(self.reps[np.asarray(a)]))

    def mul(self, a, b):
        return int(self.label_of(self.parent.mul(int(self.reps[a]), int(self.reps[b]))))

    def inv(self, a):
        return int(self.label_of(self.parent.inv(int(self.reps[a]))))

    def lift(self, k):
        return int(self.reps[k])

    def coords(self, k):
        return self.parent.coords(int(self.reps[k]))

    def from_coords(self, c):
        return self._project(self.parent.from_coords(c))

    def _project(self, x):
        if not self.G.contains_key(x):
            raise SpecError("element is not in the group being quotiented")
        return int(self.label_of(x))

    def key_of(self, obj):
        if isinstance(obj, Element) and obj.ctx == self.parent:
            return self._project(obj.key)
        if isinstance(obj, str):
            return self._project(self.parent.parse_word(obj))
        return super().key_of(obj)

    def to_json(self, k):
        return self.parent.to_json(int(self.reps[k]))

    def generators(self):
        return sorted({int(self.label_of(g)) for g in self.G.gens} - {0})

    def spec(self):
        return {
            "kind": "quotient",
            "parent": self.parent.spec(),
            "G": [self.parent.to_json(g) for g in self.G.gens],
            "G_order": len(self.G),
            "N": [self.parent.to_json(g) for g in self.N.gens],
            "N_order": len(self.N),
        }


class QuotientMap(Homomorphism):
    rule = "quotient"

    def __init__(self, Q: QuotientCtx):
        super().__init__(Q.parent, Q)

    def apply_key(self, k):
        return self.target._project(k)

    def apply_idx(self, arr):
        return self.target.label_of(arr)

    def image(self, S: ElementSet) -> ElementSet:
        return ElementSet(self.target, np.unique(self.apply_idx(S.idx)), "image", _trusted=True)

    def image_subgroup(self, H: Subgroup) -> Subgroup:
        Q = self.target
        return Subgroup(Q, np.unique(self.apply_idx(H.idx)), [int(x) for x in self.apply_idx(np.asarray(H.gens, dtype=np.int64))], "image")

    def preimage(self, S: ElementSet) -> ElementSet:
        Q = self.target
        mask = S.contains_idx(Q.labels)
        return ElementSet(Q.parent, Q.G.idx[mask], "preimage", _trusted=True)

    def pullback(self, Hq: Subgroup) -> Subgroup:
        """``π^-1(Hq)`` as a subgroup of the parent."""
        Q = self.target
        elems = self.preimage(Hq)
        gens = [Q.lift(g) for g in Hq.gens] + list(Q.N.gens)
        return Subgroup(Q.parent, elems.idx, gens, "pullback")


def quotient(G: Subgroup, N: Subgroup):
    """``(G/N, projection)``; ``N`` must be normal in ``G``."""
    if not N.issubset(G):
        raise SpecError("N is not contained in G")
    wit = normality_witness(N, G)
    if wit is not None:
        raise SpecError(f"N is not normal in G (conjugating {wit[0]} by {wit[1]} leaves N)")
    Q = QuotientCtx(G, N)
    return Q, QuotientMap(Q)


def verify_quotient(Q: QuotientCtx, limit=10**3) -> bool:
    """Projection of products equals product of projections on representative pairs."""
    n = Q.order
    if n > limit:
        rng = np.random.default_rng(0)
        a = rng.integers(0, n, 4096)
        b = rng.integers(0, n, 4096)
    else:
        a = np.repeat(np.arange(n), n)
        b = np.tile(np.arange(n), n)
    # any elements of the cosets, not only the representatives
    nidx = Q.N.idx
    pick = nidx[np.arange(len(a)) % len(nidx)]
    ga = Q.parent.mul_idx(Q.reps[a], pick)
    gb = Q.parent.mul_idx(Q.reps[b], nidx[::-1][np.arange(len(b)) % len(nidx)])
    lhs = Q.label_of(Q.parent.mul_idx(ga, gb))
    rhs = Q.mul_idx(Q.label_of(ga), Q.label_of(gb))
    return bool(np.array_equal(lhs, rhs))


def generated_by(S: ElementSet, extra_gens=(), note="generated") -> Subgroup:
    """``⟨S ∪ extra⟩`` with generators chosen greedily in canonical order."""
    ctx = S.ctx
    gens = list(extra_gens)
    cur = closure(ctx, gens, note) if gens else trivial_subgroup(ctx)
    if ctx.finite:
        idx = S.idx
        while True:
            miss = idx[~cur.contains_idx(idx)]
            if len(miss) == 0:
                break
            gens.append(int(miss[0]))
            cur = closure(ctx, gens, note)
    else:
        for k in S.keys():
            if not cur.contains_key(k):
                gens.append(k)
                cur = closure(ctx, gens, note)
    return cur
