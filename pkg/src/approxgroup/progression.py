"""Nilprogressions, the abelian coset-progression fitter, and coset nilprogressions."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import CapExceeded, SearchExhausted, SpecError
from .groups import Element, simple_commutator_key
from .setcalc import ElementSet, SymSet, as_symset, cover_translates, product_set
from .subgroups import (
    Subgroup,
    closure,
    lower_central_series,
    normality_witness,
    quotient,
    trivial_subgroup,
)

MAX_STEP_WEIGHT = 12


@dataclass
class Nilprogression:
    ctx: object
    generators: list
    bounds: list
    step: int | None
    elements: SymSet | None = None

    @property
    def rank(self):
        return len(self.generators)

    def to_json(self):
        return {
            "generators": [self.ctx.to_json(x) for x in self.generators],
            "bounds": list(self.bounds),
            "step": self.step,
            "rank": self.rank,
        }


def enumerate_nilprogression(ctx, xs, Ls) -> SymSet:
    """``P(x_1..x_r; L)``: all words in which ``x_i^{±1}`` occur at most ``L_i`` times in total.

    Breadth-first over states ``(element, usage)``, deduplicated, so words are
    visited by total length.
    """
    keys = [ctx.key_of(x) for x in xs]
    Ls = [int(L) for L in Ls]
    if len(keys) != len(Ls):
        raise SpecError("need one bound per generator")
    if any(L < 0 for L in Ls):
        raise SpecError("bounds must be non-negative")
    letters = []
    for i, x in enumerate(keys):
        letters.append((i, x))
        letters.append((i, ctx.inv(x)))
    start = (ctx.identity, (0,) * len(keys))
    seen = {start}
    elems = {ctx.identity}
    frontier = [start]
    while frontier:
        nxt = []
        for g, used in frontier:
            for i, x in letters:
                if used[i] >= Ls[i]:
                    continue
                u = used[:i] + (used[i] + 1,) + used[i + 1:]
                st = (ctx.mul(g, x), u)
                if st not in seen:
                    seen.add(st)
                    nxt.append(st)
                    elems.add(st[0])
        if len(seen) > ctx.cap:
            raise CapExceeded(f"nilprogression enumeration exceeded cap {ctx.cap}", partial=len(elems))
        frontier = nxt
    return SymSet(ctx, list(elems), "nilprogression")


def generated_step(ctx, keys, max_weight=MAX_STEP_WEIGHT):
    """Nilpotency step of ``⟨keys⟩`` via vanishing of simple commutators in the generators.

    Returns ``None`` if some simple commutator of weight ``max_weight`` is nontrivial.
    """
    keys = [k for k in keys if k != ctx.identity]
    if not keys:
        return 0
    if ctx.finite:
        _, s = lower_central_series(closure(ctx, keys))
        return s
    layer = list(dict.fromkeys(keys))
    for weight in range(2, max_weight + 1):
        nxt = set()
        for c in layer:
            for x in keys:
                v = ctx.commutator(c, x)
                if v != ctx.identity:
                    nxt.add(v)
        if not nxt:
            return weight - 1
        layer = ctx.sorted(nxt)
    return None


def make_nilprogression(ctx, xs, Ls) -> Nilprogression:
    keys = [ctx.key_of(x) for x in xs]
    P = enumerate_nilprogression(ctx, keys, Ls)
    return Nilprogression(ctx, keys, list(Ls), generated_step(ctx, keys), P)


# --------------------------------------------------------------------------
# abelian fitting
# --------------------------------------------------------------------------


@dataclass
class FitResult:
    found: bool
    H: Subgroup | None = None
    progression: Nilprogression | None = None
    rank: int | None = None
    exponent: int | None = None
    searched: dict = field(default_factory=dict)

    def coset_progression(self):
        """``H + P`` as a set."""
        ctx = self.H.ctx
        return _sumset(ctx, self.H.keys(), self.progression.elements.keys())

    def to_json(self):
        if not self.found:
            return {"found": False, "searched": self.searched}
        return {
            "found": True,
            "H": self.H.to_json(),
            "progression": self.progression.to_json(),
            "rank": self.rank,
            "exponent": self.exponent,
        }


def _sumset(ctx, X, Y):
    mul = ctx.mul
    return {mul(x, y) for x in X for y in Y}


def _is_commutative(ctx, keys):
    if ctx.is_abelian_ctx():
        return True
    if ctx.finite:
        gens = []
        cur = trivial_subgroup(ctx)
        for k in keys:
            if not cur.contains_key(k):
                gens.append(k)
                cur = closure(ctx, gens)
    else:
        gens = list(dict.fromkeys(keys))
    return all(ctx.commutator(a, b) == ctx.identity for a, b in itertools.combinations(gens, 2))


def _subgroups_inside(ctx, region: set, pool, limit=64):
    """Finite subgroups contained in ``region`` built from cyclic pieces ``⟨a⟩``, ``a ∈ pool``."""
    cyclic = {}
    for a in pool:
        if ctx.infinite_order(a):
            continue
        elems = [ctx.identity]
        x = a
        ok = True
        while x != ctx.identity:
            if x not in region:
                ok = False
                break
            elems.append(x)
            x = ctx.mul(x, a)
            if len(elems) > len(region):
                ok = False
                break
        if ok and len(elems) > 1:
            key = frozenset(elems)
            cyclic.setdefault(key, a)
    found = {frozenset([ctx.identity]): []}
    for elems, a in sorted(cyclic.items(), key=lambda t: (len(t[0]), ctx.sort_key(t[1]))):
        found.setdefault(elems, [a])
    changed = True
    while changed and len(found) < limit:
        changed = False
        items = sorted(found.items(), key=lambda t: (len(t[0]), [ctx.sort_key(g) for g in t[1]]))
        for (e1, g1), (e2, g2) in itertools.combinations(items, 2):
            if e1 <= e2 or e2 <= e1:
                continue
            joined = _sumset(ctx, e1, e2)
            # in a commutative setting the product of two subgroups is a subgroup
            if joined <= region:
                key = frozenset(joined)
                if key not in found:
                    found[key] = g1 + g2
                    changed = True
                    if len(found) >= limit:
                        break
    out = sorted(found.items(), key=lambda t: (-len(t[0]), [ctx.sort_key(g) for g in t[1]]))
    return out


def _progression_box(ctx, H, xs, Ls):
    """``H + P(x; L)`` for commuting generators (a box)."""
    cur = set(H)
    mul, inv = ctx.mul, ctx.inv
    for x, L in zip(xs, Ls):
        steps = [ctx.identity]
        p, q = ctx.identity, ctx.identity
        ix = inv(x)
        for _ in range(L):
            p, q = mul(p, x), mul(q, ix)
            steps.extend((p, q))
        cur = {mul(c, s) for c in cur for s in steps}
    return cur


def _line_limit(ctx, H, x, region, upto):
    """Largest useful ``l <= upto`` with ``H + {jx : |j| <= l} ⊆ region``.

    Stops early once the line wraps around (a larger bound adds nothing).
    """
    mul = ctx.mul
    p, q = ctx.identity, ctx.identity
    ix = ctx.inv(x)
    line = set(H)
    for l in range(1, upto + 1):
        p, q = mul(p, x), mul(q, ix)
        layer = {mul(h, p) for h in H} | {mul(h, q) for h in H}
        if not layer <= region:
            return l - 1
        if layer <= line:
            return l - 1
        line |= layer
    return upto


def abelian_freiman_fit(
    A: SymSet, rank_cap: int = 3, exp_cap: int = 4, work_cap: int = 20_000_000, prefer: str = "rank"
) -> FitResult:
    """Search for ``H`` and ``P(x; L)`` with ``A ⊆ H + P ⊆ A^e``.

    With ``prefer="rank"`` the outer loop runs over rank ``r = 0..rank_cap``
    and the inner over ``e = 1..exp_cap``, so the first hit has least rank;
    ``prefer="exponent"`` swaps the loops (least exponent, then least rank);
    ``H`` runs over subgroups of ``⟨A^4⟩`` contained in ``A^4`` (largest
    first), generators over ``A^min(4,e)`` in canonical order (one of each
    inverse pair, skipping elements of ``H``).  For each generator tuple the
    bounds are deepened by total size.  The first hit is returned.
    """
    A = as_symset(A)
    ctx = A.ctx
    if not _is_commutative(ctx, A.keys()):
        raise SpecError("abelian fitting needs a commutative set")
    target = set(A.keys())
    A4 = set(product_set(A, 4).keys())
    Hs = _subgroups_inside(ctx, A4, ctx.sorted(A4))
    work = 0
    powers = {e: set(product_set(A, e).keys()) for e in range(1, exp_cap + 1)}
    if prefer == "rank":
        order = [(r, e) for r in range(rank_cap + 1) for e in range(1, exp_cap + 1)]
    elif prefer == "exponent":
        order = [(r, e) for e in range(1, exp_cap + 1) for r in range(rank_cap + 1)]
    else:
        raise SpecError(f"prefer must be 'rank' or 'exponent', not {prefer!r}")
    for r, e in order:
        Ae = powers[e]
        pool_src = ctx.sorted(powers[min(4, e)])
        for Hset, Hgens in Hs:
            if not Hset <= Ae:
                continue
            if r == 0:
                if target <= Hset:
                    return _fit_result(ctx, Hset, Hgens, [], [], e)
                continue
            pool = []
            seen = set()
            for x in pool_src:
                if x in Hset or x in seen:
                    continue
                xi = ctx.inv(x)
                seen.update((x, xi))
                rep = max(x, xi, key=ctx.sort_key)
                lim = _line_limit(ctx, Hset, rep, Ae, len(Ae))
                if lim >= 1:
                    pool.append((rep, lim))
            pool.sort(key=lambda t: ctx.sort_key(t[0]))
            Hlist = list(Hset)
            for combo in itertools.combinations(pool, r):
                xs = [c[0] for c in combo]
                lims = [c[1] for c in combo]
                size_bound = len(Hset)
                for L in lims:
                    size_bound *= 2 * L + 1
                if size_bound < len(target):
                    continue
                failed = []
                for total in range(r, sum(lims) + 1):
                    for Ls in _compositions(total, lims):
                        if any(all(a >= b for a, b in zip(Ls, f)) for f in failed):
                            continue
                        box = _progression_box(ctx, Hlist, xs, Ls)
                        work += len(box)
                        if work > work_cap:
                            return FitResult(False, searched={"exponent": e, "rank": r, "work": work, "reason": "work cap"})
                        if not box <= Ae:
                            failed.append(Ls)
                            continue
                        if target <= box:
                            return _fit_result(ctx, Hset, Hgens, xs, list(Ls), e)
    return FitResult(False, searched={"exp_cap": exp_cap, "rank_cap": rank_cap, "work": work, "reason": "exhausted"})


def _compositions(total, lims):
    """Vectors ``L`` with ``1 <= L_i <= lims_i`` and ``sum L = total``, lexicographic."""
    r = len(lims)
    if r == 1:
        if 1 <= total <= lims[0]:
            yield (total,)
        return
    rest_max = sum(lims[1:])
    for first in range(1, lims[0] + 1):
        rem = total - first
        if rem < r - 1:
            break
        if rem > rest_max:
            continue
        for tail in _compositions(rem, lims[1:]):
            yield (first,) + tail


def _fit_result(ctx, Hset, Hgens, xs, Ls, e):
    if ctx.finite:
        H = Subgroup(ctx, sorted(Hset), Hgens, "fit subgroup", _trusted=False)
    else:
        H = Subgroup(ctx, frozenset(Hset), Hgens, "fit subgroup")
    P = make_nilprogression(ctx, xs, Ls)
    return FitResult(True, H, P, len(xs), e)


def verify_fit(A: SymSet, fit: FitResult) -> bool:
    """``A ⊆ H + P ⊆ A^e``, exhaustively."""
    if not fit.found:
        return False
    box = fit.coset_progression()
    Ae = set(product_set(A, fit.exponent).keys())
    return set(A.keys()) <= box <= Ae and fit.H.audit()


# --------------------------------------------------------------------------
# coset nilprogressions
# --------------------------------------------------------------------------


@dataclass
class CosetNilprogression:
    H: Subgroup
    C: Subgroup
    progression: Nilprogression
    QH: ElementSet
    exponent: int | None
    cover: ElementSet
    checks: list = field(default_factory=list)

    @property
    def rank(self):
        return self.progression.rank

    @property
    def step(self):
        return self.progression.step

    def to_json(self):
        return {
            "H": self.H.to_json(),
            "C": self.C.to_json(),
            "progression": self.progression.to_json(),
            "size": len(self.QH),
            "achieved_exponent": self.exponent,
            "cover_size": len(self.cover),
            "checks": self.checks,
        }


def minimal_exponent(A: SymSet, S: ElementSet, limit: int = 256):
    """Least ``m`` with ``S ⊆ A^m`` (``None`` if the powers stabilise first or ``limit`` is hit)."""
    prev = 0
    for m in range(1, limit + 1):
        Am = product_set(A, m)
        if S.issubset(Am):
            return m
        if len(Am) == prev:
            return None
        prev = len(Am)
    return None


def _word_lengths(Q, T_keys, cand_keys):
    """Word length over ``T`` (identity has length 0) for each candidate, by BFS."""
    dist = {Q.identity: 0}
    frontier = [Q.identity]
    want = set(cand_keys)
    d = 0
    while frontier and not want <= dist.keys():
        d += 1
        nxt = []
        for g in frontier:
            for t in T_keys:
                y = Q.mul(g, t)
                if y not in dist:
                    dist[y] = d
                    nxt.append(y)
        frontier = nxt
    return dist


def coset_nilprogression_fit(A: SymSet, structure, K: int | None = None, max_bound: int = 64) -> CosetNilprogression:
    """Fit ``QH`` with ``A ⊆ X·QH``, ``Q`` a nilprogression in ``C/H``.

    Generators come from the image of ``A^6 ∩ C`` ordered by word length over
    the image ``T`` of ``A^2 ∩ C`` and then canonically, one per inverse pair,
    skipping any already generated; the bounds are deepened uniformly until
    ``T ⊆ Q`` and then lowered coordinate-wise while coverage persists.
    """
    from .structure import StructureResult  # noqa: F401  (type reference)

    A = as_symset(A)
    ctx = A.ctx
    H, C = structure.H, structure.C
    Kval = K if K is not None else structure.K
    Q, pi = quotient(C, H)
    A2C = product_set(A, 2).restrict(C)
    A6C = product_set(A, 6).restrict(C)
    T = sorted(set(pi.apply_idx(A2C.idx).tolist()))
    cands = sorted(set(pi.apply_idx(A6C.idx).tolist()))
    dist = _word_lengths(Q, T, cands)
    order = sorted(cands, key=lambda c: (dist.get(c, 1 << 30), c))
    Tset = ElementSet(Q, T)
    gens = []
    cur = trivial_subgroup(Q)
    seen = set()
    for c in order:
        if Tset.issubset(cur):
            break
        if c == 0 or c in seen:
            continue
        seen.update((c, Q.inv(c)))
        if cur.contains_key(c):
            continue
        gens.append(c)
        cur = closure(Q, gens)
    if not Tset.issubset(cur):
        raise SearchExhausted("image of A^6 ∩ C does not generate the image of A^2 ∩ C")
    r = len(gens)
    bounds = None
    for t in range(0, max_bound + 1):
        P = enumerate_nilprogression(Q, gens, [t] * r)
        if Tset.issubset(P):
            bounds = [t] * r
            break
    if bounds is None:
        raise SearchExhausted(f"no uniform bound up to {max_bound} covers the image of A^2 ∩ C")
    for i in range(r):
        while bounds[i] > 0:
            trial = bounds[:i] + [bounds[i] - 1] + bounds[i + 1:]
            if Tset.issubset(enumerate_nilprogression(Q, gens, trial)):
                bounds = trial
            else:
                break
    Pset = enumerate_nilprogression(Q, gens, bounds)
    step = generated_step(Q, gens)
    prog = Nilprogression(Q, gens, bounds, step, Pset)
    QH = pi.preimage(Pset)
    QH = SymSet(ctx, QH.idx, "coset nilprogression", _trusted=True)
    m = minimal_exponent(A, QH)
    X = cover_translates(A, QH)
    checks = [
        {"name": "H_normal_in_C", "status": "pass" if H.issubset(C) and normality_witness(H, C) is None else "fail"},
        {"name": "QH_in_C", "status": "pass" if QH.issubset(C) else "fail"},
        {"name": "QH_symmetric", "status": "pass" if QH.is_symmetric() and QH.contains_key(ctx.identity) else "fail"},
        {"name": "image_covered", "status": "pass" if Tset.issubset(Pset) else "fail"},
        {"name": "QH_in_power", "status": "pass" if m is not None else "fail", "achieved_exponent": m},
        {
            "name": "step_bound",
            "status": "pass" if step is not None and step <= Kval**6 else "fail",
            "step": step,
            "bound": Kval**6,
        },
        {"name": "cover", "status": "pass" if A.issubset(_mulset(X, QH)) else "fail", "size": len(X)},
    ]
    return CosetNilprogression(H, C, prog, QH, m, X, checks)


def _mulset(X, Y):
    from .setcalc import mul_sets

    return mul_sets(X, Y)
