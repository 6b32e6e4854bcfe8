"""Finite nilpotent quotients faithful on a power of ``A``, and lifting back.

A :class:`QuotientFamily` lists candidate homomorphisms ``π`` into finite
nilpotent contexts in a fixed order.  :func:`kernel_clear_hom` picks the first
one with ``A^w ∩ ker π = {1}``; the structure algorithms run on ``π(A)`` and
:func:`lift_subgroup` transports subgroups back through the unique-preimage
map ``φ``.

Kernel clearance is decided either by evaluating ``π`` on all of ``A^w`` or,
for reductions of integer contexts, by an exact bound on the entries of
``A^w`` (see :func:`kernel_clear`).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .errors import (
    CapExceeded,
    FamilyExhausted,
    HypothesisViolation,
    SpecError,
    VerificationFailure,
)
from .groups import (
    AbelianCtx,
    FiniteAbelianCtx,
    FiniteProductCtx,
    FreeCtx,
    GeneratorImages,
    IdentityHom,
    Reduction,
    UTIntCtx,
    UTModCtx,
    commutator_word_length,
    make_context,
    make_rng,
)
from .setcalc import ElementSet, SymSet, as_symset, certify_approx, cover_translates, product_set
from .subgroups import Subgroup, closure, quotient
from .structure import _prop, minimal_power, nilpotent_structure, torsion_structure

ENUMERATION_LIMIT = 200_000
TUPLE_LIMIT = 10**4
MAX_PASSES = 8
_NILPOTENT_TARGETS = (UTModCtx, FiniteAbelianCtx)


def _is_nilpotent_target(ctx):
    if isinstance(ctx, _NILPOTENT_TARGETS):
        return True
    if isinstance(ctx, FiniteProductCtx):
        return all(_is_nilpotent_target(f) for f in ctx.factors)
    return False


# --------------------------------------------------------------------------
# families
# --------------------------------------------------------------------------


class QuotientFamily:
    """An ordered family of homomorphisms from ``source`` into finite nilpotent contexts."""

    def __init__(self, source, members, spec=None):
        self.source = source
        self.members = list(members)
        self.spec = spec
        for phi in self.members:
            if phi.source != source:
                raise SpecError("family member has the wrong source context")
            if not _is_nilpotent_target(phi.target):
                raise SpecError(f"family member target {phi.target.spec()} is not a finite nilpotent context")

    @classmethod
    def from_spec(cls, source, spec):
        """``{"mod_range": [lo, hi]}``, ``{"generator_images": [...], "target": ...}`` or ``{"identity": true}``."""
        if isinstance(spec, str):
            spec = {"identity": True} if spec == "identity" else None
        if not isinstance(spec, dict):
            raise SpecError("family spec must be a mapping")
        if spec.get("identity"):
            return cls(source, [IdentityHom(source)], spec)
        if "mod_range" in spec:
            lo, hi = (int(v) for v in spec["mod_range"])
            if lo < 2 or hi < lo:
                raise SpecError("mod_range needs 2 <= lo <= hi")
            return cls(source, [_reduction(source, m) for m in range(lo, hi + 1)], spec)
        if "generator_images" in spec:
            if not isinstance(source, FreeCtx):
                raise SpecError("generator-image families need a free-group source")
            members = []
            default_target = spec.get("target")
            for entry in spec["generator_images"]:
                if isinstance(entry, dict):
                    target = make_context(entry.get("target", default_target))
                    images = entry["images"]
                else:
                    target = make_context(default_target)
                    images = entry
                members.append(GeneratorImages(source, target, images))
            return cls(source, members, spec)
        raise SpecError(f"unrecognised family spec {spec!r}")

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def verify_member(self, phi, pairs=256, seed=0) -> bool:
        """Spot-check that ``phi`` preserves identity and products on random pairs."""
        src, tgt = phi.source, phi.target
        if phi.apply_key(src.identity) != tgt.identity:
            return False
        rng = make_rng(seed)
        for _ in range(pairs):
            a, b = src.random_key(rng), src.random_key(rng)
            if phi.apply_key(src.mul(a, b)) != tgt.mul(phi.apply_key(a), phi.apply_key(b)):
                return False
        return True


def _reduction(source, m):
    if isinstance(source, UTIntCtx):
        return Reduction(source, UTModCtx(source.n, m, source.cap))
    if isinstance(source, AbelianCtx):
        return Reduction(source, FiniteAbelianCtx([m if s == 0 else s for s in source.moduli], source.cap))
    raise SpecError("mod_range families need an integer unitriangular or abelian source")


# --------------------------------------------------------------------------
# kernel clearance
# --------------------------------------------------------------------------


@dataclass
class KernelEvidence:
    clear: bool | None
    method: str
    power: int
    detail: dict = field(default_factory=dict)

    def to_json(self):
        return {"clear": self.clear, "method": self.method, "power": self.power, **self.detail}


def _heisenberg_extent(A, w):
    """Reachable ``(a, b)`` box and exact extremes of the corner entry over ``A^w`` (``n = 3``).

    ``(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')``, so for fixed ``(a, b)`` the
    largest and smallest corner entries obey a max-plus recursion.
    """
    pts = [(k[0], k[2], k[1]) for k in A.keys()]
    ra = max(abs(p[0]) for p in pts) * w
    rb = max(abs(p[1]) for p in pts) * w
    NEG = np.iinfo(np.int64).min // 4
    shape = (2 * ra + 1, 2 * rb + 1)
    hi = np.full(shape, NEG, dtype=np.int64)
    lo = np.full(shape, -NEG, dtype=np.int64)
    hi[ra, rb] = lo[ra, rb] = 0
    avals = np.arange(-ra, ra + 1, dtype=np.int64)[:, None]
    for _ in range(w):
        nhi = np.full(shape, NEG, dtype=np.int64)
        nlo = np.full(shape, -NEG, dtype=np.int64)
        reach = hi > NEG
        for a, b, c in pts:
            gain = c + avals * b
            src_hi = np.where(reach, hi + gain, NEG)
            src_lo = np.where(reach, lo + gain, -NEG)
            sa = slice(max(0, a), shape[0] + min(0, a))
            da = slice(max(0, -a), shape[0] + min(0, -a))
            sb = slice(max(0, b), shape[1] + min(0, b))
            db = slice(max(0, -b), shape[1] + min(0, -b))
            np.maximum(nhi[sa, sb], src_hi[da, db], out=nhi[sa, sb])
            np.minimum(nlo[sa, sb], src_lo[da, db], out=nlo[sa, sb])
        hi, lo = nhi, nlo
    reach = hi > NEG
    ia, ib = np.nonzero(reach)
    return {
        "max_abs_a": int(np.abs(ia - ra).max()),
        "max_abs_b": int(np.abs(ib - rb).max()),
        "corner_max_at_origin": int(hi[ra, rb]),
        "corner_min_at_origin": int(lo[ra, rb]),
    }


def _entry_bound(A, w):
    """Bound on all off-diagonal entries of elements of ``A^w`` for ``ut_int(n)``.

    Each factor is ``I + N`` with ``‖N‖_∞ <= β``; the product minus ``I`` is a
    sum of products of at most ``n-1`` of the ``N``'s (``N`` is nilpotent).
    """
    ctx = A.ctx
    beta = 0
    for k in A.keys():
        rows = ctx.matrix(k)
        beta = max(beta, max(sum(abs(x) for j, x in enumerate(r) if j != i) for i, r in enumerate(rows)))
    return sum(comb(w, j) * beta**j for j in range(1, ctx.n))


def kernel_clear(A: SymSet, w: int, phi, enumeration_limit=ENUMERATION_LIMIT) -> KernelEvidence:
    """Decide whether ``A^w ∩ ker φ = {1}``.

    Exact enumeration when ``A^w`` fits within ``enumeration_limit``; otherwise
    a sufficient entry-bound argument for reductions of integer contexts
    (``clear = None`` when that argument is inconclusive).
    """
    A = as_symset(A)
    src = A.ctx
    if isinstance(phi, IdentityHom):
        return KernelEvidence(True, "identity", w)
    # the bound data depend on A and w only, not on the family member
    memo = A._cache.setdefault("kernel_bounds", {})
    fits = memo.get(("fits", w, enumeration_limit))
    if fits is None and not src.finite:
        fits = memo[("fits", w, enumeration_limit)] = _power_fits(A, w, enumeration_limit)
    if src.finite or fits:
        P = product_set(A, w)
        img = phi.apply_keys(P.keys())
        ident = phi.target.identity
        for k, v in zip(P.keys(), img):
            if v == ident and k != src.identity:
                return KernelEvidence(False, "enumeration", w, {"witness": src.to_json(k), "size": len(P)})
        return KernelEvidence(True, "enumeration", w, {"size": len(P)})
    if isinstance(phi, Reduction) and isinstance(src, UTIntCtx):
        m = phi.target.m
        if src.n == 3:
            ext = memo.get(("extent", w))
            if ext is None:
                ext = memo[("extent", w)] = _heisenberg_extent(A, w)
            ok = (
                ext["max_abs_a"] < m
                and ext["max_abs_b"] < m
                and ext["corner_max_at_origin"] < m
                and -ext["corner_min_at_origin"] < m
            )
            return KernelEvidence(True if ok else None, "corner-extent", w, dict(ext, modulus=m))
        bound = memo.get(("entry", w))
        if bound is None:
            bound = memo[("entry", w)] = _entry_bound(A, w)
        return KernelEvidence(True if bound < m else None, "entry-bound", w, {"bound": bound, "modulus": m})
    if isinstance(phi, Reduction) and isinstance(src, AbelianCtx):
        tgt = phi.target.moduli
        if any(s != 0 and s != t for s, t in zip(src.moduli, tgt)):
            return KernelEvidence(None, "coordinate-bound", w)
        keys = A.keys()
        bounds = [w * max(abs(k[i]) for k in keys) for i in range(len(src.moduli))]
        ok = all(b < t for s, t, b in zip(src.moduli, tgt, bounds) if s == 0)
        return KernelEvidence(True if ok else None, "coordinate-bound", w, {"bounds": bounds, "moduli": list(tgt)})
    raise CapExceeded(f"A^{w} exceeds the enumeration limit and no bound argument applies", partial=enumeration_limit)


def _power_fits(A, w, limit):
    prev = 0
    for e in range(1, w + 1):
        n = len(product_set(A, e))
        if n > limit:
            return False
        if n == prev:
            return True
        prev = n
        # growth estimate: stop early if the next powers clearly overshoot
        if e >= 2 and n * (n / max(1, len(product_set(A, e - 1)))) ** (w - e) > 50 * limit:
            return False
    return True


def kernel_clear_hom(A: SymSet, M: int, fam: QuotientFamily, return_evidence: bool = False):
    """First member ``π`` of ``fam`` with ``A^(4M) ∩ ker π = {1}``."""
    return _first_clear(A, 4 * M, fam, return_evidence)


def _first_clear(A, w, fam, return_evidence=False):
    A = as_symset(A)
    if A.ctx != fam.source:
        raise SpecError("A is not in the family's source context")
    last = None
    for i, phi in enumerate(fam):
        ev = kernel_clear(A, w, phi)
        if ev.clear:
            ev.detail["member"] = i
            return (phi, ev) if return_evidence else phi
        last = ev
    witness = None if last is None else last.detail.get("witness")
    raise FamilyExhausted(f"no family member has A^{w} ∩ ker π trivial", witness=witness, index=len(fam))


# --------------------------------------------------------------------------
# lifting subgroups
# --------------------------------------------------------------------------


@dataclass
class SubgroupLift:
    subgroup: Subgroup
    transport: dict
    multiplicative: bool
    normal: bool | None

    def to_json(self):
        return {
            "order": len(self.subgroup),
            "generators": [self.subgroup.ctx.to_json(g) for g in self.subgroup.gens],
            "multiplicative": self.multiplicative,
            "normal": self.normal,
        }


def lift_subgroup(phi, A: SymSet, H: Subgroup, check_normal: bool = True) -> SubgroupLift:
    """``H' = φ(H)`` where ``φ(h)`` is the unique ``a ∈ A`` with ``π(a) = h``.

    Requires ``A^3 ∩ ker π = {1}``; normality of ``H'`` in ``⟨A⟩`` is checked when
    ``A^4 ∩ ker π = {1}`` and ``H ⊴ ⟨π(A)⟩``.
    """
    A = as_symset(A)
    src, tgt = A.ctx, phi.target
    ev3 = kernel_clear(A, 3, phi)
    if not ev3.clear:
        raise HypothesisViolation("A^3 meets the kernel of π", witness=ev3.detail.get("witness"))
    pre = {}
    for a in A.keys():
        pre.setdefault(phi.apply_key(a), []).append(a)
    transport = {}
    for h in H.keys():
        cands = pre.get(h)
        if not cands:
            raise SpecError("H is not contained in π(A)")
        if len(cands) > 1:
            raise VerificationFailure("π is not injective on A although A^2 ∩ ker π is trivial")
        transport[h] = cands[0]
    hs = list(transport)
    mult = all(
        src.mul(transport[h1], transport[h2]) == transport[tgt.mul(h1, h2)] for h1 in hs for h2 in hs
    )
    if not mult:
        raise VerificationFailure("the transport map is not multiplicative")
    Hp = Subgroup(src, list(transport.values()), [transport[g] for g in H.gens], "lift")
    normal = None
    if check_normal:
        ev4 = kernel_clear(A, 4, phi)
        img = SymSet(tgt, [phi.apply_key(a) for a in A.keys()], "π(A)")
        if ev4.clear and _normal_in_generated(tgt, H, img.keys()):
            normal = all(Hp.contains_key(src.conj(h, a)) for a in A.keys() for h in Hp.keys())
            if not normal:
                raise VerificationFailure("lifted subgroup is not normal in <A>")
    return SubgroupLift(Hp, transport, mult, normal)


def _normal_in_generated(ctx, H, gens):
    return all(H.contains_key(ctx.conj(h, g)) for g in gens for h in H.gens)


def transport_is_multiplicative(lift: SubgroupLift, phi) -> bool:
    """Exhaustive ``φ(h)φ(h') = φ(hh')`` over all pairs."""
    src, tgt = phi.source, phi.target
    T = lift.transport
    return all(src.mul(T[h1], T[h2]) == T[tgt.mul(h1, h2)] for h1 in T for h2 in T)


# --------------------------------------------------------------------------
# residual structure
# --------------------------------------------------------------------------


@dataclass
class LiftedStructure:
    phi: object
    A: SymSet
    K: int
    quotient: object
    C_gens: list
    H: SubgroupLift
    m: int
    step: int | None
    ell: int
    M: int
    cover: ElementSet
    passes: list
    kernel: KernelEvidence
    properties: list = field(default_factory=list)

    @property
    def bug_flag(self):
        return any(p["status"] == "fail" for p in self.properties)

    def to_json(self):
        ctx = self.A.ctx
        return {
            "phi": self.phi.spec(),
            "K": self.K,
            "m": self.m,
            "step": self.step,
            "ell": self.ell,
            "M": self.M,
            "passes": self.passes,
            "kernel": self.kernel.to_json(),
            "C_generators": [ctx.to_json(g) for g in self.C_gens],
            "H": self.H.to_json(),
            "cover": self.cover.to_json(),
            "cover_size": len(self.cover),
            "quotient_side": self.quotient.to_json(),
            "properties": self.properties,
            "bug_flag": self.bug_flag,
        }


def _image_set(phi, S):
    return SymSet(phi.target, [phi.apply_key(k) for k in S.keys()], "image")


def _generation_exponent(phi, A, C):
    """Least ``e`` with ``⟨π(A^e) ∩ C⟩ = C``."""
    for e in range(1, 7):
        img = [phi.apply_key(k) for k in product_set(A, e).keys()]
        inside = [k for k in img if C.contains_key(k)]
        if len(closure(phi.target, inside)) == len(C):
            return e
    return None


def residual_structure(A: SymSet, fam: QuotientFamily, max_passes: int = MAX_PASSES, tuple_limit: int = TUPLE_LIMIT):
    """Nilpotent-quotient reduction of the structure theorem.

    ``π`` is selected in passes: each pass runs :func:`nilpotent_structure` on
    ``π(A)``, reads off the exponent ``m`` (``H ⊆ π(A)^m`` and ``C`` generated
    by ``π(A^m) ∩ C``) and the achieved step ``s``, sets ``ℓ`` to the word
    length of a weight-``(s+1)`` simple commutator and ``M = m(ℓ+1)``, and
    re-selects ``π`` until it clears ``A^(4M)``.
    """
    A = as_symset(A)
    src = A.ctx
    cert = certify_approx(A)
    K = cert.K
    # provisional π: clear A^(4 M0) with M0 = l(2) + 1, the value for an
    # abelian quotient with m = 1 (the smallest non-degenerate case), so the
    # first pass clears A^20
    M0 = commutator_word_length(2) + 1
    phi, ev = _first_clear(A, 4 * M0, fam, return_evidence=True)
    passes = []
    for _ in range(max_passes):
        B = _image_set(phi, A)
        R = nilpotent_structure(B)
        eC = _generation_exponent(phi, A, R.C)
        m = max(R.m or 1, eC or 6)
        s = R.step if R.step is not None else 0
        ell = commutator_word_length(s + 1)
        M = m * (ell + 1)
        passes.append({"phi": phi.spec(), "m": m, "step": s, "ell": ell, "M": M, "target_order": phi.target.order})
        ev = kernel_clear(A, 4 * M, phi)
        if ev.clear:
            break
        phi, ev = _first_clear(A, 4 * M, fam, return_evidence=True)
    else:
        raise FamilyExhausted("quotient selection did not stabilise", index=max_passes)

    Am = product_set(A, m)
    C = R.C
    C_gens = [k for k in Am.keys() if C.contains_key(phi.apply_key(k))]
    lift = lift_subgroup(phi, Am, R.H, check_normal=False)
    Hp = lift.subgroup
    props = []
    props.append(_prop("kernel_clear_4M", bool(ev.clear), power=4 * M, method=ev.method))
    img_gens = [phi.apply_key(k) for k in C_gens]
    props.append(_prop("C_is_image", len(closure(phi.target, img_gens)) == len(C)))
    normal = all(Hp.contains_key(src.conj(h, g)) for g in C_gens for h in Hp.keys())
    props.append(_prop("H_normal_in_C", normal))
    props.append(_prop("transport_multiplicative", lift.multiplicative))
    weight = K**6 + 1
    props.append(_step_check(src, C_gens, Hp, weight, tuple_limit, "step_bound_K6"))
    props.append(_step_check(src, C_gens, Hp, s + 1, tuple_limit, "achieved_step"))
    # |A^2 ∩ C'| = |π(A^2) ∩ C| with membership in C' witnessed by explicit words
    A2 = product_set(A, 2)
    inside, images = _members_by_words(phi, A2, C_gens, C)
    target_count = len({k for k in images if C.contains_key(k)})
    props.append(_prop("A2_count", len(inside) == target_count, source=len(inside), target=target_count))
    B2 = ElementSet(src, inside, "A^2 ∩ C'")
    X = cover_translates(A, B2)
    kprime = Fraction(len(A), max(len(inside), 1))
    props.append(_prop("cover", len(X) <= kprime * K**2, cosets=len(X), bound=str(kprime * K**2), quotient_cosets=len(R.cover)))
    props.append(_prop("cover_covers", _covered(A, X, inside)))
    res = LiftedStructure(phi, A, K, R, C_gens, lift, m, s, ell, M, X, passes, ev, props)
    if res.bug_flag:
        raise VerificationFailure("lifted structure failed verification", report=res)
    return res


def _covered(A, X, inside):
    ctx = A.ctx
    ins = set(inside)
    xs = X.keys()
    return all(any(ctx.mul(ctx.inv(x), a) in ins for x in xs) for a in A.keys())


def _members_by_words(phi, S, gens, C):
    """Elements of ``S`` proved to lie in ``⟨gens⟩`` by an explicit word.

    The word for ``π(s)`` over ``π(gens)`` is a shortest one in the finite
    group ``C``; evaluating it in the source must reproduce ``s``.
    """
    src, tgt = phi.source, phi.target
    gimg = [phi.apply_key(g) for g in gens]
    images = [phi.apply_key(k) for k in S.keys()]
    want = {im for im in images if C.contains_key(im)}
    # breadth-first over C recording the source product along a shortest word
    best = {tgt.identity: src.identity}
    frontier = [tgt.identity]
    while frontier and not want.issubset(best):
        nxt = []
        for q in frontier:
            for g, gi in zip(gens, gimg):
                y = tgt.mul(q, gi)
                if y not in best:
                    best[y] = src.mul(best[q], g)
                    nxt.append(y)
        frontier = nxt
    inside = [k for k, im in zip(S.keys(), images) if im in want and best.get(im) == k]
    return inside, images


def _step_check(ctx, gens, Hp, weight, tuple_limit, name):
    """All simple commutators of the given weight in ``gens`` lie in ``H'``.

    Exhaustive when there are at most ``tuple_limit`` tuples, otherwise a
    seeded sample of that many.  A commutator that has entered the normal
    subgroup ``H'`` stays there, so evaluation stops early.
    """
    if weight < 2 or not gens:
        return _prop(name, True, weight=weight, tuples=0, exhaustive=True)
    total = len(gens) ** weight if weight * np.log2(max(len(gens), 1)) < 60 else None
    exhaustive = total is not None and total <= tuple_limit
    if exhaustive:
        for tup in itertools.product(gens, repeat=weight):
            if not _commutator_lands(ctx, iter(tup), Hp):
                return _prop(name, False, weight=weight, tuples=total, exhaustive=True, witness=[ctx.to_json(t) for t in tup])
        return _prop(name, True, weight=weight, tuples=total, exhaustive=True)
    # sampled tuples are drawn lazily, one seeded stream per tuple
    for t in range(tuple_limit):
        if not _commutator_lands(ctx, _sample_tuple(gens, weight, t), Hp):
            tup = list(_sample_tuple(gens, weight, t))
            return _prop(name, False, weight=weight, tuples=tuple_limit, exhaustive=False, witness=[ctx.to_json(x) for x in tup])
    return _prop(name, True, weight=weight, tuples=tuple_limit, exhaustive=False)


def _sample_tuple(gens, weight, t):
    rng = make_rng(weight * 1_000_003 + t)
    for _ in range(weight):
        yield gens[rng.randrange(len(gens))]


def _commutator_lands(ctx, entries, Hp):
    c = next(entries)
    for x in entries:
        if Hp.contains_key(c):
            return True
        c = ctx.commutator(c, x)
    return Hp.contains_key(c)


# --------------------------------------------------------------------------
# torsion case
# --------------------------------------------------------------------------


@dataclass
class TorsionLift:
    phi: object
    A: SymSet
    r: int
    M: int
    C: SubgroupLift
    cover: ElementSet
    quotient: object
    passes: list
    kernel: KernelEvidence
    properties: list = field(default_factory=list)

    @property
    def bug_flag(self):
        return any(p["status"] == "fail" for p in self.properties)

    def to_json(self):
        return {
            "phi": self.phi.spec(),
            "r": self.r,
            "M": self.M,
            "passes": self.passes,
            "kernel": self.kernel.to_json(),
            "C": self.C.to_json(),
            "cover": self.cover.to_json(),
            "cover_size": len(self.cover),
            "quotient_side": self.quotient.to_json(),
            "properties": self.properties,
            "bug_flag": self.bug_flag,
        }


def residual_torsion_structure(A: SymSet, r: int, fam: QuotientFamily, max_passes: int = MAX_PASSES) -> TorsionLift:
    """Cover ``A`` by few left cosets of a nilpotent subgroup ``C' ⊆ A^(M-1)``.

    ``M`` exceeds the achieved exponent of ``C`` in ``π(A)``; ``π`` must clear
    ``A^(3M)``.
    """
    A = as_symset(A)
    src = A.ctx
    phi, ev = _first_clear(A, 3, fam, return_evidence=True)
    passes = []
    for _ in range(max_passes):
        B = _image_set(phi, A)
        R = torsion_structure(B, r)
        e = minimal_power(B, R.C)
        M = e + 1
        passes.append({"phi": phi.spec(), "C_exponent": e, "M": M})
        ev = kernel_clear(A, 3 * M, phi)
        if ev.clear:
            break
        phi, ev = _first_clear(A, 3 * M, fam, return_evidence=True)
    else:
        raise FamilyExhausted("quotient selection did not stabilise", index=max_passes)
    AM1 = product_set(A, M - 1)
    lift = lift_subgroup(phi, AM1, R.C, check_normal=False)
    Cp = lift.subgroup
    X = cover_translates(A, Cp)
    props = [
        _prop("kernel_clear_3M", bool(ev.clear), power=3 * M, method=ev.method),
        _prop("C_in_power", Cp.issubset(AM1), exponent=M - 1),
        _prop("transport_multiplicative", lift.multiplicative),
        _prop("cover", A.issubset(_mul(X, Cp)) and len(X) <= len(R.cover), cosets=len(X), quotient_cosets=len(R.cover)),
    ]
    res = TorsionLift(phi, A, r, M, lift, X, R, passes, ev, props)
    if res.bug_flag:
        raise VerificationFailure("lifted torsion structure failed verification", report=res)
    return res


def _mul(X, Y):
    from .setcalc import mul_sets

    return mul_sets(X, Y)
