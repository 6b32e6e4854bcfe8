"""Structure algorithms for approximate subgroups of finite nilpotent groups.

* :func:`dimension_chain` -- the nested chain ``D_i, C_i, γ_i, H_i`` with its
  eight verified properties;
* :func:`refined_central_series` and :func:`commutator_chain` -- the chain of
  normal subgroups ``H_i`` with ``[G, G] ⊆ A^4 H_k`` when ``G = A·Z(G)``;
* :func:`guralnick_set` -- ``[G, D]`` as products of commutators;
* :func:`nilpotent_structure` -- the lifting loop producing ``H ⊴ C``;
* :func:`torsion_structure` -- the bounded-exponent variant.

Every choice the mathematics leaves free (ω, γ, witnesses, generators) is the
canonical-minimal valid one, so results are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import HypothesisViolation, NotNilpotent, SpecError, UnsupportedOperation, VerificationFailure
from .setcalc import (
    ElementSet,
    SymSet,
    as_symset,
    certify_approx,
    cover_translates,
    mul_sets,
    product_set,
)
from .subgroups import (
    Subgroup,
    center,
    closure,
    commutator_of,
    generated_by,
    is_normal,
    lower_central_series,
    normality_witness,
    quotient,
    subgroup_from_elements,
    subgroup_join,
    trivial_subgroup,
)

EXHAUSTIVE_PAIRS = 10**3
POWER_LIMIT = 512


def _prop(name, ok, index=None, **extra):
    out = {"name": name, "status": "pass" if ok else "fail"}
    if index is not None:
        out["index"] = index
    out.update(extra)
    return out


def _require_finite(A):
    if not A.ctx.finite:
        raise UnsupportedOperation("structure algorithms need a finite context; use the residual pipeline")


def _ambient(A):
    _require_finite(A)
    G = generated_by(A, note="<A>")
    _, step = lower_central_series(G)
    if step is None:
        raise NotNilpotent("<A> is not nilpotent")
    return G, step


def _in_product(S, H, T):
    """Canonical-minimal element of ``T`` outside ``S·H`` (``None`` when ``T ⊆ SH``)."""
    return T.first_missing(mul_sets(S, H))


def minimal_power(A, T, base=None, start=1, limit=POWER_LIMIT):
    """Least ``e >= start`` with ``T ⊆ A^e·base`` (``None`` if powers stabilise first)."""
    prev = -1
    for e in range(start, limit + 1):
        Ae = product_set(A, e)
        P = Ae if base is None else mul_sets(Ae, base)
        if T.issubset(P):
            return e
        if len(Ae) == prev:
            return None
        prev = len(Ae)
    return None


# --------------------------------------------------------------------------
# Gleason-type counting
# --------------------------------------------------------------------------


def gleason_check(A: SymSet, chain, witnesses, m: int) -> dict:
    """Verify disjointness of the translates ``A h_i`` and ``|A^(m+1)| >= k|A|``.

    ``chain`` is ``[H_1, ..., H_k]`` (``H_0`` trivial); each witness must lie in
    ``(A^m ∩ H_i) \\ A^2 H_{i-1}``.
    """
    A = as_symset(A)
    ctx = A.ctx
    chain = list(chain)
    ws = [ctx.key_of(w) for w in witnesses]
    if len(ws) != len(chain):
        raise SpecError("need one witness per chain subgroup")
    k = len(chain)
    Am = product_set(A, m)
    A2 = product_set(A, 2)
    prev = trivial_subgroup(ctx)
    for i, (Hi, h) in enumerate(zip(chain, ws), start=1):
        if not prev.issubset(Hi):
            raise HypothesisViolation(f"chain is not nested at index {i}", index=i)
        if not (Am.contains_key(h) and Hi.contains_key(h)):
            raise HypothesisViolation(f"witness {i} is not in A^m ∩ H_{i}", witness=ctx.to_json(h), index=i)
        if mul_sets(A2, prev).contains_key(h):
            raise HypothesisViolation(f"witness {i} lies in A^2 H_{i - 1}", witness=ctx.to_json(h), index=i)
        prev = Hi
    total = 0
    union = ElementSet(ctx, [])
    for h in ws:
        tr = A.translate(h, left=False)
        total += len(tr)
        union = union.union(tr)
    disjoint = len(union) == total
    big = len(product_set(A, m + 1))
    return {
        "k": k,
        "m": m,
        "disjoint": disjoint,
        "power_size": big,
        "bound": k * len(A),
        "passed": disjoint and big >= k * len(A),
    }


# --------------------------------------------------------------------------
# the nested chain
# --------------------------------------------------------------------------


def find_nonnormal_witness(B: SymSet, Z=None):
    """If ``B ∩ Z`` is not a normal subgroup of ``⟨B⟩``, a witness in ``B^3 ∩ Z \\ B``.

    When ``B ∩ Z`` is not even closed, the witness is the canonical-minimal
    element of ``B^2 ∩ Z \\ B``; when it is a non-normal subgroup it is the
    canonical-minimal element of ``B^3 ∩ Z \\ B``.  Returns ``None`` when
    ``B ∩ Z`` is a normal subgroup.  ``Z = None`` means the whole group.
    """
    B = as_symset(B)
    ctx = B.ctx
    BZ = B if Z is None else B.restrict(Z)
    BZs = SymSet(ctx, BZ._idx if ctx.finite else BZ._set, "B∩Z", _trusted=True)
    sq = mul_sets(BZs, BZs)
    if not sq.issubset(BZ):
        B2 = product_set(B, 2)
        W = B2.difference(B)
        W = W if Z is None else W.restrict(Z)
        return ctx.wrap(W.min_key())
    for b in B.keys():
        for x in BZ.keys():
            if not BZ.contains_key(ctx.conj(x, b)):
                W = product_set(B, 3).difference(B)
                W = W if Z is None else W.restrict(Z)
                if not len(W):
                    raise SpecError("Z must be normal in <B>: a conjugate of B ∩ Z leaves Z")
                return ctx.wrap(W.min_key())
    return None


@dataclass
class ChainCertificate:
    A: SymSet
    K: int
    k: int
    C: list
    D: list
    gammas: list
    H: list
    stages: list
    properties: list = field(default_factory=list)
    gleason: dict | None = None

    @property
    def bug_flag(self):
        return any(p["status"] == "fail" for p in self.properties) or (
            self.gleason is not None and not self.gleason["passed"]
        )

    def to_json(self):
        ctx = self.A.ctx
        return {
            "K": self.K,
            "k": self.k,
            "C": [c.to_json() for c in self.C],
            "D": [d.to_json() for d in self.D],
            "gamma": [ctx.to_json(g) for g in self.gammas],
            "H": [h.to_json() for h in self.H],
            "stages": self.stages,
            "properties": self.properties,
            "gleason": self.gleason,
            "bug_flag": self.bug_flag,
        }


def dimension_chain(A: SymSet, cert=None, strict: bool = True) -> ChainCertificate:
    """Build and verify the chain ``D_1 ⊆ ... ⊆ D_{k+1}``, ``C_0 ⊇ ... ⊇ C_k``, ``γ_1..γ_k``.

    Stage ``j``: ``B = π_j(A^2 ∩ C_j)`` in ``C_j/H_j``; stop when ``B`` is the
    whole quotient.  Otherwise ``ℓ`` is the largest index of a lower-central
    term ``Z_ℓ`` meeting ``B^3 \\ B``, ``ω`` the canonical-minimal such
    element, ``D_{j+1} = π_j^-1(B ∩ Z_{ℓ+1})``, ``G_{j+1}`` the pullback of the
    centraliser of ``ω`` modulo ``D_{j+1}``, ``γ_{j+1}`` the canonical-minimal
    element of ``A^6 ∩ C_j`` over ``ω``, ``H_{j+1} = ⟨γ_{j+1}⟩D_{j+1}`` and
    ``C_{j+1} = ⟨A^2 ∩ G_{j+1}⟩H_{j+1}``.
    """
    A = as_symset(A)
    ctx = A.ctx
    G0, _ = _ambient(A)
    cert = cert or certify_approx(A)
    K = cert.K
    A2 = product_set(A, 2)
    A6 = product_set(A, 6)

    C = [G0]
    H = [trivial_subgroup(ctx)]
    D, gammas, stages = [], [], []
    report = None
    while True:
        j = len(C) - 1
        Cj, Hj = C[j], H[j]
        Q, pi = quotient(Cj, Hj)
        B = pi.image(A2.restrict(Cj))
        if len(B) == Q.order:
            D.append(Cj)
            break
        if j + 1 > K**6:
            report = {"stage": j + 1, "K": K}
            break
        Bs = SymSet(Q, B.idx, "B", _trusted=True)
        series, _ = lower_central_series(closure(Q, Q.generators()))
        W = product_set(Bs, 3).difference(B)
        ell = None
        for l in range(len(series), 0, -1):
            hit = W.restrict(series[l - 1])
            if len(hit):
                ell, omega = l, hit.min_key()
                break
        Znext = series[ell]
        nonnormal = find_nonnormal_witness(Bs, Znext)
        Dq_set = B.restrict(Znext)
        if nonnormal is not None:
            report = {"stage": j + 1, "reason": "B ∩ Z_(l+1) is not a normal subgroup"}
            break
        Dq = subgroup_from_elements(Q, Dq_set)
        Dn = pi.pullback(Dq)
        w_lift = Q.lift(omega)
        comm = ctx.commutator_idx(np.full(len(Cj), w_lift, dtype=np.int64), Cj.idx)
        Gn = ElementSet(ctx, Cj.idx[Dn.contains_idx(comm)], "G", _trusted=True)
        A6C = A6.restrict(Cj)
        over = A6C.idx[pi.apply_idx(A6C.idx) == omega]
        gamma = int(over[0])
        Hn = closure(ctx, Dn.gens + [gamma], "H")
        Cn = generated_by(A2.restrict(Gn), Hn.gens, note="C")
        D.append(Dn)
        gammas.append(gamma)
        H.append(Hn)
        C.append(Cn)
        stages.append(
            {
                "stage": j + 1,
                "ell": ell,
                "omega": ctx.to_json(w_lift),
                "quotient_order": Q.order,
                "B_size": len(B),
                "G_size": len(Gn),
                "A2_in_C": len(A2.restrict(Cn)),
            }
        )
    k = len(gammas)
    out = ChainCertificate(A=A, K=K, k=k, C=C, D=D, gammas=gammas, H=H, stages=stages)
    if report is not None:
        out.properties.append(_prop("termination", False, **report))
        raise VerificationFailure("chain construction broke a proven invariant", report=out)
    verify_chain(out)
    if strict and out.bug_flag:
        raise VerificationFailure("chain certificate failed verification", report=out)
    return out


def verify_chain(cert: ChainCertificate) -> ChainCertificate:
    """Recompute every chain property from scratch and store the results on ``cert``."""
    A, K, k = cert.A, cert.K, cert.k
    ctx = A.ctx
    A2 = product_set(A, 2)
    A6 = product_set(A, 6)
    C, D, H, gam = cert.C, cert.D, cert.H, cert.gammas
    props = []
    props.append(_prop("k_bound", k <= K**6, k=k, bound=K**6))
    for i in range(0, k + 1):
        # (v) C_i = <A^2 ∩ C_i> H_i
        S = generated_by(A2.restrict(C[i]))
        props.append(_prop("v:C_generated", mul_sets(S, H[i]) == C[i], index=i))
        # (vii) |A^2 ∩ C_i| >= K^(-35 i) |A|
        n = len(A2.restrict(C[i]))
        props.append(_prop("vii:size", n * K ** (35 * i) >= len(A), index=i, size=n))
        if i >= 1:
            props.append(_prop("C_nested", C[i].issubset(C[i - 1]), index=i))
    for i in range(1, k + 2):
        Di = D[i - 1]
        # (i) D_i normal in C_{i-1}
        ok = Di.issubset(C[i - 1]) and normality_witness(Di, C[i - 1]) is None
        props.append(_prop("i:D_normal", ok, index=i))
        # (iii) H_{i-1} ⊆ D_i
        props.append(_prop("iii:H_nested", H[i - 1].issubset(Di), index=i))
        # (iv) D_i ⊆ A^2 H_{i-1}
        miss = _in_product(A2, H[i - 1], Di)
        props.append(_prop("iv:D_in_A2H", miss is None, index=i, witness=None if miss is None else ctx.to_json(miss)))
        if i >= 2:
            props.append(_prop("D_nested", D[i - 2].issubset(Di), index=i))
    for i in range(1, k + 1):
        g = gam[i - 1]
        # (ii) γ_i central in C_i / D_i, normalises D_i; H_i normal in C_i
        central = C[i].contains_key(g) and all(
            D[i - 1].contains_key(ctx.commutator(g, c)) for c in C[i].gens
        )
        normalises = normality_witness(D[i - 1], closure(ctx, [g])) is None if D[i - 1].gens or True else True
        props.append(
            _prop("ii:gamma_central", central and normalises and normality_witness(H[i], C[i]) is None, index=i)
        )
        # (vi) γ_i ∈ A^6 \ A^2 H_{i-1}
        outside = not mul_sets(A2, H[i - 1]).contains_key(g)
        props.append(_prop("vi:gamma_outside", A6.contains_key(g) and outside, index=i))
        props.append(_prop("H_is_gamma_D", H[i] == closure(ctx, D[i - 1].gens + [g]), index=i))
    # (viii) C_k = D_{k+1}, and the stopping condition C_k ⊆ A^2 H_k
    miss = _in_product(A2, H[k], C[k])
    props.append(_prop("viii:C_k_is_D_k+1", D[k] == C[k] and miss is None, index=k))
    cert.properties = props
    cert.gleason = gleason_check(A, H[1:], gam, 6)
    return cert


# --------------------------------------------------------------------------
# structure results
# --------------------------------------------------------------------------


@dataclass
class StructureResult:
    A: SymSet
    K: int
    H: Subgroup
    C: Subgroup
    m: int | None
    step: int | None
    cover: ElementSet
    ratio: Fraction
    properties: list = field(default_factory=list)
    chain: ChainCertificate | None = None
    extras: dict = field(default_factory=dict)

    @property
    def bug_flag(self):
        return any(p["status"] == "fail" for p in self.properties)

    def to_json(self):
        return {
            "K": self.K,
            "H": self.H.to_json(),
            "C": self.C.to_json(),
            "achieved_exponent": self.m,
            "step": self.step,
            "cover": self.cover.to_json(),
            "cover_size": len(self.cover),
            "ratio": str(self.ratio),
            "properties": self.properties,
            "chain": None if self.chain is None else self.chain.to_json(),
            "extras": self.extras,
            "bug_flag": self.bug_flag,
        }


def _quotient_step(C, H):
    Q, _ = quotient(C, H)
    _, s = lower_central_series(closure(Q, Q.generators()))
    return s


def _common_properties(A, K, k, H, C):
    """Properties (a)-(e) for ``H ⊴ C``."""
    ctx = A.ctx
    A2C = product_set(A, 2).restrict(C)
    props = []
    props.append(_prop("H_normal_in_C", H.issubset(C) and normality_witness(H, C) is None))
    m = minimal_power(A, H)
    props.append(_prop("a:H_in_power", m is not None, achieved_exponent=m))
    step = _quotient_step(C, H)
    props.append(_prop("b:step", step is not None and step <= K**6, step=step, bound=K**6))
    gen6 = generated_by(product_set(A, 6).restrict(C))
    props.append(_prop("c:generated_by_A6", gen6 == C))
    ratio = Fraction(len(A2C), len(A))
    props.append(_prop("d:size", ratio * K ** (35 * k) >= 1, ratio=str(ratio), bound=f"K^-{35 * k}"))
    X = cover_translates(A, C)
    kprime = Fraction(len(A), len(A2C))
    covered = A.issubset(mul_sets(X, C))
    props.append(
        _prop(
            "e:cover",
            covered and len(X) <= kprime * K**2,
            cosets=len(X),
            bound=str(kprime * K**2),
        )
    )
    return props, m, step, X, ratio


def torsion_structure(A: SymSet, r: int, cert=None) -> StructureResult:
    """Nilpotent subgroup ``C = C_k`` covering ``A`` by few cosets, for exponent ``<= r``.

    Checks ``H_k ⊆ A^((3r+2)K^6)`` and ``C_k ⊆ A^((3r+2)K^6+2)`` at the achieved
    (smaller) exponents.
    """
    A = as_symset(A)
    ctx = A.ctx
    G, _ = _require_orders(A, r)
    chain = dimension_chain(A, cert)
    K, k = chain.K, chain.k
    Hk, Ck = chain.H[k], chain.C[k]
    eH = minimal_power(A, Hk)
    eC = minimal_power(A, Ck)
    bound = (3 * r + 2) * K**6
    X = cover_translates(A, Ck)
    A2C = product_set(A, 2).restrict(Ck)
    kprime = Fraction(len(A), len(A2C))
    props = [
        _prop("H_k_in_power", eH is not None and eH <= bound, achieved_exponent=eH, bound=bound),
        _prop("C_k_in_power", eC is not None and eC <= bound + 2, achieved_exponent=eC, bound=bound + 2),
        _prop("C_nilpotent", lower_central_series(Ck)[1] is not None),
        _prop("cover", A.issubset(mul_sets(X, Ck)) and len(X) <= kprime * K**2, cosets=len(X), bound=str(kprime * K**2)),
    ]
    res = StructureResult(
        A=A,
        K=K,
        H=trivial_subgroup(ctx),
        C=Ck,
        m=1,
        step=lower_central_series(Ck)[1],
        cover=X,
        ratio=Fraction(len(A2C), len(A)),
        properties=props,
        chain=chain,
        extras={"r": r, "H_k_exponent": eH, "C_k_exponent": eC},
    )
    if res.bug_flag:
        raise VerificationFailure("torsion structure failed verification", report=res)
    return res


def _require_orders(A, r):
    """Every element of ``⟨A⟩`` has order at most ``r``; raises with a witness otherwise."""
    G, step = _ambient(A)
    ctx = A.ctx
    idx = G.idx
    done = idx == 0
    x = idx.copy()
    for _ in range(1, r):
        x = ctx.mul_idx(x, idx)
        done |= x == 0
    if not done.all():
        w = int(idx[np.argmax(~done)])
        raise HypothesisViolation(f"an element of <A> has order exceeding {r}", witness=ctx.to_json(w))
    return G, step


# --------------------------------------------------------------------------
# G = A·Z(G): commutators, refined series, commutator chain
# --------------------------------------------------------------------------


def _surjects_mod_center(G, A):
    Z = center(G)
    if not A.issubset(G):
        raise HypothesisViolation("A is not contained in G")
    Q, pi = quotient(G, Z)
    img = np.unique(pi.apply_idx(A.idx))
    if len(img) != Q.order:
        raise HypothesisViolation("A does not surject onto G/Z(G)", witness=len(img))
    return Z, Q, pi


def commutators_in_A4_check(G: Subgroup, A: SymSet) -> bool:
    """Every commutator of ``G`` lies in ``A^4`` (given ``G = A·Z(G)``)."""
    A = as_symset(A)
    _require_finite(A)
    _surjects_mod_center(G, A)
    ctx = A.ctx
    A4 = product_set(A, 4)
    if len(G) <= EXHAUSTIVE_PAIRS:
        idx = G.idx
        comm = ctx.commutator_idx(np.repeat(idx, len(idx)), np.tile(idx, len(idx)))
    else:
        # commutators depend only on classes mod Z(G), all of which meet A
        idx = A.idx
        comm = ctx.commutator_idx(np.repeat(idx, len(idx)), np.tile(idx, len(idx)))
    return bool(A4.contains_idx(np.unique(comm)).all())


@dataclass
class CentralSeriesCert:
    Gamma: list
    commutators: list
    factorizations: list
    properties: list = field(default_factory=list)

    @property
    def r(self):
        return len(self.commutators)

    @property
    def bug_flag(self):
        return any(p["status"] == "fail" for p in self.properties)

    def to_json(self, ctx):
        return {
            "r": self.r,
            "Gamma": [g.to_json() for g in self.Gamma],
            "commutators": [ctx.to_json(c) for c in self.commutators],
            "factorizations": [[ctx.to_json(a), ctx.to_json(b)] for a, b in self.factorizations],
            "properties": self.properties,
        }


def refined_central_series(G: Subgroup, A: SymSet) -> CentralSeriesCert:
    """Central series ``[G,G] = Γ_1 ⊇ ... ⊇ Γ_{r+1} = 1`` with cyclic factors ``⟨c_i⟩``.

    Works bottom-up through the lower central series; at level ``t`` it adds
    weight-``t`` simple commutators in elements of ``A`` (canonical order of
    values), skipping those already present.  Each ``c_i`` is recorded as a
    commutator ``[a_i, b_i]`` with ``a_i, b_i ∈ A``.
    """
    A = as_symset(A)
    ctx = A.ctx
    _require_finite(A)
    Z, Qz, piz = _surjects_mod_center(G, A)
    series, s = lower_central_series(G)
    if s is None:
        raise NotNilpotent("G is not nilpotent")
    # representatives of A modulo Z(G), canonical-first
    labels = piz.apply_idx(A.idx)
    reps = {}
    for a, lab in zip(A.idx.tolist(), labels.tolist()):
        reps.setdefault(lab, a)
    R = np.asarray(sorted(reps.values()), dtype=np.int64)
    lab_to_rep = {lab: a for lab, a in reps.items()}

    # values of simple commutators of each weight
    layers = {}
    cur = np.unique(ctx.commutator_idx(np.repeat(R, len(R)), np.tile(R, len(R))))
    layers[2] = cur
    for t in range(3, s + 2):
        cur = np.unique(ctx.commutator_idx(np.repeat(cur, len(R)), np.tile(R, len(cur))))
        layers[t] = cur

    Gamma_rev = [trivial_subgroup(ctx)]
    comms_rev, fact_rev = [], []
    for t in range(s, 1, -1):
        level = series[t - 1]
        for c in layers[t].tolist():
            if c == 0 or not level.contains_key(c) or Gamma_rev[-1].contains_key(c):
                continue
            Gamma_rev.append(closure(ctx, Gamma_rev[-1].gens + [c], "Gamma"))
            comms_rev.append(c)
            fact_rev.append(_factor_commutator(ctx, c, R, lab_to_rep, piz))
    Gamma = list(reversed(Gamma_rev))
    out = CentralSeriesCert(Gamma, list(reversed(comms_rev)), list(reversed(fact_rev)))
    _verify_central_series(out, G, A)
    if out.bug_flag:
        raise VerificationFailure("refined central series failed verification", report=out)
    return out


def _factor_commutator(ctx, c, R, lab_to_rep, piz):
    """``c = [a, b]`` with ``a, b`` in the representative set ``R ⊆ A``."""
    n = len(R)
    comm = ctx.commutator_idx(np.repeat(R, n), np.tile(R, n))
    hit = np.flatnonzero(comm == c)
    if len(hit) == 0:
        raise VerificationFailure("commutator has no factorisation over A")
    i = int(hit[0])
    return int(R[i // n]), int(R[i % n])


def _verify_central_series(cert, G, A):
    ctx = G.ctx
    Gam = cert.Gamma
    A4 = product_set(A, 4)
    props = [_prop("top_is_derived", Gam[0] == commutator_of(G, G, within=G)), _prop("bottom_trivial", Gam[-1].is_trivial())]
    for i in range(len(Gam) - 1):
        central = all(Gam[i + 1].contains_key(ctx.commutator(c, g)) for c in Gam[i].gens for g in G.gens)
        normal = normality_witness(Gam[i], G) is None
        props.append(_prop("central", central and normal, index=i + 1))
        miss = _in_product(A4, Gam[i + 1], Gam[i])
        props.append(_prop("A4_step", miss is None, index=i + 1))
    for c, (a, b) in zip(cert.commutators, cert.factorizations):
        props.append(_prop("factorization", ctx.commutator(a, b) == c and A.contains_key(a) and A.contains_key(b)))
    cert.properties = props


@dataclass
class CommutatorChainCert:
    k: int
    H: list
    indices: list
    exponents: list
    series: CentralSeriesCert
    properties: list = field(default_factory=list)

    @property
    def bug_flag(self):
        return any(p["status"] == "fail" for p in self.properties)

    def to_json(self, ctx):
        return {
            "k": self.k,
            "H": [h.to_json() for h in self.H],
            "indices": self.indices,
            "achieved_exponents": self.exponents,
            "series": self.series.to_json(ctx),
            "properties": self.properties,
            "bug_flag": self.bug_flag,
        }


def _is_group(S: ElementSet):
    return len(generated_by(S)) == len(S)


def commutator_chain(G: Subgroup, A: SymSet, K: int | None = None) -> CommutatorChainCert:
    """Normal subgroups ``1 = H_0 ⊆ ... ⊆ H_k ⊆ [G,G]`` with ``H_i ⊆ A^8 H_{i-1}`` and ``[G,G] ⊆ A^4 H_k``.

    From ``j = j(i)`` take the least ``j'`` with ``(A^4 ∩ Γ_j')Γ_j`` a group;
    stop if ``j' = 1``, else continue from ``j(i+1) = j' - 1``.
    """
    A = as_symset(A)
    ctx = A.ctx
    series = refined_central_series(G, A)
    if K is None:
        K = certify_approx(A).K
    Gam = series.Gamma  # Gam[i-1] = Γ_i
    r = series.r
    A4 = product_set(A, 4)
    js = [r + 1]
    j = r + 1
    while j >= 2:
        jp = None
        for cand in range(1, j):
            P = mul_sets(A4.restrict(Gam[cand - 1]), Gam[j - 1])
            if _is_group(P):
                jp = cand
                break
        if jp is None:
            raise VerificationFailure("no admissible j' found")
        if jp == 1:
            break
        j = jp - 1
        js.append(j)
    H = [Gam[jj - 1] for jj in js]
    k = len(H) - 1
    exps = [minimal_power(A, H[i], base=H[i - 1]) for i in range(1, k + 1)]
    out = CommutatorChainCert(k=k, H=H, indices=js, exponents=exps, series=series)
    derived = Gam[0]
    A8 = product_set(A, 8)
    props = [
        _prop("k_bound", k <= K**8, k=k, bound=K**8),
        _prop("H0_trivial", H[0].is_trivial()),
    ]
    for i in range(1, k + 1):
        miss = _in_product(A8, H[i - 1], H[i])
        props.append(_prop("H_step_A8", miss is None, index=i, achieved_exponent=exps[i - 1]))
    for i, Hi in enumerate(H):
        props.append(_prop("H_normal", normality_witness(Hi, G) is None and Hi.issubset(derived), index=i))
    props.append(_prop("derived_in_A4Hk", _in_product(A4, H[k], derived) is None))
    props.append(_prop("derived_in_power", derived.issubset(product_set(A, 8 * k + 4)), exponent=8 * k + 4))
    out.properties = props
    if out.bug_flag:
        raise VerificationFailure("commutator chain failed verification", report=out)
    return out


# --------------------------------------------------------------------------
# Guralnick's lemma
# --------------------------------------------------------------------------


@dataclass
class GuralnickResult:
    products: ElementSet
    commutator: Subgroup
    equal: bool

    def to_json(self):
        return {"size": len(self.products), "commutator_order": len(self.commutator), "equal": self.equal}


def guralnick_set(G: Subgroup, D: Subgroup, xs) -> GuralnickResult:
    """``{∏ [x_i, d_i] : d_i ∈ D}`` against ``[G, D]`` computed as a commutator closure.

    The product set is built factor by factor with deduplication, which gives
    the same set as enumerating ``D^n`` directly.
    """
    ctx = G.ctx
    keys = [ctx.key_of(x) for x in xs]
    if not D.issubset(G):
        raise HypothesisViolation("D is not contained in G")
    if any(ctx.commutator(a, b) != ctx.identity for a in D.gens for b in D.gens):
        raise HypothesisViolation("D is not abelian")
    if normality_witness(D, G) is not None:
        raise HypothesisViolation("D is not normal in G")
    if generated_by(ElementSet(ctx, keys), D.gens) != G:
        raise HypothesisViolation("G is not generated by xs and D")
    cur = ElementSet(ctx, [ctx.identity])
    for x in keys:
        vals = ElementSet(ctx, ctx.commutator_idx(np.full(len(D), x, dtype=np.int64), D.idx))
        cur = mul_sets(cur, vals)
    GD = commutator_of(G, D, within=G)
    return GuralnickResult(cur, GD, cur == GD)


# --------------------------------------------------------------------------
# the lifting loop
# --------------------------------------------------------------------------


def nilpotent_structure(A: SymSet, cert=None, rank_cap: int = 3, exp_cap: int = 4) -> StructureResult:
    """``H ⊴ C`` with ``C/H`` nilpotent of small step, built from the chain.

    Runs :func:`dimension_chain`, sets ``C = D_{k+1}`` and, for ``i = k..1``,
    ``D'_i = [D̄_{i+1}, D̄_{i+1}]D_i``, ``D''_i = [C, D̄_{i+1}]D'_i`` and
    ``D̄_i = B·D''_i`` from an abelian fit of the image of
    ``A^m ∩ D̄_{i+1}`` in ``C/D''_i``.  Returns ``H = D̄_1``.
    """
    from .progression import abelian_freiman_fit

    A = as_symset(A)
    ctx = A.ctx
    chain = dimension_chain(A, cert)
    K, k = chain.K, chain.k
    C = chain.D[k]
    Dbar = {k + 1: C}
    levels = []
    xs_all = []
    flags = []
    for i in range(k, 0, -1):
        Dn = Dbar[i + 1]
        Di = chain.D[i - 1]
        Hi = chain.H[i]  # ⟨γ_i⟩ D_i
        m = minimal_power(A, Dn, base=Hi, start=6)
        if m is None or not mul_sets(product_set(A, m).restrict(Dn), Hi) == Dn:
            flags.append({"level": i, "reason": "no exponent m with (A^m ∩ D̄)Z_iD_i = D̄"})
            m = m or 6
        Am_D = product_set(A, m).restrict(Dn)
        D1 = subgroup_join(commutator_of(Dn, Dn, within=Dn), Di)
        D2 = subgroup_join(commutator_of(C, Dn, within=C), D1)
        level = {"index": i, "m": m, "D_order": len(Di), "Dprime_order": len(D1), "Ddprime_order": len(D2)}
        # cross-check [C/D', D̄/D'] by Guralnick's lemma
        Q1, p1 = quotient(C, D1)
        Cq = closure(Q1, Q1.generators())
        Dq = p1.image_subgroup(Dn)
        gq = guralnick_set(Cq, Dq, [int(x) for x in p1.apply_idx(np.asarray(C.gens, dtype=np.int64))])
        level["guralnick_equal"] = gq.equal and len(gq.commutator) * len(D1) == len(D2)
        # abelian fit in C/D''
        Q2, p2 = quotient(C, D2)
        T = SymSet(Q2, np.unique(p2.apply_idx(Am_D.idx)), "image", _trusted=True)
        fit = abelian_freiman_fit(T, rank_cap=rank_cap, exp_cap=exp_cap, prefer="exponent")
        if not fit.found:
            fit = abelian_freiman_fit(T, rank_cap=rank_cap + 1, exp_cap=2 * exp_cap, prefer="exponent")
        if fit.found:
            Bq = fit.H
            ys = [Q2.lift(y) for y in fit.progression.generators]
            level.update(fit_rank=fit.rank, fit_exponent=fit.exponent, fit_H_order=len(Bq))
        else:
            Bq = closure(Q2, T.keys())
            ys = []
            level.update(fit_rank=None, fit_exponent=None, fit_fallback=True)
            flags.append({"level": i, "reason": "abelian fit exhausted; used the generated subgroup"})
        Dnew = p2.pullback(Bq)
        Dbar[i] = Dnew
        xs_all.extend(ys)
        level["Dbar_order"] = len(Dnew)
        level["Dbar_exponent"] = minimal_power(A, Dnew, base=Di)
        # normality of D̄_i in C is verified, never assumed
        level["Dbar_normal"] = normality_witness(Dnew, C) is None
        level["Dbar_central"] = all(Dnew.contains_key(ctx.commutator(c, d)) for c in C.gens for d in Dn.gens)
        level["Dbar_generated"] = closure(ctx, ys + Dnew.gens) == Dn
        level["D_in_Dbar"] = Di.issubset(Dnew)
        levels.append(level)
    # for k = 0 the loop is empty and H = D̄_1 = C (= ⟨A⟩ ⊆ A^2)
    Hres = Dbar[1]
    props, m, step, X, ratio = _common_properties(A, K, k, Hres, C)
    for lv in levels:
        for key in ("guralnick_equal", "Dbar_normal", "Dbar_central", "Dbar_generated", "D_in_Dbar"):
            props.append(_prop(f"level:{key}", lv[key], index=lv["index"]))
    for f in flags:
        props.append(_prop("level:search", False, index=f["level"], reason=f["reason"]))
    res = StructureResult(
        A=A,
        K=K,
        H=Hres,
        C=C,
        m=m,
        step=step,
        cover=X,
        ratio=ratio,
        properties=props,
        chain=chain,
        extras={"levels": levels, "k": k, "lifted_generators": [ctx.to_json(x) for x in xs_all]},
    )
    if res.bug_flag:
        raise VerificationFailure("structure result failed verification", report=res)
    return res
