"""Cayley-ball growth, the one-scale gap test and the 5-adic scale selection.

All logarithms are natural.  Thresholds are evaluated with ``mpmath`` at
``GUARD_DIGITS`` significant digits and compared against exact integer ball
sizes; a size within a relative ``10^-(GUARD_DIGITS-10)`` of the threshold is
treated as exceeding it, so borderline cases are never reported as detected.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import kernels
from .errors import CapExceeded, HypothesisViolation, SpecError
from .groups import TABLE_LIMIT
from .setcalc import SymSet, as_symset, certify_approx, product_set
from .subgroups import closure

GUARD_DIGITS = 40
DEFAULT_ALPHA = 5


@dataclass
class GrowthReport:
    ctx: object
    S: SymSet
    sizes: list  # sizes[i] = |S^(i+1)|
    partial: bool = False
    gaps: dict = field(default_factory=dict)
    scale: dict | None = None

    @property
    def n_max(self):
        return len(self.sizes)

    def size(self, n):
        if n < 0:
            raise SpecError("radius must be non-negative")
        if n == 0:
            return 1
        if n > len(self.sizes):
            raise SpecError(f"report covers radius {len(self.sizes)} only, radius {n} requested")
        return self.sizes[n - 1]

    def to_json(self):
        return {
            "group": self.ctx.spec(),
            "S": self.S.to_json(),
            "sizes": list(self.sizes),
            "partial": self.partial,
            "log": "natural",
            "gaps": {str(c): ns for c, ns in self.gaps.items()},
            "scale": self.scale,
        }

    def to_csv(self, c: float) -> str:
        """Rows ``n, |S^n|, threshold, flag`` for ``n >= 3``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "size", "threshold", "flag"])
        for n in range(3, self.n_max + 1):
            thr = gap_threshold(n, c)
            w.writerow([n, self.size(n), mpmath.nstr(thr, 12), int(_at_most(self.size(n), thr))])
        return buf.getvalue()


def ball_sizes(ctx, S: SymSet, n_max: int) -> GrowthReport:
    """``|S^1|, ..., |S^n_max|`` by breadth-first layers.

    On a cap overflow the computed prefix is returned with ``partial=True``.
    """
    S = as_symset(S)
    if S.ctx != ctx:
        raise SpecError("S is not in the given context")
    if n_max < 1:
        raise SpecError("n_max must be positive")
    if ctx.finite and ctx.order <= TABLE_LIMIT:
        sizes = kernels.table_ball_sizes(ctx.table(), S.idx, 0, n_max)
        return GrowthReport(ctx, S, [int(x) for x in sizes[1:]])
    if ctx.finite:
        return _ball_sizes_mask(ctx, S, n_max)
    seen = {ctx.identity}
    frontier = [ctx.identity]
    sizes = []
    gens = [k for k in S.keys() if k != ctx.identity]
    mul = ctx.mul
    for _ in range(n_max):
        nxt = []
        for g in frontier:
            for s in gens:
                y = mul(g, s)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        if len(seen) > ctx.cap:
            return GrowthReport(ctx, S, sizes, partial=True)
        sizes.append(len(seen))
        frontier = nxt
    return GrowthReport(ctx, S, sizes)


def _ball_sizes_mask(ctx, S, n_max):
    seen = np.zeros(ctx.order, dtype=bool)
    seen[0] = True
    frontier = np.zeros(1, dtype=np.int64)
    gens = S.idx[S.idx != 0]
    total = 1
    sizes = []
    for _ in range(n_max):
        if len(frontier):
            prods = np.unique(ctx.mul_idx(np.repeat(frontier, len(gens)), np.tile(gens, len(frontier))))
            frontier = prods[~seen[prods]]
            seen[frontier] = True
            total += len(frontier)
        sizes.append(total)
    return GrowthReport(ctx, S, sizes)


# --------------------------------------------------------------------------
# thresholds
# --------------------------------------------------------------------------


def gap_threshold(n: int, c: float):
    """``n^(c log log n)`` as an mpmath number (natural logarithms)."""
    with mpmath.workdps(GUARD_DIGITS):
        n = mpmath.mpf(n)
        return mpmath.power(n, mpmath.mpf(c) * mpmath.log(mpmath.log(n)))


def _at_most(size: int, threshold) -> bool:
    """``size <= threshold`` with a guard band: near-ties count as exceeding."""
    with mpmath.workdps(GUARD_DIGITS):
        guarded = threshold * (1 - mpmath.mpf(10) ** (-(GUARD_DIGITS - 10)))
        return size <= int(mpmath.floor(guarded))


def gap_detect(report: GrowthReport, c: float) -> list:
    """Every ``n`` in the report (with ``n > e``) where ``|S^n| <= n^(c log log n)``."""
    if c <= 0:
        raise SpecError("c must be positive")
    hits = [n for n in range(3, report.n_max + 1) if _at_most(report.size(n), gap_threshold(n, c))]
    report.gaps[c] = hits
    return hits


def scale_threshold(n: int, c: float, alpha: float = DEFAULT_ALPHA):
    with mpmath.workdps(GUARD_DIGITS):
        return mpmath.power(mpmath.log(mpmath.mpf(n)), mpmath.mpf(alpha) * mpmath.mpf(c))


def _candidate_scales(n):
    base = math.isqrt(n - 1) + 1 if n > 1 else 1  # ceil(sqrt(n))
    rmax = 0
    while 5 ** (rmax + 1) <= math.sqrt(n):  # r <= log_5 n^(1/2)
        rmax += 1
    return base, rmax


def dyadic_scale(report: GrowthReport, n: int, c: float, alpha: float = DEFAULT_ALPHA) -> int:
    """Least ``r ∈ [0, log_5 n^(1/2)]`` with ``|S^(5^(r+1)b)| <= (log n)^(αc) |S^(5^r b)|``, ``b = ⌈√n⌉``."""
    if n < 2:
        raise SpecError("n must be at least 2")
    base, rmax = _candidate_scales(n)
    thr = scale_threshold(n, c, alpha)
    ratios = []
    for r in range(rmax + 1):
        lo, hi = report.size(5**r * base), report.size(5 ** (r + 1) * base)
        ratios.append([r, lo, hi])
        with mpmath.workdps(GUARD_DIGITS):
            if hi <= thr * lo:
                report.scale = {"n": n, "c": c, "alpha": alpha, "r": r, "base": base, "ratios": ratios, "threshold": mpmath.nstr(thr, 15)}
                return r
    raise HypothesisViolation(f"no scale r <= {rmax} meets the growth threshold at c={c}, alpha={alpha}", witness=ratios)


def required_radius(n: int) -> int:
    base, rmax = _candidate_scales(n)
    return max(n, 5 ** (rmax + 1) * base)


# --------------------------------------------------------------------------
# certificate pipeline
# --------------------------------------------------------------------------


@dataclass
class GrowthCertificate:
    n: int
    c: float
    alpha: float
    report: GrowthReport
    stages: dict
    properties: list

    @property
    def bug_flag(self):
        return any(p["status"] == "fail" for p in self.properties)

    def to_json(self):
        return {
            "n": self.n,
            "c": self.c,
            "alpha": self.alpha,
            "log": "natural",
            "sizes": self.report.sizes,
            "stages": self.stages,
            "properties": self.properties,
            "bug_flag": self.bug_flag,
        }


def _stabiliser_index(ctx, gens, H_gens):
    """Index of the centraliser of ``H`` in ``⟨gens⟩``.

    The kernel of the conjugation action on ``H`` is the centraliser of a
    generating tuple of ``H``, so the index is the size of that tuple's orbit.
    """
    start = tuple(H_gens)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for t in frontier:
            for g in gens:
                u = tuple(ctx.conj(h, g) for h in t)
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return len(seen)


def growth_certificate(ctx, S: SymSet, n: int, c: float, fam=None, alpha: float = DEFAULT_ALPHA, report=None):
    """Gap at ``n`` → scale ``r`` → ``A = S^(2·5^r⌈√n⌉)`` → lifted structure with step and index data."""
    from .resid import QuotientFamily, residual_structure
    from .structure import _prop

    S = as_symset(S)
    need = required_radius(n)
    if report is None or report.n_max < need:
        report = ball_sizes(ctx, S, need)
    if report.partial:
        raise CapExceeded(f"ball sizes stopped at radius {report.n_max}", partial=report.n_max)
    stages = {"gap": None, "scale": None, "approx": None, "structure": None}
    if n not in gap_detect(report, c):
        raise HypothesisViolation(f"no growth gap at n={n} for c={c}", witness=report.size(n))
    stages["gap"] = {"n": n, "size": report.size(n), "threshold": mpmath.nstr(gap_threshold(n, c), 15)}
    props = []
    if report.size(n) == 1:
        stages["trivial_group"] = True
        props.append(_prop("trivial_group", True))
        stages["approx"] = {"K": 1}
        return GrowthCertificate(n, c, alpha, report, stages, props)
    r = dyadic_scale(report, n, c, alpha)
    stages["scale"] = report.scale
    base = math.isqrt(n - 1) + 1
    radius = 2 * 5**r * base
    A = product_set(S, radius) if radius > 1 else S
    A = SymSet(ctx, A.idx if ctx.finite else A.keyset(), f"S^{radius}", _trusted=True)
    cert = certify_approx(A)
    stages["approx"] = {"radius": radius, "size": len(A), "K": cert.K, "doubling": str(cert.doubling)}
    props.append(_prop("certificate", cert.verify(), K=cert.K))
    if fam is None:
        if not ctx.finite:
            raise SpecError("an infinite group needs a quotient family")
        fam = QuotientFamily.from_spec(ctx, {"identity": True})
    L = residual_structure(A, fam)
    step_target = int(math.floor(math.log(n)))
    stages["structure"] = {
        "step": L.step,
        "step_target": step_target,
        "H_order": len(L.H.subgroup),
        "cover_size": len(L.cover),
        "M": L.M,
        "phi": L.phi.spec(),
    }
    props.append(_prop("step_at_most_log_n", L.step is not None and L.step <= step_target, step=L.step, bound=step_target))
    C_gens = L.C_gens
    if ctx.finite:
        C_gens = closure(ctx, C_gens).gens
    idx = _stabiliser_index(ctx, C_gens, L.H.subgroup.gens)
    stages["structure"]["stabiliser_index"] = idx
    props.append(_prop("index_reported", True, cosets=len(L.cover), stabiliser_index=idx))
    props.extend(p for p in L.properties)
    out = GrowthCertificate(n, c, alpha, report, stages, props)
    return out
