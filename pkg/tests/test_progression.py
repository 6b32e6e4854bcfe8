"""Nilprogressions and the abelian fitter, against exhaustive oracles."""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxgroup.errors import SpecError
from approxgroup.groups import make_context
from approxgroup.progression import (
    abelian_freiman_fit,
    coset_nilprogression_fit,
    enumerate_nilprogression,
    generated_step,
    make_nilprogression,
    verify_fit,
)
from approxgroup.setcalc import build_set, mul_sets, product_set, symmetrize
from approxgroup.structure import nilpotent_structure
from approxgroup.subgroups import whole_group

from conftest import standard_ball


def words_oracle(ctx, xs, Ls):
    """Every admissible word, walked recursively without any sharing."""
    letters = [(i, x) for i, x in enumerate(xs)] + [(i, ctx.inv(x)) for i, x in enumerate(xs)]
    out = set()

    def walk(g, budget):
        out.add(g)
        for i, x in letters:
            if budget[i]:
                walk(ctx.mul(g, x), budget[:i] + (budget[i] - 1,) + budget[i + 1:])

    walk(ctx.identity, tuple(Ls))
    return out


def _ints(ctx, A):
    return sorted(ctx.coords(k)[0] for k in A.keys())


# -- enumeration ------------------------------------------------------------


def test_progression_examples(Z, heis_int):
    for L in range(5):
        assert _ints(Z, enumerate_nilprogression(Z, [(1,)], [L])) == list(range(-L, L + 1))
    x, y = heis_int.generators()
    assert len(enumerate_nilprogression(heis_int, [x, y], [0, 0])) == 1
    assert len(enumerate_nilprogression(heis_int, [x, y], [1, 1])) == 13
    with pytest.raises(SpecError):
        enumerate_nilprogression(Z, [(1,)], [1, 2])
    with pytest.raises(SpecError):
        enumerate_nilprogression(Z, [(1,)], [-1])


def test_nilprogression_step(heis_int, F2):
    x, y = heis_int.generators()
    assert make_nilprogression(heis_int, [x, y], [2, 2]).step == 2
    assert generated_step(heis_int, [x]) == 1
    assert generated_step(heis_int, []) == 0
    assert generated_step(F2, F2.generators(), max_weight=5) is None
    assert generated_step(make_context("ut_int:4"), make_context("ut_int:4").generators()) == 3


LS = st.lists(st.integers(0, 4), min_size=1, max_size=3).filter(lambda L: sum(L) <= 8)


@pytest.mark.parametrize("spec", ["ut_int:3", "ut_int:4", "free:2", "ut_mod:3:5", "abelian:0,0"])
@settings(max_examples=25)
@given(seed=st.integers(0, 10**6), Ls=LS)
def test_enumeration_matches_words(spec, seed, Ls):
    ctx = make_context(spec)
    rng = random.Random(seed)
    xs = [ctx.random_key(rng) for _ in Ls]
    got = enumerate_nilprogression(ctx, xs, Ls)
    assert set(got.keys()) == words_oracle(ctx, xs, Ls)


@pytest.mark.parametrize("spec", ["ut_int:3", "free:2", "ut_mod:4:2"])
@settings(max_examples=25)
@given(seed=st.integers(0, 10**6), Ls=LS, bump=st.integers(0, 2))
def test_enumeration_symmetric_and_monotone(spec, seed, Ls, bump):
    ctx = make_context(spec)
    rng = random.Random(seed)
    xs = [ctx.random_key(rng) for _ in Ls]
    P = enumerate_nilprogression(ctx, xs, Ls)
    assert P.contains_key(ctx.identity)
    assert all(P.contains_key(ctx.inv(g)) for g in P.keys())
    bigger = list(Ls)
    bigger[0] += bump
    assert P.issubset(enumerate_nilprogression(ctx, xs, bigger))


# -- abelian fitting --------------------------------------------------------


def test_fit_examples(Z):
    G = make_context("abelian:6,2")
    fit = abelian_freiman_fit(build_set(G, "whole"))
    assert fit.found and fit.rank == 0 and fit.exponent == 1 and len(fit.H) == 12
    for N in (1, 4, 7):
        fit = abelian_freiman_fit(build_set(Z, {"interval": N}))
        assert fit.found and fit.rank == 1 and fit.exponent == 1 and len(fit.H) == 1
        assert fit.progression.bounds == [N] and fit.progression.generators in ([(1,)], [(-1,)])
    Z2 = make_context("abelian:0,0")
    box = symmetrize(Z2, [(a, b) for a in range(-3, 4) for b in range(-2, 3)])
    fit = abelian_freiman_fit(box)
    assert fit.found and fit.rank == 2 and fit.exponent == 1 and verify_fit(box, fit)


def test_fit_preference_orders():
    # an interval that fills Z/26 after three steps: least rank is the whole
    # group at exponent 3, least exponent is the interval itself
    A = build_set(make_context("abelian:26"), {"interval": 5})
    by_rank = abelian_freiman_fit(A)
    by_exp = abelian_freiman_fit(A, prefer="exponent")
    assert (by_rank.rank, by_rank.exponent, len(by_rank.H)) == (0, 3, 26)
    assert (by_exp.rank, by_exp.exponent, len(by_exp.H)) == (1, 1, 1)
    assert verify_fit(A, by_rank) and verify_fit(A, by_exp)
    with pytest.raises(SpecError):
        abelian_freiman_fit(A, prefer="size")


def test_fit_rejects_noncommutative(heis5):
    with pytest.raises(SpecError):
        abelian_freiman_fit(standard_ball(heis5, 1))


def _divisor_subgroups(M):
    return [set(range(0, M, d)) for d in range(1, M + 1) if M % d == 0]


def optimal_rank_oracle(M, A, exp_cap):
    """Least ``r <= 1`` with ``A ⊆ H + P(x; L) ⊆ A^e`` for some ``e <= exp_cap`` (``None`` if > 1).

    ``M = 0`` means ℤ, where the only finite subgroup is ``{0}``.
    """
    def add(X, Y):
        return {(a + b) % M if M else a + b for a in X for b in Y}

    powers = [None, set(A)]
    for _ in range(exp_cap - 1):
        powers.append(add(powers[-1], A))
    Hs = _divisor_subgroups(M) if M else [{0}]
    for e in range(1, exp_cap + 1):
        if any(A <= H <= powers[e] for H in Hs):
            return 0
    for e in range(1, exp_cap + 1):
        Ae = powers[e]
        for H in Hs:
            if not H <= Ae:
                continue
            for x in sorted(Ae):
                line = set(H)
                for L in range(1, (M or 2 * max(Ae) + 1) + 1):
                    line |= {(h + L * x) % M if M else h + L * x for h in H}
                    line |= {(h - L * x) % M if M else h - L * x for h in H}
                    if not line <= Ae:
                        break
                    if A <= line:
                        return 1
    return None


def _cyclic_set(M, seed, size):
    rng = random.Random(seed)
    lo = -(M // 2) if M else -15
    hi = (M - 1) // 2 if M else 15
    vals = {rng.randint(lo, hi) for _ in range(size)}
    vals |= {-v for v in vals} | {0}
    return {v % M for v in vals} if M else vals


@pytest.mark.parametrize("M", [0, 12, 20, 29, 45])
@settings(max_examples=20)
@given(seed=st.integers(0, 10**6), size=st.integers(1, 6))
def test_fit_rank_is_optimal(M, seed, size):
    A_int = _cyclic_set(M, seed, size)
    ctx = make_context(f"abelian:{M}")
    A = symmetrize(ctx, [ctx.key_of([v]) for v in A_int])
    fit = abelian_freiman_fit(A, rank_cap=2, exp_cap=4)
    want = optimal_rank_oracle(M, A_int, 4)
    if want is None:
        assert not fit.found or fit.rank >= 2
    else:
        assert fit.found and fit.rank == want
    if fit.found:
        assert verify_fit(A, fit)


@pytest.mark.parametrize("spec", ["abelian:0,0", "abelian:6,4", "abelian:50", "abelian:3,3,3"])
@settings(max_examples=15)
@given(seed=st.integers(0, 10**6), size=st.integers(1, 12))
def test_fit_containments(spec, seed, size):
    ctx = make_context(spec)
    rng = random.Random(seed)
    if ctx.finite:
        keys = [ctx.random_key(rng) for _ in range(size)]
    else:
        keys = [(rng.randint(-4, 4), rng.randint(-4, 4)) for _ in range(size)]
    A = symmetrize(ctx, keys)
    fit = abelian_freiman_fit(A, rank_cap=3, exp_cap=4)
    if fit.found:
        box = fit.coset_progression()
        Ae = set(product_set(A, fit.exponent).keys())
        assert set(A.keys()) <= box <= Ae
        assert fit.rank == len(fit.progression.generators) and fit.exponent <= 4


# -- coset nilprogressions ----------------------------------------------------


def _checks_pass(cp):
    return all(c["status"] == "pass" for c in cp.checks)


def test_coset_fit_subgroup(heis3):
    A = build_set(heis3, "whole")
    cp = coset_nilprogression_fit(A, nilpotent_structure(A))
    assert cp.rank == 0 and len(cp.QH) == 27 and len(cp.cover) == 1 and _checks_pass(cp)


def test_coset_fit_interval():
    ctx = make_context("abelian:101")
    A = build_set(ctx, {"interval": 4})
    cp = coset_nilprogression_fit(A, nilpotent_structure(A))
    assert cp.rank <= 1 and A.issubset(cp.QH) and _checks_pass(cp)


def test_coset_fit_heisenberg_ball(heis5):
    A = standard_ball(heis5, 2)
    cp = coset_nilprogression_fit(A, nilpotent_structure(A))
    assert _checks_pass(cp) and cp.step <= 2
    assert A.issubset(mul_sets(cp.cover, cp.QH))
    assert cp.QH.issubset(product_set(A, cp.exponent))
    assert cp.QH.issubset(cp.C) and whole_group(heis5).issubset(cp.C) is (len(cp.C) == 125)
