"""The nested chain, torsion/commutator structure and the lifting loop."""
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxgroup.errors import HypothesisViolation, SpecError
from approxgroup.groups import make_context
from approxgroup.setcalc import SymSet, build_set, mul_sets, product_set, symmetrize
from approxgroup.structure import (
    commutator_chain,
    commutators_in_A4_check,
    dimension_chain,
    find_nonnormal_witness,
    gleason_check,
    guralnick_set,
    nilpotent_structure,
    refined_central_series,
    torsion_structure,
)
from approxgroup.subgroups import QuotientCtx, center, closure, lower_central_series, whole_group

from conftest import standard_ball


def _box(ctx, R):
    """Symmetrised ``{x^a y^b : |a|, |b| <= R}`` in a 3x3 unitriangular group."""
    m = ctx.m
    keys = [ctx.from_coords([a % m, (a * b) % m, b % m]) for a in range(-R, R + 1) for b in range(-R, R + 1)]
    return symmetrize(ctx, keys)


def _passed(props):
    return [p["name"] for p in props if p["status"] != "pass"] == []


# -- chain ------------------------------------------------------------------


def test_chain_of_finite_subgroup(heis3):
    A = build_set(heis3, "whole")
    ch = dimension_chain(A)
    assert ch.k == 0 and ch.K == 1 and not ch.bug_flag
    assert ch.D[0] == whole_group(heis3)
    assert ch.gleason["passed"] and ch.gleason["k"] == 0


@pytest.mark.parametrize("N,M", [(2, 101), (3, 101), (5, 257)])
def test_chain_of_interval(N, M):
    ctx = make_context(f"abelian:{M}")
    A = build_set(ctx, {"interval": N})
    ch = dimension_chain(A)
    assert ch.k == 1 and not ch.bug_flag
    assert ch.D[0].is_trivial()
    g = ch.gammas[0]
    assert product_set(A, 6).contains_key(g) and not product_set(A, 2).contains_key(g)
    assert ch.C[1] == whole_group(ctx)


@pytest.mark.parametrize("spec", ["ut_mod:3:3", "ut_mod:3:5", "ut_mod:4:2", "abelian:12", "abelian:3,9"])
@settings(max_examples=15)
@given(seed=st.integers(0, 10**6), size=st.integers(1, 4))
def test_chain_properties(spec, seed, size):
    ctx = make_context(spec)
    rng = random.Random(seed)
    A = symmetrize(ctx, [ctx.random_key(rng) for _ in range(size)])
    ch = dimension_chain(A)
    assert not ch.bug_flag and ch.k <= ch.K**6
    A2, A6 = product_set(A, 2), product_set(A, 6)
    for i in range(1, ch.k + 1):
        g = ch.gammas[i - 1]
        # independent recheck of the γ placement and the size bound
        assert A6.contains_key(g)
        assert g not in {ctx.mul(a, h) for a in A2.keys() for h in ch.H[i - 1].keys()}
        assert Fraction(len(A2.restrict(ch.C[i])), len(A)) * ch.K ** (35 * i) >= 1
        assert ch.C[i].issubset(ch.C[i - 1])
    # the last C is covered by A^2 H_k
    Ck, Hk = ch.C[ch.k], ch.H[ch.k]
    assert set(Ck.keys()) <= {ctx.mul(a, h) for a in A2.keys() for h in Hk.keys()}


# -- witnesses --------------------------------------------------------------


def test_nonnormal_witness_integers(Z):
    B = build_set(Z, {"interval": 1})
    assert find_nonnormal_witness(B).key == (-2,)
    G = build_set(make_context("abelian:7"), "whole")
    assert find_nonnormal_witness(G) is None


def test_nonnormal_witness_nonnormal_subgroup(heis3):
    x = heis3.key_of("x")
    B = SymSet(heis3, closure(heis3, [x]).keys() + [heis3.key_of("y"), heis3.key_of("Y")])
    Zn = closure(heis3, [x, heis3.key_of("z")])
    w = find_nonnormal_witness(B, Zn)
    # B ∩ Z = ⟨x⟩ is closed but not normal: the witness is in B^3 ∩ Z \ B
    assert w is not None
    assert product_set(B, 3).contains_key(w.key) and not B.contains_key(w.key) and Zn.contains_key(w.key)
    with pytest.raises(SpecError):
        find_nonnormal_witness(B, closure(heis3, [x]))


def test_gleason_vacuous_and_violations():
    ctx = make_context("abelian:101")
    A = build_set(ctx, {"interval": 3})
    assert gleason_check(A, [], [], 6)["passed"]
    G = whole_group(ctx)
    rep = gleason_check(A, [G], [[7]], 6)
    assert rep["passed"] and rep["disjoint"] and rep["power_size"] == 43
    with pytest.raises(HypothesisViolation) as ei:
        gleason_check(A, [G], [[2]], 6)
    assert ei.value.index == 1 and ei.value.witness is not None
    with pytest.raises(SpecError):
        gleason_check(A, [G], [], 6)


# -- torsion ----------------------------------------------------------------


def test_torsion_subgroup_and_heisenberg(heis3):
    E = make_context("abelian:2,2,2")
    res = torsion_structure(build_set(E, "whole"), 2)
    assert res.C == whole_group(E) and len(res.cover) == 1 and not res.bug_flag
    res = torsion_structure(_box(heis3, 1), 3)
    assert len(res.C) == 27 and not res.bug_flag


def test_torsion_order_violation(heis5):
    with pytest.raises(HypothesisViolation) as ei:
        torsion_structure(standard_ball(heis5, 1), 3)
    assert ei.value.witness is not None


# -- G = A·Z(G) ---------------------------------------------------------------


def test_commutators_in_A4(heis3, heis5):
    assert commutators_in_A4_check(whole_group(heis3), _box(heis3, 1))
    assert commutators_in_A4_check(whole_group(heis5), _box(heis5, 2))
    E = make_context("abelian:6")
    assert commutators_in_A4_check(whole_group(E), build_set(E, "whole"))
    with pytest.raises(HypothesisViolation):
        commutators_in_A4_check(whole_group(heis5), _box(heis5, 1))


def test_refined_series_heisenberg(heis3):
    s = refined_central_series(whole_group(heis3), _box(heis3, 1))
    assert s.r == 1 and s.Gamma[0] == closure(heis3, ["z"]) and s.Gamma[1].is_trivial()
    a, b = s.factorizations[0]
    assert heis3.commutator(a, b) == s.commutators[0]
    assert _passed(s.properties)


def _surjective_reps(ctx):
    G = whole_group(ctx)
    return G, symmetrize(ctx, QuotientCtx(G, center(G)).reps.tolist())


def test_refined_series_ut4():
    ctx = make_context("ut_mod:4:2")
    G, A = _surjective_reps(ctx)
    s = refined_central_series(G, A)
    series, _ = lower_central_series(G)
    assert s.Gamma[0] == series[1] and series[2] in s.Gamma
    assert s.Gamma[-1].is_trivial() and _passed(s.properties)
    # each step of the refinement has cyclic (here order 2) factor
    assert all(len(s.Gamma[i]) == 2 * len(s.Gamma[i + 1]) for i in range(s.r))


def test_commutator_chain(heis3):
    cc = commutator_chain(whole_group(heis3), _box(heis3, 1))
    assert not cc.bug_flag and cc.H[0].is_trivial()
    derived = closure(heis3, ["z"])
    A4 = product_set(_box(heis3, 1), 4)
    assert set(derived.keys()) <= {heis3.mul(a, h) for a in A4.keys() for h in cc.H[cc.k].keys()}
    E = make_context("abelian:5")
    cc = commutator_chain(whole_group(E), build_set(E, "whole"))
    assert cc.k == 0


@pytest.mark.parametrize("spec", ["ut_mod:3:5", "ut_mod:4:2"])
def test_commutator_chain_surjective(spec):
    ctx = make_context(spec)
    G, A = _surjective_reps(ctx)
    cc = commutator_chain(G, A)
    assert not cc.bug_flag and cc.k <= cc.series.r


def test_guralnick(heis3):
    G = whole_group(heis3)
    D = closure(heis3, ["y", "z"])
    res = guralnick_set(G, D, ["x"])
    assert res.equal and res.products == closure(heis3, ["z"])
    E = make_context("abelian:4,2")
    assert guralnick_set(whole_group(E), whole_group(E), E.generators()).commutator.is_trivial()
    with pytest.raises(HypothesisViolation):
        guralnick_set(G, closure(heis3, ["x"]), ["y"])


# -- nilpotent structure ----------------------------------------------------


def test_nilpotent_structure_subgroup(heis3):
    res = nilpotent_structure(build_set(heis3, "whole"))
    assert res.extras["k"] == 0 and res.C == res.H and len(res.cover) == 1 and not res.bug_flag


def test_nilpotent_structure_interval():
    ctx = make_context("abelian:101")
    res = nilpotent_structure(build_set(ctx, {"interval": 4}))
    assert not res.bug_flag and res.C == whole_group(ctx) and res.step <= 1


def test_nilpotent_structure_heisenberg_ball(heis5):
    A = standard_ball(heis5, 2)
    res = nilpotent_structure(A)
    assert not res.bug_flag
    assert A.issubset(mul_sets(res.cover, res.C))
    assert res.step is not None and res.step <= res.K**6
