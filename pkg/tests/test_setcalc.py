"""Set calculus: products, doubling, covers and the basic inequalities."""
import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from approxgroup.errors import SpecError
from approxgroup.groups import make_context
from approxgroup.setcalc import (
    ElementSet,
    SymSet,
    build_set,
    centraliser_slice,
    certify_approx,
    cover_translates,
    covers,
    doubling,
    mul_sets,
    product_set,
    ruzsa_packing,
    symmetrize,
    verify_section2,
)
from approxgroup.subgroups import PredicateSubgroup, closure

from conftest import gens_set, standard_ball


def _brute_power(ctx, keys, m):
    out = {ctx.identity}
    for word in itertools.product(keys, repeat=m):
        out.add(ctx.product(word))
    return out


def _random_symset(ctx, seed, size):
    rng = random.Random(seed)
    return symmetrize(ctx, [ctx.random_key(rng) for _ in range(size)])


FINITE = ["ut_mod:3:3", "ut_mod:3:5", "ut_mod:4:2", "abelian:12", "abelian:4,6", "abelian:3,3,3"]


def test_symmetrize_examples(heis3):
    x = heis3.generators()[0]
    assert len(symmetrize(heis3, [])) == 1
    assert len(symmetrize(heis3, [x])) == 3
    assert symmetrize(heis3, [x]) == symmetrize(heis3, [x, heis3.inv(x)])


def test_product_set_examples(Z, heis_int):
    A = build_set(Z, {"interval": 1})
    assert sorted(k[0] for k in product_set(A, 2).keys()) == [-2, -1, 0, 1, 2]
    one = SymSet(Z, [Z.identity])
    assert len(product_set(one, 7)) == 1
    assert len(product_set(gens_set(heis_int), 2)) == 17


@pytest.mark.parametrize("spec", FINITE + ["ut_int:3", "abelian:0,0", "free:2"])
@given(seed=st.integers(0, 10**6), size=st.integers(1, 4), m=st.integers(1, 3))
def test_product_set_matches_brute_force(spec, seed, size, m):
    ctx = make_context(spec)
    A = _random_symset(ctx, seed, size)
    assert set(product_set(A, m).keys()) == _brute_power(ctx, A.keys(), m)


@pytest.mark.parametrize("N", [1, 2, 5, 9])
def test_interval_doubling(Z, N):
    A = build_set(Z, {"interval": N})
    assert doubling(A) == Fraction(4 * N + 1, 2 * N + 1)
    cert = certify_approx(A)
    assert cert.verify() and cert.K <= 3
    assert cert.K <= cert.tripling


def test_subgroup_certificates(heis3):
    G = build_set(heis3, "whole")
    cert = certify_approx(G)
    assert cert.K == 1 and cert.X.keys() == [heis3.identity] and doubling(G) == 1


def test_heisenberg_ball_certificate(heis5):
    A = standard_ball(heis5, 2)
    cert = certify_approx(A)
    assert cert.verify()
    assert covers(cert.X, A, product_set(A, 2)) is None


@pytest.mark.parametrize("spec", FINITE + ["ut_int:3", "free:2"])
@given(seed=st.integers(0, 10**6), size=st.integers(1, 5))
def test_certificate_properties(spec, seed, size):
    ctx = make_context(spec)
    A = _random_symset(ctx, seed, size)
    cert = certify_approx(A)
    A2 = product_set(A, 2)
    # independent containment check: every element of A^2 is x·a for some x in X, a in A
    xa = {ctx.mul(x, a) for x in cert.X.keys() for a in A.keys()}
    assert set(A2.keys()) <= xa
    assert cert.doubling <= cert.K
    # the disjoint packing is bounded by |A^3|/|A| and its A^2-translates cover A^2
    X0 = ruzsa_packing(A)
    assert len(X0) * len(A) <= len(product_set(A, 3))
    assert covers(ElementSet(ctx, X0), A2, A2) is None


def test_cover_translates_examples(Z):
    A, B = build_set(Z, {"interval": 6}), build_set(Z, {"interval": 3})
    X = cover_translates(A, B)
    assert len(X) <= 3 and covers(X, B, A) is None
    assert cover_translates(B, B).keys() == [Z.identity]
    assert cover_translates(B, A).keys() == [Z.identity]
    with pytest.raises(SpecError):
        cover_translates(A, ElementSet(Z, [(5,)]))


def test_section2_interval_mod_even(Z):
    A = build_set(Z, {"interval": 2})
    H = PredicateSubgroup(Z, lambda k: k[0] % 2 == 0, "2Z")
    rep = verify_section2(A, H, 2, certify_approx(A))
    sand = next(c for c in rep["claims"] if c["name"] == "sandwich")
    assert (sand["lower"], sand["middle"], sand["upper"]) == (5, 10, 13)
    assert rep["passed"]


def test_section2_whole_group(heis3):
    A = standard_ball(heis3, 1)
    rep = verify_section2(A, closure(heis3, heis3.generators()), 3, certify_approx(A))
    sand = next(c for c in rep["claims"] if c["name"] == "sandwich")
    assert sand["cosets"] == 1 and rep["passed"]


def test_section2_trivial_intersection(Z):
    A = build_set(Z, {"interval": 2})
    H = PredicateSubgroup(Z, lambda k: k[0] % 7 == 0, "7Z")
    rep = verify_section2(A, H, 3, certify_approx(A))
    inter = next(c for c in rep["claims"] if c["name"] == "intersection")
    assert inter["status"] == "pass" and rep["passed"]


@pytest.mark.parametrize("spec", FINITE)
@given(seed=st.integers(0, 10**6), size=st.integers(1, 4), m=st.integers(2, 4), hseed=st.integers(0, 10**6))
def test_section2_properties(spec, seed, size, m, hseed):
    ctx = make_context(spec)
    A = _random_symset(ctx, seed, size)
    H = closure(ctx, [ctx.random_key(random.Random(hseed))])
    assert verify_section2(A, H, m, certify_approx(A))["passed"]


def test_centraliser_slice_heisenberg(heis3):
    G = build_set(heis3, "whole")
    x = heis3.key_of("x")
    a, sl = centraliser_slice(G, x, 1, 1)
    assert len(sl) == 9
    assert all(heis3.commutator(x, s) == heis3.identity for s in sl.keys())


def test_centraliser_slice_abelian_and_central(heis5):
    ctx = make_context("abelian:7")
    A = build_set(ctx, {"interval": 2})
    _, sl = centraliser_slice(A, ctx.generators()[0], 1, 3)
    assert len(sl) == len(A)
    B = standard_ball(heis5, 2)
    _, sl = centraliser_slice(B, heis5.key_of("z"), 2, 5)
    assert len(sl) == len(B)


@pytest.mark.parametrize("spec", ["ut_mod:3:5", "ut_mod:4:2"])
@given(seed=st.integers(0, 10**6), size=st.integers(1, 4))
def test_centraliser_slice_commutes(spec, seed, size):
    ctx = make_context(spec)
    A = _random_symset(ctx, seed, size)
    w = A.keys()[-1]
    _, sl = centraliser_slice(A, w, 1, certify_approx(A).K)
    assert all(ctx.commutator(w, s) == ctx.identity for s in sl.keys())


def test_mul_sets_subgroup_paths_agree():
    ctx = make_context("ut_mod:3:17")
    H = closure(ctx, [ctx.key_of("z"), ctx.key_of("x")])
    S = _random_symset(ctx, 3, 40)
    direct = {ctx.mul(s, h) for s in S.keys() for h in H.keys()}
    assert set(mul_sets(S, H).keys()) == direct
    direct = {ctx.mul(h, s) for s in S.keys() for h in H.keys()}
    assert set(mul_sets(H, S).keys()) == direct


@pytest.mark.parametrize("hgens", [["z"], ["x", "z"], ["x", "y"]])
@pytest.mark.parametrize("left", [True, False])
def test_coset_union_branches(hgens, left):
    # small H (sweep), large H (coset by coset) and a many-element S (components)
    from approxgroup.setcalc import _coset_union

    ctx = make_context("ut_mod:3:7")
    H = closure(ctx, [ctx.key_of(g) for g in hgens])
    for S in (_random_symset(ctx, 5, 30), build_set(ctx, "whole")):
        got = set(_coset_union(ctx, S.idx, H, left).tolist())
        want = {ctx.mul(s, h) if left else ctx.mul(h, s) for s in S.keys() for h in H.keys()}
        assert got == want


def test_build_set_errors(heis_int):
    with pytest.raises(SpecError):
        build_set(heis_int, "whole")
    with pytest.raises(SpecError):
        build_set(heis_int, {"interval": 3})
    with pytest.raises(SpecError):
        build_set(heis_int, "ball:r=2")
