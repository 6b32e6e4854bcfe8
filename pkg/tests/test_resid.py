"""Nilpotent quotients faithful on powers of A, subgroup lifting, lifted structure."""
import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxgroup.errors import FamilyExhausted, HypothesisViolation, SpecError
from approxgroup.groups import make_context
from approxgroup.resid import (
    QuotientFamily,
    _entry_bound,
    _heisenberg_extent,
    _step_check,
    kernel_clear,
    kernel_clear_hom,
    lift_subgroup,
    residual_structure,
    residual_torsion_structure,
    transport_is_multiplicative,
)
from approxgroup.setcalc import SymSet, build_set, product_set, symmetrize
from approxgroup.subgroups import closure, trivial_subgroup, whole_group

from conftest import gens_set, standard_ball


def _matrices(ctx, S):
    return [np.array(ctx.matrix(k), dtype=object) for k in S.keys()]


def _power_by_matrices(ctx, A, w):
    """``A^w`` as a set of integer matrices, multiplied out with numpy."""
    base = {tuple(map(tuple, m)) for m in _matrices(ctx, A)}
    cur = {tuple(map(tuple, np.eye(ctx.n, dtype=int).astype(object)))}
    for _ in range(w):
        cur = {tuple(map(tuple, np.array(a, dtype=object).dot(np.array(b, dtype=object)))) for a in cur for b in base}
    return cur


def _first_faithful_modulus(mats, lo, hi, n):
    ident = tuple(map(tuple, np.eye(n, dtype=int)))
    for m in range(lo, hi + 1):
        if not any(g != ident and all(g[i][j] % m == 0 for i in range(n) for j in range(i + 1, n)) for g in mats):
            return m
    return None


# -- families ---------------------------------------------------------------


def test_family_specs(heis_int, F2):
    fam = QuotientFamily.from_spec(heis_int, {"mod_range": [3, 6]})
    assert len(fam) == 4 and [phi.target.m for phi in fam] == [3, 4, 5, 6]
    assert all(fam.verify_member(phi) for phi in fam)
    fam = QuotientFamily.from_spec(F2, {"generator_images": [["x", "y"]], "target": "ut_mod:3:5"})
    assert len(fam) == 1 and fam.verify_member(fam[0])
    assert len(QuotientFamily.from_spec(make_context("ut_mod:3:3"), "identity")) == 1
    for bad in ({"mod_range": [1, 4]}, {"mod_range": [5, 4]}, {"what": 1}, 7):
        with pytest.raises(SpecError):
            QuotientFamily.from_spec(heis_int, bad)
    with pytest.raises(SpecError):
        QuotientFamily.from_spec(heis_int, {"generator_images": [["x", "y"]], "target": "ut_mod:3:5"})
    with pytest.raises(SpecError):
        QuotientFamily.from_spec(F2, {"generator_images": [["x", "y"]], "target": "free:2"})


# -- kernel clearance -------------------------------------------------------


def test_kernel_clear_identity_set(heis_int):
    fam = QuotientFamily.from_spec(heis_int, {"mod_range": [2, 9]})
    assert kernel_clear_hom(SymSet(heis_int, [heis_int.identity]), 3, fam) is fam[0]


@pytest.mark.parametrize("r,M", [(1, 1), (2, 1), (1, 2)])
def test_kernel_clear_matches_matrix_scan(heis_int, r, M):
    A = standard_ball(heis_int, r)
    mats = _power_by_matrices(heis_int, A, 4 * M)
    want = _first_faithful_modulus(mats, 2, 200, 3)
    fam = QuotientFamily.from_spec(heis_int, {"mod_range": [2, 200]})
    phi = kernel_clear_hom(A, M, fam)
    assert phi.target.m == want
    B = max(abs(g[i][j]) for g in mats for i in range(3) for j in range(i + 1, 3))
    assert want <= 2 * B + 1


def test_kernel_clear_free_group(F2):
    A = gens_set(F2)
    spec = {"generator_images": [{"target": "ut_mod:3:3", "images": ["x", "y"]}, {"target": "ut_mod:3:5", "images": ["x", "y"]}]}
    fam = QuotientFamily.from_spec(F2, spec)
    # x^3 has length 3 <= 4 and dies mod 3; mod 5 the shortest kernel words are longer than 4
    phi, ev = kernel_clear_hom(A, 1, fam, return_evidence=True)
    assert phi.target.m == 5 and ev.detail["member"] == 1
    ball4 = product_set(A, 4)
    assert all(k == F2.identity or phi.apply_key(k) != phi.target.identity for k in ball4.keys())
    with pytest.raises(FamilyExhausted) as ei:
        kernel_clear_hom(A, 1, QuotientFamily.from_spec(F2, {"generator_images": [spec["generator_images"][0]]}))
    assert ei.value.witness is not None


@pytest.mark.parametrize("r,w", [(1, 3), (1, 6), (2, 4), (1, 10)])
def test_heisenberg_extent_is_exact(heis_int, r, w):
    A = standard_ball(heis_int, r)
    mats = _power_by_matrices(heis_int, A, w)
    ext = _heisenberg_extent(A, w)
    assert ext["max_abs_a"] == max(abs(g[0][1]) for g in mats)
    assert ext["max_abs_b"] == max(abs(g[1][2]) for g in mats)
    corners = [g[0][2] for g in mats if g[0][1] == 0 and g[1][2] == 0]
    assert (ext["corner_min_at_origin"], ext["corner_max_at_origin"]) == (min(corners), max(corners))


@settings(max_examples=20)
@given(seed=st.integers(0, 10**6), w=st.integers(1, 4))
def test_entry_bound_is_sound(seed, w):
    ctx = make_context("ut_int:4")
    rng = random.Random(seed)
    A = symmetrize(ctx, [ctx.random_key(rng) for _ in range(2)])
    bound = _entry_bound(A, w)
    assert all(abs(x) <= bound for k in product_set(A, w).keys() for x in ctx.coords(k))


def test_kernel_clear_methods_agree(heis_int):
    A = standard_ball(heis_int, 1)
    fam = QuotientFamily.from_spec(heis_int, {"mod_range": [2, 60]})
    for phi in fam:
        exact = kernel_clear(A, 8, phi)
        bound = kernel_clear(A, 8, phi, enumeration_limit=10)
        assert exact.method == "enumeration" and bound.method == "corner-extent"
        # the bound argument is sufficient, never wrong
        if bound.clear:
            assert exact.clear


@pytest.mark.parametrize("moduli", [[0, 0], [0], [3, 0]])
@settings(max_examples=20)
@given(seed=st.integers(0, 10**6), size=st.integers(1, 4))
def test_injective_on_half_power(moduli, seed, size):
    ctx = make_context("abelian:" + ",".join(map(str, moduli)))
    rng = random.Random(seed)
    keys = [tuple(rng.randint(0, s - 1) if s else rng.randint(-3, 3) for s in moduli) for _ in range(size)]
    A = symmetrize(ctx, keys)
    fam = QuotientFamily.from_spec(ctx, {"mod_range": [2, 60]})
    phi = kernel_clear_hom(A, 1, fam)
    P = product_set(A, 2).keys()
    assert len({phi.apply_key(k) for k in P}) == len(P)


# -- lifting ----------------------------------------------------------------


def _z3_by_z():
    ctx = make_context("abelian:3,0")
    A = symmetrize(ctx, [(a, b) for a in range(3) for b in (-1, 0, 1)])
    phi = QuotientFamily.from_spec(ctx, {"mod_range": [7, 7]})[0]
    return ctx, A, phi


def test_lift_trivial_and_torsion_subgroup(heis_int):
    A = standard_ball(heis_int, 1)
    phi = QuotientFamily.from_spec(heis_int, {"mod_range": [11, 11]})[0]
    lift = lift_subgroup(phi, A, trivial_subgroup(phi.target))
    assert lift.subgroup.keys() == [heis_int.identity]
    ctx, A, phi = _z3_by_z()
    H = closure(phi.target, [phi.apply_key((1, 0))])
    lift = lift_subgroup(phi, A, H)
    assert sorted(lift.subgroup.keys()) == [(0, 0), (1, 0), (2, 0)]
    assert lift.normal and transport_is_multiplicative(lift, phi)
    assert all(phi.apply_key(v) == k for k, v in lift.transport.items())


def test_lift_preconditions(Z):
    A = build_set(Z, {"interval": 3})
    phi = QuotientFamily.from_spec(Z, {"mod_range": [5, 5]})[0]
    with pytest.raises(HypothesisViolation) as ei:
        lift_subgroup(phi, A, trivial_subgroup(phi.target))
    assert ei.value.witness is not None
    ctx, A, phi = _z3_by_z()
    with pytest.raises(SpecError):
        lift_subgroup(phi, A, whole_group(phi.target))


@settings(max_examples=25)
@given(seed=st.integers(0, 10**6), size=st.integers(1, 3))
def test_transport_multiplicative(seed, size):
    ctx = make_context("abelian:3,2,0")
    rng = random.Random(seed)
    tors = [(rng.randrange(3), rng.randrange(2), 0) for _ in range(size)]
    T = {(i * t[0] % 3, i * t[1] % 2, 0) for t in tors for i in range(6)}
    T = {((a + c) % 3, (b + d) % 2, 0) for a, b, _ in T for c, d, _ in T}
    A = symmetrize(ctx, [(a, b, c) for a, b, _ in T for c in (-1, 0, 1)])
    phi = QuotientFamily.from_spec(ctx, {"mod_range": [11, 11]})[0]
    H = closure(phi.target, [phi.apply_key(t) for t in tors])
    lift = lift_subgroup(phi, A, H)
    assert transport_is_multiplicative(lift, phi)
    assert len(lift.subgroup) == len(H)


# -- step check ---------------------------------------------------------------


def test_step_check(heis_int):
    gens = list(gens_set(heis_int).keys())
    triv = SymSet(heis_int, [heis_int.identity])
    assert _step_check(heis_int, gens, triv, 3, 10**4, "s")["status"] == "pass"
    bad = _step_check(heis_int, gens, triv, 2, 10**4, "s")
    assert bad["status"] == "fail" and bad["exhaustive"] and len(bad["witness"]) == 2
    sampled = _step_check(heis_int, gens, triv, 9, 50, "s")
    assert sampled["status"] == "pass" and not sampled["exhaustive"] and sampled["tuples"] == 50


# -- pipelines --------------------------------------------------------------


def test_residual_structure_finite_subgroup(heis3):
    A = build_set(heis3, "whole")
    res = residual_structure(A, QuotientFamily.from_spec(heis3, "identity"))
    assert not res.bug_flag
    assert len(closure(heis3, res.C_gens)) == 27 and len(res.cover) == 1


@pytest.mark.parametrize("N", [1, 3])
def test_residual_structure_interval(Z, N):
    A = build_set(Z, {"interval": N})
    res = residual_structure(A, QuotientFamily.from_spec(Z, {"mod_range": [2, 400]}))
    assert not res.bug_flag and res.step <= 1
    assert all(p["status"] == "pass" for p in res.properties)
    keys = res.cover.keys()
    inside = {k for k in product_set(A, 2).keys() if closure(res.quotient.C.ctx, [res.phi.apply_key(k)]).issubset(res.quotient.C)}
    assert all(any(Z.mul(Z.inv(x), a) in inside for x in keys) for a in A.keys())


def test_residual_torsion(heis3):
    A = build_set(heis3, "whole")
    tl = residual_torsion_structure(A, 3, QuotientFamily.from_spec(heis3, "identity"))
    assert len(tl.C.subgroup) == 27 and len(tl.cover) == 1 and not tl.bug_flag
    E = make_context("abelian:3,3,3,3")
    A = symmetrize(E, [(1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 1, 0)])
    tl = residual_torsion_structure(A, 3, QuotientFamily.from_spec(E, "identity"))
    C = tl.C.subgroup
    assert C.audit() and A.issubset(C) and C.issubset(product_set(A, tl.M - 1))


def test_residual_torsion_order_violation(heis5):
    with pytest.raises(HypothesisViolation) as ei:
        residual_torsion_structure(standard_ball(heis5, 1), 3, QuotientFamily.from_spec(heis5, "identity"))
    assert ei.value.witness is not None
