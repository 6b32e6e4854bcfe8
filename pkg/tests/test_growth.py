"""Ball growth, the one-scale gap, the 5-adic scale and the certificate pipeline."""
import csv
import io
import math
import random

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxgroup.errors import HypothesisViolation, SpecError
from approxgroup.groups import make_context
from approxgroup.growth import (
    _at_most,
    ball_sizes,
    dyadic_scale,
    gap_detect,
    gap_threshold,
    growth_certificate,
    required_radius,
    scale_threshold,
)
from approxgroup.resid import QuotientFamily
from approxgroup.setcalc import SymSet, symmetrize

from conftest import gens_set


def bfs_sizes(ctx, gens, n_max):
    seen, frontier, out = {ctx.identity}, [ctx.identity], []
    for _ in range(n_max):
        frontier = [y for y in {ctx.mul(g, s) for g in frontier for s in gens} if y not in seen]
        seen.update(frontier)
        out.append(len(seen))
    return out


# thresholds evaluated once with double-precision math and frozen
FROZEN_GAP = {(100, 1.0): 1133.3374807548, (10, 1.0): 6.8238967217, (41, 1.0): 130.6059978792}
FROZEN_SCALE = {(100, 1.0, 5): 2071.2304481110}


def test_threshold_values():
    for (n, c), v in FROZEN_GAP.items():
        assert float(gap_threshold(n, c)) == pytest.approx(v, rel=1e-9)
        assert float(gap_threshold(n, c)) == pytest.approx(math.exp(c * math.log(math.log(n)) * math.log(n)), rel=1e-12)
    for (n, c, a), v in FROZEN_SCALE.items():
        assert float(scale_threshold(n, c, a)) == pytest.approx(v, rel=1e-9)
        assert float(scale_threshold(n, c, a)) == pytest.approx(math.log(n) ** (a * c), rel=1e-12)


def test_guard_band():
    assert _at_most(999, mpmath.mpf(1000))
    # an exact tie is treated as exceeding the threshold
    assert not _at_most(1000, mpmath.mpf(1000))
    assert _at_most(1133, gap_threshold(100, 1.0)) and not _at_most(1134, gap_threshold(100, 1.0))


# -- ball sizes ---------------------------------------------------------------


def test_closed_forms(Z, F2):
    assert ball_sizes(Z, gens_set(Z), 200).sizes == [2 * n + 1 for n in range(1, 201)]
    Z2 = make_context("abelian:0,0")
    assert ball_sizes(Z2, gens_set(Z2), 40).sizes == [2 * n * n + 2 * n + 1 for n in range(1, 41)]
    assert ball_sizes(F2, gens_set(F2), 8).sizes == [2 * 3**n - 1 for n in range(1, 9)]


def test_ball_errors(Z, heis3):
    with pytest.raises(SpecError):
        ball_sizes(Z, gens_set(Z), 0)
    with pytest.raises(SpecError):
        ball_sizes(heis3, gens_set(Z), 3)
    rep = ball_sizes(Z, gens_set(Z), 3)
    assert rep.size(0) == 1
    with pytest.raises(SpecError):
        rep.size(4)


def test_partial_on_cap():
    F2 = make_context({"kind": "free", "rank": 2, "cap": 500})
    rep = ball_sizes(F2, gens_set(F2), 10)
    assert rep.partial and rep.sizes == [2 * 3**n - 1 for n in range(1, 6)]


@pytest.mark.parametrize("spec", ["ut_mod:3:5", "ut_mod:3:13", "ut_mod:4:3", "abelian:40,40", "ut_int:3", "free:2"])
@settings(max_examples=10)
@given(seed=st.integers(0, 10**6), size=st.integers(1, 3))
def test_ball_sizes_match_bfs(spec, seed, size):
    # covers the table path (|G| <= 1024), the mask path and the set path
    ctx = make_context(spec)
    rng = random.Random(seed)
    S = symmetrize(ctx, [ctx.random_key(rng) for _ in range(size)])
    n = 6 if spec in ("free:2", "ut_int:3") else 10
    got = ball_sizes(ctx, S, n).sizes
    assert got == bfs_sizes(ctx, S.keys(), n)
    full = [1] + got
    for a in range(n + 1):
        for b in range(n + 1 - a):
            assert full[a + b] <= full[a] * full[b]
    assert all(x <= y for x, y in zip(full, full[1:]))


def test_heisenberg_integer_exponent(heis_int):
    rep = ball_sizes(heis_int, gens_set(heis_int), 30)
    est = math.log(rep.size(30) / rep.size(10)) / math.log(3)
    assert 3.5 <= est <= 4.5


# -- gap and scale ------------------------------------------------------------


def test_gap_examples(Z, F2, heis3):
    triv = ball_sizes(heis3, SymSet(heis3, [heis3.identity]), 20)
    assert gap_detect(triv, 1.0) == list(range(3, 21))
    rep = ball_sizes(Z, gens_set(Z), 100)
    assert 100 in gap_detect(rep, 1.0)
    rep = ball_sizes(F2, gens_set(F2), 10)
    assert rep.size(10) == 118097 and 10 not in gap_detect(rep, 1.0)
    with pytest.raises(SpecError):
        gap_detect(rep, 0)


def test_dyadic_scale(Z, F2, heis3):
    rep = ball_sizes(Z, gens_set(Z), required_radius(100))
    assert dyadic_scale(rep, 100, 1.0) == 0
    assert rep.scale["ratios"] == [[0, 21, 101]]
    triv = ball_sizes(heis3, SymSet(heis3, [heis3.identity]), 250)
    assert dyadic_scale(triv, 100, 1.0) == 0
    rep = ball_sizes(F2, gens_set(F2), required_radius(4))
    with pytest.raises(HypothesisViolation):
        dyadic_scale(rep, 4, 0.1)


@pytest.mark.parametrize("spec", ["abelian:0", "abelian:0,0", "ut_mod:3:11"])
@pytest.mark.parametrize("n,c", [(25, 1.0), (100, 0.5), (30, 2.0)])
def test_dyadic_scale_inequality(spec, n, c):
    ctx = make_context(spec)
    rep = ball_sizes(ctx, gens_set(ctx), required_radius(n))
    try:
        r = dyadic_scale(rep, n, c)
    except HypothesisViolation as exc:
        thr = scale_threshold(n, c)
        assert all(hi > thr * lo for _, lo, hi in exc.witness)
        return
    b = math.isqrt(n - 1) + 1
    assert rep.size(5 ** (r + 1) * b) <= float(scale_threshold(n, c)) * rep.size(5**r * b)
    assert 5**r <= math.sqrt(n)


def test_csv_export(Z):
    rep = ball_sizes(Z, gens_set(Z), 120)
    rows = list(csv.reader(io.StringIO(rep.to_csv(1.0))))
    assert rows[0] == ["n", "size", "threshold", "flag"]
    flagged = [int(r[0]) for r in rows[1:] if r[3] == "1"]
    assert flagged == gap_detect(rep, 1.0)
    assert rows[98][:2] == ["100", "201"]


# -- certificate --------------------------------------------------------------


def test_certificate_trivial(heis3):
    cert = growth_certificate(heis3, SymSet(heis3, [heis3.identity]), 10, 1.0)
    assert cert.stages["approx"]["K"] == 1 and cert.stages.get("trivial_group") and not cert.bug_flag


def test_certificate_heisenberg_mod5(heis5):
    cert = growth_certificate(heis5, gens_set(heis5), 41, 1.0)
    st_ = cert.stages["structure"]
    assert not cert.bug_flag and st_["step"] <= 2 <= st_["step_target"]
    # H is the whole group: its centraliser is the centre, of index 25
    assert st_["stabiliser_index"] == 25


def test_certificate_finite_plane():
    ctx = make_context("abelian:23,23")
    cert = growth_certificate(ctx, gens_set(ctx), 100, 1.0)
    assert not cert.bug_flag and cert.stages["structure"]["step"] <= 1
    assert cert.stages["structure"]["stabiliser_index"] == 1


def test_certificate_rejects_without_gap(F2, Z):
    with pytest.raises(HypothesisViolation):
        growth_certificate(F2, gens_set(F2), 4, 1.0)
    with pytest.raises(SpecError):
        growth_certificate(Z, gens_set(Z), 100, 1.0)
    cert = growth_certificate(Z, gens_set(Z), 100, 1.0, fam=QuotientFamily.from_spec(Z, {"mod_range": [2, 2000]}))
    assert not cert.bug_flag and cert.stages["structure"]["step"] <= 1
