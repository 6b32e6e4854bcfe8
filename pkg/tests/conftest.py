import pytest
from hypothesis import HealthCheck, settings

from approxgroup.groups import make_context
from approxgroup.setcalc import SymSet, build_set, symmetrize

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def heis3():
    return make_context("ut_mod:3:3")


@pytest.fixture(scope="session")
def heis5():
    return make_context("ut_mod:3:5")


@pytest.fixture(scope="session")
def heis_int():
    return make_context("ut_int:3")


@pytest.fixture(scope="session")
def Z():
    return make_context("abelian:0")


@pytest.fixture(scope="session")
def F2():
    return make_context("free:2")


def standard_ball(ctx, r):
    if r == 0:
        return SymSet(ctx, [ctx.identity])
    return build_set(ctx, {"ball": {"gens": [ctx.to_json(g) for g in ctx.generators()], "radius": r}})


def gens_set(ctx):
    return symmetrize(ctx, ctx.generators())


# --------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion at the end of the run
# --------------------------------------------------------------------------

ACCEPTANCE = {}


def record(criterion, ok, detail):
    """Record (and print) the outcome of one part of an acceptance criterion."""
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        ok = all(p[0] for p in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {crit}: {detail}")
