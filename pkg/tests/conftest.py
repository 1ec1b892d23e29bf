import random
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from polybound.model import DegreeConstraint, Instance, members

DATA = Path(__file__).parent / "data"
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def load(name: str) -> Instance:
    return Instance.load(DATA / name)


@pytest.fixture
def run4():
    return load("run4.json")


@pytest.fixture
def tri3():
    return load("tri3.json")


@pytest.fixture
def gap2():
    return load("gap2.json")


# -- random instances ----------------------------------------------------------------


def _pick_x(rng, Y, kind):
    ys = members(Y)
    if kind == "cardinality" or len(ys) == 1:
        return 0
    if kind == "simple":
        return 0 if rng.random() < 0.5 else 1 << rng.choice(ys)
    X = 0
    for v in ys:
        if rng.random() < 0.4:
            X |= 1 << v
    return 0 if X == Y else X


def random_instance(rng, n, k, kind="general", halves=8) -> Instance:
    """``kind`` is simple, cardinality or general; ``c`` ranges over 0, 1/2, ..., halves/2."""
    cons = []
    for _ in range(k):
        Y = rng.randrange(1, 1 << n)
        X = _pick_x(rng, Y, kind)
        cons.append(DegreeConstraint(X, Y, Fraction(rng.randint(0, halves), 2)))
    return Instance(n, tuple(cons))


def random_suite(seed, count, n_max, k_max, kind="general", n_min=1):
    rng = random.Random(seed)
    return [
        random_instance(rng, rng.randint(n_min, n_max), rng.randint(1, k_max), kind)
        for _ in range(count)
    ]


@st.composite
def instances(draw, max_n=4, max_k=4, kind="general"):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, max_k))
    cons = []
    for _ in range(k):
        Y = draw(st.integers(1, (1 << n) - 1))
        ys = members(Y)
        if kind == "cardinality" or len(ys) == 1:
            X = 0
        elif kind == "simple":
            X = draw(st.sampled_from([0] + [1 << v for v in ys]))
            X = 0 if X == Y else X
        else:
            X = Y & draw(st.integers(0, (1 << n) - 1))
            X = 0 if X == Y else X
        c = Fraction(draw(st.integers(0, 8)), 2)
        cons.append(DegreeConstraint(X, Y, c))
    return Instance(n, tuple(cons))


@st.composite
def permutations_for(draw, n):
    return tuple(draw(st.permutations(list(range(n)))))


# -- acceptance summary ----------------------------------------------------------------

_CRITERIA: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and report.passed):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, [title, True, []])
    if report.failed:
        entry[1] = False
        entry[2].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, failed = _CRITERIA[number]
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}"
        if failed:
            line += f"  (failed: {', '.join(failed)})"
        terminalreporter.write_line(line)
