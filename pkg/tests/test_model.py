import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import instances, load
from polybound.model import (
    CapError,
    DegreeConstraint,
    Instance,
    InstanceError,
    PreconditionError,
    check_oracle_cap,
    classify,
    closure,
    make_instance,
    mask_of,
    members,
    parse_permutation,
    require_simple,
    topological_permutation,
)
from polybound.rationals import INF, fmt_ext, parse_ext, parse_rational


# -- rationals -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "raw, want",
    [(3, Fraction(3)), ("3/2", Fraction(3, 2)), (" -4 / 6 ", Fraction(-2, 3)), ("0.25", Fraction(1, 4))],
)
def test_parse_rational(raw, want):
    assert parse_rational(raw) == want


@pytest.mark.parametrize("raw", [0.5, True, "1/0", "abc", None, "nan", "inf"])
def test_parse_rational_rejects(raw):
    with pytest.raises(ValueError):
        parse_rational(raw)


def test_ext_round_trip():
    assert parse_ext("inf") == INF
    assert fmt_ext(INF) == "inf"
    assert fmt_ext(-INF) == "-inf"
    assert fmt_ext(Fraction(6, 4)) == "3/2"
    assert fmt_ext(Fraction(4)) == "4"


@given(st.fractions())
def test_fmt_parse_round_trip(q):
    assert parse_ext(fmt_ext(q)) == q


# -- instances -----------------------------------------------------------------------


def test_run4_file(run4):
    assert run4.n == 4 and run4.k == 4
    assert run4.names == ("a", "b", "c", "d")
    assert run4.constraints[3] == DegreeConstraint(mask_of([0]), mask_of([0, 3]), Fraction(1))


def test_names_default_to_indices(gap2):
    assert gap2.names == ("1", "2")
    assert gap2.index_of(2) == 1 and gap2.index_of("2") == 1


@pytest.mark.parametrize(
    "bad",
    [
        {"n": 2, "constraints": []},
        {"n": 0, "constraints": [{"Y": [1], "c": "1"}]},
        {"n": 2, "constraints": [{"X": [1], "Y": [1], "c": "1"}]},
        {"n": 2, "constraints": [{"X": [1], "Y": [2], "c": "1"}]},
        {"n": 2, "constraints": [{"Y": [3], "c": "1"}]},
        {"n": 2, "constraints": [{"Y": [1], "c": "-1"}]},
        {"n": 2, "constraints": [{"Y": [1], "c": 0.5}]},
        {"n": 2, "constraints": [{"Y": [1]}]},
        {"n": 2, "vars": ["a", "a"], "constraints": [{"Y": ["a"], "c": "1"}]},
        {"n": "2", "constraints": [{"Y": [1], "c": "1"}]},
        [1, 2],
    ],
)
def test_malformed_instances(bad):
    with pytest.raises(InstanceError):
        Instance.from_json(bad)


def test_load_invalid_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(InstanceError):
        Instance.load(p)


@given(instances(max_n=6, max_k=5))
def test_json_round_trip(inst):
    again = Instance.from_json(json.loads(inst.dumps()))
    assert again == inst


def test_classify_run4(run4, tri3):
    cl = classify(run4)
    assert cl.is_simple and not cl.is_cardinality_only and cl.is_acyclic
    assert classify(tri3).is_cardinality_only
    assert cl.tags[0] == ("cardinality", "simple")


def test_classify_cyclic_and_topo():
    cyc = make_instance(2, [([1], [1, 2], 1), ([2], [1, 2], 1), ([], [1], 1)])
    assert not classify(cyc).is_acyclic
    assert topological_permutation(cyc) is None
    acyc = make_instance(3, [([1, 2], [1, 2, 3], 1), ([], [1, 2], 1)])
    pi = topological_permutation(acyc)
    assert pi.index(2) > pi.index(0) and pi.index(2) > pi.index(1)
    assert not classify(acyc).is_simple


def test_closure(run4, gap2):
    assert closure(run4) == run4.universe
    only_d = make_instance(2, [([1], [1, 2], 1)])
    assert closure(only_d) == 0
    assert closure(only_d, start=1) == 3


def test_require_simple():
    with pytest.raises(PreconditionError):
        require_simple(make_instance(3, [([1, 2], [1, 2, 3], 1)]), "x")


def test_permutations(run4):
    assert parse_permutation(run4, "d,c,b,a") == (3, 2, 1, 0)
    assert parse_permutation(run4, "1,2,3,4") == (0, 1, 2, 3)
    with pytest.raises(InstanceError):
        parse_permutation(run4, "a,b,c")
    with pytest.raises(InstanceError):
        parse_permutation(run4, "a,a,b,c")


def test_oracle_cap(monkeypatch):
    check_oracle_cap(14)
    with pytest.raises(CapError):
        check_oracle_cap(15)
    monkeypatch.setenv("POLYBOUND_ORACLE_CAP", "3")
    with pytest.raises(CapError):
        check_oracle_cap(4)
    monkeypatch.setenv("POLYBOUND_ORACLE_CAP", "lots")
    with pytest.raises(CapError):
        check_oracle_cap(1)


@given(st.integers(0, 2**20))
def test_members_mask_inverse(m):
    assert mask_of(members(m)) == m
