from fractions import Fraction

import pytest
from hypothesis import given

from conftest import instances
from polybound.flow_engine import (
    DEG,
    MU,
    Edge,
    FlowSolution,
    PathDecomposition,
    build_aux_graph,
    decompose_flows,
    excess,
    min_cut_certificate,
    simple_row_sum,
    solution_violations,
    solve_flow_lp,
)
from polybound.model import PreconditionError, make_instance, mask_of, members
from polybound.oracle import polymatroid_bound_oracle
from polybound.rationals import INF


def S(*vs):
    """Mask of RUN4 variables given as letters."""
    return mask_of("abcd".index(v) for v in vs)


def _paper_flows(run4):
    """The unit flows of the worked example, written out edge by edge."""
    ab_from_empty = Edge(0, S("a", "b"), DEG, 0)
    ac_from_empty = Edge(0, S("a", "c"), DEG, 2)
    ad_from_a = Edge(S("a"), S("a", "d"), DEG, 3)
    flows = (
        {ab_from_empty: 1, Edge(S("a", "b"), S("a"), MU): 1},
        {ab_from_empty: 1, Edge(S("a", "b"), S("b"), MU): 1},
        {ac_from_empty: 1, Edge(S("a", "c"), S("c"), MU): 1},
        {ab_from_empty: 1, Edge(S("a", "b"), S("a"), MU): 1, ad_from_a: 1, Edge(S("a", "d"), S("d"), MU): 1},
    )
    flows = tuple({e: Fraction(v) for e, v in f.items()} for f in flows)
    return FlowSolution((Fraction(1), Fraction(0), Fraction(1), Fraction(1)), flows, Fraction(3))


def test_run4_graph(run4):
    g = build_aux_graph(run4)
    assert len(g.vertices) == 9
    assert len(g.degree_edges) == 4
    # each 2-set head has two singleton children plus ∅; each singleton has ∅
    assert len(g.mu_edges) == 4 * 3 + 4


def test_run4_value(run4):
    value, sol = solve_flow_lp(run4)
    assert value == 3
    assert not solution_violations(run4, build_aux_graph(run4), sol)


def test_run4_support_without_constraint_2(run4):
    value, sol = solve_flow_lp(run4, zero=[1])
    assert value == 3
    assert sol.delta[1] == 0
    assert [i for i, d in enumerate(sol.delta) if d] == [0, 2, 3]


def test_paper_flows_are_feasible(run4):
    g = build_aux_graph(run4)
    sol = _paper_flows(run4)
    assert not solution_violations(run4, g, sol)
    paths = decompose_flows(sol, g)
    assert [p.vertices for p in paths.paths[3]] == [(0, S("a", "b"), S("a"), S("a", "d"), S("d"))]


def test_broken_flow_is_reported(run4):
    g = build_aux_graph(run4)
    sol = _paper_flows(run4)
    flows = list(sol.flows)
    flows[3] = dict(flows[3])
    del flows[3][Edge(S("a"), S("a", "d"), DEG, 3)]
    bad = FlowSolution(sol.delta, tuple(flows), sol.objective)
    assert any("excess" in v for v in solution_violations(run4, g, bad))
    over = FlowSolution((Fraction(1, 2),) + sol.delta[1:], sol.flows, Fraction(5, 2))
    assert any("exceeds" in v for v in solution_violations(run4, g, over))


def test_non_simple_refused():
    with pytest.raises(PreconditionError):
        solve_flow_lp(make_instance(3, [([1, 2], [1, 2, 3], 1)]))


def test_unreachable_sink():
    inst = make_instance(3, [([], [1, 2], 1), ([3], [1, 3], 1)])
    assert solve_flow_lp(inst) == (INF, None)


def test_solution_json_round_trip(run4):
    g = build_aux_graph(run4)
    _, sol = solve_flow_lp(run4)
    again = FlowSolution.from_json(sol.to_json(run4), run4, g)
    assert again == sol


def test_min_cut_at_optimum_and_below(run4):
    _, sol = solve_flow_lp(run4)
    assert all(v.feasible for v in min_cut_certificate(run4, sol.delta))
    scaled = [d * Fraction(9, 10) for d in sol.delta]
    bad = [v for v in min_cut_certificate(run4, scaled) if not v.feasible]
    assert bad
    for v in bad:
        assert v.row_sum < 1
        assert v.sink not in members(v.cut)


def test_min_cut_zero_delta(run4):
    verdicts = min_cut_certificate(run4, [0, 0, 0, 0])
    assert all(v.cut == 0 and v.row_sum == 0 for v in verdicts)


@given(instances(max_n=4, max_k=5, kind="simple"))
def test_flow_lp_equals_oracle(inst):
    value, sol = solve_flow_lp(inst)
    assert value == polymatroid_bound_oracle(inst)[0]
    if sol is not None:
        assert not solution_violations(inst, build_aux_graph(inst), sol)


@given(instances(max_n=5, max_k=5, kind="simple"))
def test_decomposition(inst):
    value, sol = solve_flow_lp(inst)
    if sol is None:
        return
    g = build_aux_graph(inst)
    paths = decompose_flows(sol, g)
    assert isinstance(paths, PathDecomposition)
    for t in range(inst.n):
        assert sum(p.value for p in paths.paths[t]) == 1
        for p in paths.paths[t]:
            vs = p.vertices
            assert vs[0] == 0 and vs[-1] == 1 << t
            assert len(set(vs)) == len(vs)
            assert p.value > 0
        recomposed = paths.recompose(t)
        assert recomposed == paths.cancelled[t]
        for Z in g.vertices:
            assert excess(recomposed, Z) == (1 if Z == 1 << t else -1 if Z == 0 else 0)


@given(instances(max_n=4, max_k=5, kind="simple"))
def test_cut_certificates_below_optimum(inst):
    value, sol = solve_flow_lp(inst)
    if sol is None or value == 0:
        return
    scaled = [d / 2 for d in sol.delta]
    verdicts = min_cut_certificate(inst, scaled)
    bad = [v for v in verdicts if not v.feasible]
    assert bad
    for v in bad:
        # recompute the row sum from scratch
        crossing = sum(
            (d for dc, d in zip(inst.constraints, scaled) if dc.X & ~v.cut == 0 and dc.Y & ~v.cut),
            Fraction(0),
        )
        assert crossing == v.row_sum == simple_row_sum(inst, scaled, v.cut) < 1
        assert not v.cut >> v.sink & 1
