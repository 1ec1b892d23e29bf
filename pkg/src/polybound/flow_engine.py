"""Coupled unit flows on the auxiliary graph of a simple instance.

Vertices are ``∅``, the singletons and the constraint heads ``Y_i``.  A degree
edge ``X_i -> Y_i`` can carry up to ``δ_i`` per sink and costs ``c_i``; a μ edge
``Y -> X`` (for vertices ``X ⊊ Y``) is free and uncapacitated.  Every sink
``{t}`` needs one unit from ``∅``; the cheapest ``δ`` is the polymatroid bound.

An edge ``tail -> head`` carrying ``v`` adds ``v`` to the excess of ``head``
and subtracts ``v`` from the excess of ``tail``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

from .lp import GE, LE, LinearProgram, Status, solve
from .model import (
    DegreeConstraint,
    Instance,
    PreconditionError,
    is_proper_subset,
    members,
    popcount,
    require_simple,
    vkey,
)
from .rationals import INF, ExtRational, parse_rational

DEG, MU, SRC = "deg", "mu", "src"
_KIND_ORDER = {DEG: 0, MU: 1, SRC: 2}


class WitnessError(ValueError):
    """A flow or witness that breaks its defining equations."""


class Edge(NamedTuple):
    tail: int
    head: int
    kind: str
    index: Optional[int] = None  # constraint index for degree edges

    def sort_key(self):
        return (vkey(self.tail), vkey(self.head), _KIND_ORDER[self.kind], -1 if self.index is None else self.index)


def edge_label(e: Edge, fmt) -> str:
    if e.kind == DEG:
        return f"d{e.index + 1}:{fmt(e.tail)}->{fmt(e.head)}"
    return f"{e.kind}:{fmt(e.tail)}->{fmt(e.head)}"


@dataclass(frozen=True)
class AuxGraph:
    n: int
    vertices: tuple[int, ...]
    degree_edges: tuple[Edge, ...]
    mu_edges: tuple[Edge, ...]

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.degree_edges + self.mu_edges

    def reachable(self, extra: Iterable[Edge] = (), skip: frozenset = frozenset()) -> set[int]:
        succ: dict[int, list[int]] = {}
        for e in self.edges + tuple(extra):
            if e.kind == DEG and e.index in skip:
                continue
            succ.setdefault(e.tail, []).append(e.head)
        seen = {0}
        todo = [0]
        while todo:
            u = todo.pop()
            for v in succ.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
        return seen


def graph_for(n: int, constraints: Sequence[DegreeConstraint]) -> AuxGraph:
    """Auxiliary graph for constraints whose ``X`` are all empty or singletons."""
    verts = {0} | {1 << v for v in range(n)} | {dc.Y for dc in constraints}
    vertices = tuple(sorted(verts, key=vkey))
    degree = tuple(Edge(dc.X, dc.Y, DEG, i) for i, dc in enumerate(constraints))
    mu = tuple(
        Edge(Y, X, MU)
        for Y in vertices
        for X in vertices
        if is_proper_subset(X, Y)
    )
    return AuxGraph(n, vertices, degree, mu)


def build_aux_graph(inst: Instance) -> AuxGraph:
    require_simple(inst, "the auxiliary graph")
    return graph_for(inst.n, inst.constraints)


# -- solutions -------------------------------------------------------------------


@dataclass(frozen=True)
class FlowSolution:
    """``delta[i]`` per constraint and ``flows[t][edge]`` per sink (zeros omitted)."""

    delta: tuple[Fraction, ...]
    flows: tuple[dict, ...]
    objective: Fraction

    def f(self, i: int, t: int) -> Fraction:
        return sum((v for e, v in self.flows[t].items() if e.kind == DEG and e.index == i), Fraction(0))

    def mu(self, X: int, Y: int, t: int) -> Fraction:
        return self.flows[t].get(Edge(Y, X, MU), Fraction(0))

    def to_json(self, inst: Instance) -> dict:
        return {
            "delta": {str(i + 1): str(d) for i, d in enumerate(self.delta)},
            "flows": {
                inst.names[t]: {
                    edge_label(e, inst.fmt_set): str(v)
                    for e, v in sorted(flow.items(), key=lambda kv: kv[0].sort_key())
                }
                for t, flow in enumerate(self.flows)
            },
            "objective": str(self.objective),
        }

    @classmethod
    def from_json(cls, data: dict, inst: Instance, graph: AuxGraph) -> "FlowSolution":
        k = len(graph.degree_edges)
        delta = tuple(parse_rational(data["delta"][str(i + 1)]) for i in range(k))
        labels = {edge_label(e, inst.fmt_set): e for e in graph.edges}
        flows = []
        for t in range(inst.n):
            raw = data["flows"].get(inst.names[t], {})
            flows.append({labels[lab]: parse_rational(v) for lab, v in raw.items()})
        return cls(delta, tuple(flows), parse_rational(data["objective"]))


def excess(flow: dict, vertex: int) -> Fraction:
    out = Fraction(0)
    for e, v in flow.items():
        if e.head == vertex:
            out += v
        if e.tail == vertex:
            out -= v
    return out


def solution_violations(inst: Instance, graph: AuxGraph, sol: FlowSolution) -> list[str]:
    """Exact re-check of every constraint of the flow LP, independent of the solver."""
    out = []
    costs = sum((dc.c * d for dc, d in zip(inst.constraints, sol.delta)), Fraction(0))
    if costs != sol.objective:
        out.append(f"objective {sol.objective} != sum c_i delta_i = {costs}")
    for i, d in enumerate(sol.delta):
        if d < 0:
            out.append(f"delta_{i + 1} < 0")
    edges = set(graph.edges)
    for t, flow in enumerate(sol.flows):
        for e, v in flow.items():
            if e not in edges:
                out.append(f"sink {t}: {e} is not an edge of the graph")
            if v < 0:
                out.append(f"sink {t}: negative flow on {e}")
        for i in range(len(sol.delta)):
            if sol.f(i, t) > sol.delta[i]:
                out.append(f"sink {t}: f_{i + 1} exceeds delta_{i + 1}")
        for Z in graph.vertices:
            want = 1 if Z == 1 << t else -1 if Z == 0 else 0
            got = excess(flow, Z)
            if got != want:
                out.append(f"sink {inst.names[t]}: excess at {inst.fmt_set(Z)} is {got}, expected {want}")
    return out


# -- the LP ------------------------------------------------------------------------


@dataclass
class FlowProgram:
    """Variables of an assembled flow LP: ``delta[i]`` and ``edge_vars[t][edge]``."""

    lp: LinearProgram
    delta: list[int]
    edge_vars: list[dict]


def assemble(
    n: int,
    graph: AuxGraph,
    costs: Sequence[Fraction],
    demand_cover: Sequence[Sequence[int]] = (),
    sources: Sequence[Sequence[int]] = (),
    zero: Iterable[int] = (),
    forbid: Sequence[Sequence[int]] = (),
) -> FlowProgram:
    """Min ``Σ c_i δ_i`` over coupled unit flows, one per sink.

    ``demand_cover[t]`` lists constraints whose ``δ`` is subtracted from the
    demand of sink ``t``; ``sources[t]`` lists singletons fed for free from ``∅``
    for sink ``t``; ``forbid[t]`` lists degree edges that sink ``t`` may not use;
    ``zero`` pins ``δ_i = 0``.
    """
    lp = LinearProgram("min")
    delta = [lp.add_var(f"delta{i + 1}") for i in range(len(costs))]
    edge_vars = []
    zero = set(zero)
    for i in zero:
        lp.add_constraint({delta[i]: 1}, LE, 0)
    for t in range(n):
        ev = {}
        extra = [Edge(0, 1 << u, SRC) for u in (sources[t] if sources else ())]
        for e in graph.edges + tuple(extra):
            ev[e] = lp.add_var(f"t{t}:{e.kind}{e.index if e.index is not None else ''}:{e.tail}>{e.head}")
        banned = set(forbid[t]) if forbid else set()
        for e in graph.degree_edges:
            if e.index in banned:
                lp.add_constraint({ev[e]: 1}, LE, 0)
            else:
                lp.add_constraint({ev[e]: 1, delta[e.index]: -1}, LE, 0)
        inc: dict[int, dict[int, int]] = {Z: {} for Z in graph.vertices}
        for e, j in ev.items():
            inc[e.head][j] = inc[e.head].get(j, 0) + 1
            inc[e.tail][j] = inc[e.tail].get(j, 0) - 1
        for Z in graph.vertices:
            row = dict(inc[Z])
            if Z == 1 << t:
                for i in (demand_cover[t] if demand_cover else ()):
                    row[delta[i]] = row.get(delta[i], 0) + 1
                lp.add_constraint(row, GE, 1)
            elif Z == 0:
                lp.add_constraint(row, GE, -1)
            else:
                lp.add_constraint(row, GE, 0)
        edge_vars.append(ev)
    lp.set_objective({delta[i]: c for i, c in enumerate(costs) if c})
    return FlowProgram(lp, delta, edge_vars)


def solve_flow_lp(inst: Instance, zero: Iterable[int] = ()) -> tuple[ExtRational, Optional[FlowSolution]]:
    """Optimum of the coupled flow LP; ``zero`` pins chosen ``δ_i`` (0-based) to 0."""
    graph = build_aux_graph(inst)
    zero = frozenset(zero)
    reach = graph.reachable(skip=zero)
    if any(1 << t not in reach for t in range(inst.n)):
        return INF, None
    prog = assemble(inst.n, graph, [dc.c for dc in inst.constraints], zero=zero)
    out = solve(prog.lp)
    if out.status is not Status.OPTIMAL:
        return INF, None
    x = out.x
    delta = tuple(x[j] for j in prog.delta)
    flows = tuple({e: x[j] for e, j in ev.items() if x[j]} for ev in prog.edge_vars)
    sol = FlowSolution(delta, flows, out.objective)
    bad = solution_violations(inst, graph, sol)
    if bad:
        raise WitnessError("flow LP returned an invalid solution: " + "; ".join(bad[:3]))
    return out.objective, sol


# -- path decomposition ------------------------------------------------------------


@dataclass(frozen=True)
class FlowPath:
    edges: tuple[Edge, ...]
    value: Fraction

    @property
    def vertices(self) -> tuple[int, ...]:
        return (self.edges[0].tail,) + tuple(e.head for e in self.edges)


@dataclass(frozen=True)
class PathDecomposition:
    paths: tuple[tuple[FlowPath, ...], ...]
    cancelled: tuple[dict, ...] = field(default=())

    def recompose(self, t: int) -> dict:
        out: dict = {}
        for p in self.paths[t]:
            for e in p.edges:
                out[e] = out.get(e, Fraction(0)) + p.value
        return out

    def to_json(self, inst: Instance) -> dict:
        return {
            inst.names[t]: [
                {"vertices": [inst.set_names(v) for v in p.vertices], "value": str(p.value)}
                for p in paths
            ]
            for t, paths in enumerate(self.paths)
        }


def _cancel_cycles(flow: dict) -> dict:
    flow = {e: v for e, v in flow.items() if v}
    while True:
        cycle = _find_cycle(flow)
        if cycle is None:
            return flow
        eps = min(flow[e] for e in cycle)
        for e in cycle:
            flow[e] -= eps
            if not flow[e]:
                del flow[e]


def _find_cycle(flow: dict) -> Optional[list[Edge]]:
    out: dict[int, list[Edge]] = {}
    for e in sorted(flow, key=Edge.sort_key):
        out.setdefault(e.tail, []).append(e)
    state: dict[int, int] = {}  # 1 on stack, 2 finished
    for root in sorted(out, key=vkey):
        if root in state:
            continue
        stack = [(root, iter(out.get(root, ())))]
        via: list[Edge] = []
        state[root] = 1
        while stack:
            u, it = stack[-1]
            e = next(it, None)
            if e is None:
                state[u] = 2
                stack.pop()
                if via:
                    via.pop()
                continue
            v = e.head
            if state.get(v) == 1:
                # the cycle is the tail of ``via`` starting at v, plus e
                start = next(p for p, (w, _) in enumerate(stack) if w == v)
                return via[start:] + [e]
            if v not in state:
                state[v] = 1
                via.append(e)
                stack.append((v, iter(out.get(v, ()))))
    return None


def decompose_flows(sol: FlowSolution, graph: AuxGraph) -> PathDecomposition:
    """Simple ``∅ -> {t}`` paths per sink, lexicographically smallest first."""
    vertices = set(graph.vertices)
    all_paths, cancelled = [], []
    for t, flow in enumerate(sol.flows):
        for Z in vertices | {e.tail for e in flow} | {e.head for e in flow}:
            want = 1 if Z == 1 << t else -1 if Z == 0 else 0
            got = excess(flow, Z)
            if got != want:
                raise WitnessError(f"sink {t}: excess {got} at vertex {sorted(members(Z))}, expected {want}")
        if any(v < 0 for v in flow.values()):
            raise WitnessError(f"sink {t}: negative edge flow")
        rest = _cancel_cycles(flow)
        cancelled.append(dict(rest))
        paths = []
        sink = 1 << t
        while True:
            first = _out_edges(rest, 0)
            if not first:
                break
            edges, u = [], 0
            while u != sink:
                e = _out_edges(rest, u)[0]
                edges.append(e)
                u = e.head
            eps = min(rest[e] for e in edges)
            for e in edges:
                rest[e] -= eps
                if not rest[e]:
                    del rest[e]
            paths.append(FlowPath(tuple(edges), eps))
        if rest:
            raise WitnessError(f"sink {t}: flow left over after path extraction")
        all_paths.append(tuple(paths))
    return PathDecomposition(tuple(all_paths), tuple(cancelled))


def _out_edges(flow: dict, u: int) -> list[Edge]:
    return sorted((e for e in flow if e.tail == u), key=lambda e: (vkey(e.head),) + e.sort_key()[2:])


# -- min-cut certificates ----------------------------------------------------------


@dataclass(frozen=True)
class CutVerdict:
    sink: int
    max_flow: Fraction
    cut: Optional[int] = None  # the set V, when infeasible
    row_sum: Optional[Fraction] = None

    @property
    def feasible(self) -> bool:
        return self.cut is None


def simple_row_sum(inst: Instance, delta: Sequence[Fraction], V: int) -> Fraction:
    """``Σ δ_i`` over constraints with ``X_i ⊆ V`` and ``Y_i ⊄ V``."""
    return sum(
        (d for dc, d in zip(inst.constraints, delta) if dc.X & ~V == 0 and dc.Y & ~V),
        Fraction(0),
    )


def min_cut_certificate(inst: Instance, delta: Sequence) -> list[CutVerdict]:
    """Per sink: max flow from ``∅`` with capacities ``δ``, and a violated set when < 1."""
    graph = build_aux_graph(inst)
    delta = [Fraction(d) for d in delta]
    if len(delta) != inst.k or any(d < 0 for d in delta):
        raise PreconditionError("delta must have one non-negative entry per constraint")
    cap: dict[tuple[int, int], Optional[Fraction]] = {}
    for e in graph.degree_edges:
        key = (e.tail, e.head)
        if cap.get(key, 0) is not None:
            cap[key] = cap.get(key, Fraction(0)) + delta[e.index]
    for e in graph.mu_edges:
        cap[(e.tail, e.head)] = None  # unbounded
    verdicts = []
    for t in range(inst.n):
        value, side = _max_flow(graph.vertices, cap, 0, 1 << t)
        if value >= 1:
            verdicts.append(CutVerdict(t, value))
        else:
            V = 0
            for Z in side:
                if popcount(Z) == 1:
                    V |= Z
            verdicts.append(CutVerdict(t, value, V, simple_row_sum(inst, delta, V)))
    return verdicts


def _max_flow(vertices, cap, s, t) -> tuple[Fraction, set[int]]:
    """Edmonds-Karp; ``None`` capacity is infinite.  Returns value and source side."""
    adj: dict[int, set[int]] = {v: set() for v in vertices}
    for u, v in cap:
        adj[u].add(v)
        adj[v].add(u)
    flow: dict[tuple[int, int], Fraction] = {}

    def residual(u, v):
        c = cap.get((u, v), Fraction(0))
        r = flow.get((v, u), Fraction(0))  # cancelling reverse flow
        if c is None:
            return None
        return c - flow.get((u, v), Fraction(0)) + r

    total = Fraction(0)
    while True:
        prev = {s: None}
        q = deque([s])
        while q and t not in prev:
            u = q.popleft()
            for v in sorted(adj[u], key=vkey):
                if v not in prev:
                    r = residual(u, v)
                    if r is None or r > 0:
                        prev[v] = u
                        q.append(v)
        if t not in prev:
            return total, set(prev)
        path = []
        v = t
        while prev[v] is not None:
            path.append((prev[v], v))
            v = prev[v]
        finite = [r for r in (residual(u, v) for u, v in path) if r is not None]
        eps = min(finite)  # every s-t path starts with a finite degree edge
        for u, v in path:
            back = flow.get((v, u), Fraction(0))
            use = min(back, eps)
            if use:
                flow[(v, u)] = back - use
            if eps - use:
                flow[(u, v)] = flow.get((u, v), Fraction(0)) + eps - use
        total += eps
