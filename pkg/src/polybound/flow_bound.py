"""Flow bound for general instances.

Simple constraints keep their edges in the auxiliary graph.  A non-simple
constraint ``(X, Y, c)`` is trimmed to ``Y' = X ∪ {v ∈ Y after all of X}`` and
enters the LP only through its ``δ``, which lowers the demand of every sink in
``Y' − X``.

With ``multi_source`` (the default) sink ``t`` may also draw from every
singleton that precedes it in the order.  Without it the value can exceed
the chain bound: a variable that only becomes reachable through a trimmed
constraint leaves its own sink cut off from ``∅``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .flow_engine import SRC, Edge, assemble, graph_for
from .lp import Status, solve
from .model import Instance, classify, topological_permutation
from .oracle import positions, relax_constraint
from .rationals import INF, ExtRational


@dataclass(frozen=True)
class RelaxedInstance:
    base: Instance
    pi: tuple[int, ...]
    k_s: int  # constraints [0, k_s) are the simple ones, verbatim
    instance: Instance
    origin: tuple[int, ...]  # base index of each relaxed constraint


def relax_for_flow(inst: Instance, pi: Sequence[int]) -> RelaxedInstance:
    pos = positions(inst.n, pi)
    simple, trimmed, origin_s, origin_t = [], [], [], []
    for i, dc in enumerate(inst.constraints):
        if dc.is_simple:
            simple.append(dc)
            origin_s.append(i)
        else:
            r = relax_constraint(dc, pos)
            if r is not None:
                trimmed.append(r)
                origin_t.append(i)
    relaxed = inst.replace(simple + trimmed)
    return RelaxedInstance(inst, tuple(pi), len(simple), relaxed, tuple(origin_s + origin_t))


def flow_bound(
    inst: Instance,
    pi: Sequence[int],
    multi_source: bool = True,
    forbid_own_head: bool = False,
) -> ExtRational:
    """Optimum of the flow LP on the order-``pi`` relaxation.

    ``forbid_own_head`` adds ``f_{i,t} = 0`` for simple ``i`` with
    ``t ∈ Y_i − X_i``; off by default because it breaks the equality with the
    simple-instance flow LP.
    """
    rel = relax_for_flow(inst, pi)
    n, ks = inst.n, rel.k_s
    cons = rel.instance.constraints
    graph = graph_for(n, cons[:ks])
    pos = positions(n, pi)
    cover = [[i for i in range(ks, len(cons)) if (cons[i].Y & ~cons[i].X) >> t & 1] for t in range(n)]
    sources = [[u for u in range(n) if pos[u] < pos[t]] for t in range(n)] if multi_source else []
    forbid = (
        [[i for i in range(ks) if (cons[i].Y & ~cons[i].X) >> t & 1] for t in range(n)]
        if forbid_own_head
        else []
    )
    for t in range(n):
        extra = [Edge(0, 1 << u, SRC) for u in (sources[t] if sources else ())]
        skip = frozenset(forbid[t]) if forbid else frozenset()
        if not cover[t] and 1 << t not in graph.reachable(extra, skip):
            return INF
    prog = assemble(n, graph, [dc.c for dc in cons], cover, sources, forbid=forbid)
    out = solve(prog.lp)
    if out.status is not Status.OPTIMAL:
        return INF
    return out.objective


def suggest_permutation(inst: Instance) -> tuple[tuple[int, ...], str]:
    topo = topological_permutation(inst)
    if topo is not None:
        return topo, "acyclic-topological"
    identity = tuple(range(inst.n))
    if classify(inst).is_simple:
        return identity, "simple-any"
    return identity, "heuristic-identity"
