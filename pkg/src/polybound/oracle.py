"""Brute-force bounds over the full subset lattice (small n only).

The polymatroid LP has one variable ``h(S)`` per subset and is built from the
elemental inequalities: ``h(S+i) + h(S+j) >= h(S+i+j) + h(S)`` and
``h([n]) >= h([n]-i)``.  Every other Shannon inequality is a sum of these.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

from .lp import GE, LE, LinearProgram, Status, solve
from .model import (
    DegreeConstraint,
    Instance,
    check_oracle_cap,
    check_permutation,
    closure,
    full_mask,
    members,
)
from .rationals import INF, ExtRational


@dataclass(frozen=True)
class SetFunctionTable:
    """``values[S]`` is ``h(S)`` for the subset with bit mask ``S``."""

    n: int
    values: tuple[Fraction, ...]

    def __getitem__(self, mask: int) -> Fraction:
        return self.values[mask]

    def violations(self) -> list[str]:
        """Full (not just elemental) polymatroid check; quadratic in 2^n."""
        out = []
        h = self.values
        size = 1 << self.n
        if h[0] != 0:
            out.append(f"h(empty) = {h[0]}")
        for a in range(size):
            if h[a] < 0:
                out.append(f"h({a:#x}) < 0")
            for b in range(a, size):
                if b & a == a and h[b] < h[a]:
                    out.append(f"not monotone at {a:#x} <= {b:#x}")
                if h[a] + h[b] < h[a | b] + h[a & b]:
                    out.append(f"not submodular at {a:#x}, {b:#x}")
        return out

    def satisfies(self, inst: Instance) -> bool:
        return all(self.values[dc.Y] - self.values[dc.X] <= dc.c for dc in inst.constraints)

    def to_json(self, inst: Optional[Instance] = None) -> list:
        fmt = inst.set_names if inst is not None else members
        return [{"set": fmt(s), "h": str(v)} for s, v in enumerate(self.values)]


def elemental_pairs(n: int):
    """Yield ``(S, i, j)`` for every elemental submodularity inequality."""
    for i, j in combinations(range(n), 2):
        rest = [v for v in range(n) if v != i and v != j]
        for r in range(1 << len(rest)):
            S = 0
            for pos, v in enumerate(rest):
                if r >> pos & 1:
                    S |= 1 << v
            yield S, i, j


@lru_cache(maxsize=None)
def _shannon_rows(n: int) -> tuple:
    top = full_mask(n)
    zero = Fraction(0)
    rows = []
    for S, i, j in elemental_pairs(n):
        a, b = S | 1 << i, S | 1 << j
        rows.append(({a: 1, b: 1, a | b: -1, S: -1}, GE, zero))
    for i in range(n):
        rows.append(({top: 1, top & ~(1 << i): -1}, GE, zero))
    return tuple(rows)


def polymatroid_lp(inst: Instance) -> LinearProgram:
    top = full_mask(inst.n)
    lp = LinearProgram("max")
    for S in range(top + 1):
        lp.add_var(f"h{S}")
    lp.add_rows(_shannon_rows(inst.n))
    for dc in inst.constraints:
        lp.add_constraint({dc.Y: 1, dc.X: -1}, LE, dc.c)
    lp.set_objective({top: 1, 0: -1})
    return lp


def polymatroid_bound_oracle(inst: Instance) -> tuple[ExtRational, Optional[SetFunctionTable]]:
    check_oracle_cap(inst.n)
    if closure(inst) != inst.universe:
        # h = M * (step function of the closure) satisfies every constraint for all M
        return INF, None
    out = solve(polymatroid_lp(inst))
    if out.status is not Status.OPTIMAL:
        return INF, None
    base = out.x[0]
    table = SetFunctionTable(inst.n, tuple(v - base for v in out.x))
    return out.objective, table


def normal_bound_oracle(inst: Instance) -> tuple[ExtRational, dict[int, Fraction]]:
    """Best non-negative combination of step functions; ``weights[V]`` is ``lambda_V``."""
    check_oracle_cap(inst.n)
    top = full_mask(inst.n)
    lp = LinearProgram("max")
    for V in range(top):
        lp.add_var(f"l{V}")
    for dc in inst.constraints:
        row = {V: 1 for V in range(top) if dc.X & ~V == 0 and dc.Y & ~V != 0}
        lp.add_constraint(row, LE, dc.c)
    lp.set_objective({V: 1 for V in range(top)})
    out = solve(lp)
    if out.status is not Status.OPTIMAL:
        return INF, {}
    return out.objective, {V: v for V, v in enumerate(out.x) if v}


def modular_bound(inst: Instance) -> tuple[ExtRational, Optional[tuple[Fraction, ...]]]:
    lp = LinearProgram("max")
    for v in range(inst.n):
        lp.add_var(f"w{v}")
    for dc in inst.constraints:
        lp.add_constraint({v: 1 for v in members(dc.Y & ~dc.X)}, LE, dc.c)
    lp.set_objective({v: 1 for v in range(inst.n)})
    out = solve(lp)
    if out.status is not Status.OPTIMAL:
        return INF, None
    return out.objective, out.x


def relax_constraint(dc: DegreeConstraint, pos: Sequence[int]) -> Optional[DegreeConstraint]:
    """Keep only the ``Y`` variables that come after all of ``X`` in the order."""
    if dc.X == 0:
        return dc
    last = max(pos[v] for v in members(dc.X))
    Y = dc.X
    for v in members(dc.Y & ~dc.X):
        if pos[v] > last:
            Y |= 1 << v
    if Y == dc.X:
        return None
    return DegreeConstraint(dc.X, Y, dc.c)


def positions(n: int, pi: Sequence[int]) -> list[int]:
    pi = check_permutation(n, pi)
    pos = [0] * n
    for p, v in enumerate(pi):
        pos[v] = p
    return pos


def chain_relax(inst: Instance, pi: Sequence[int]) -> Instance:
    """The chain relaxation; may drop constraints, possibly all of them."""
    pos = positions(inst.n, pi)
    kept = (relax_constraint(dc, pos) for dc in inst.constraints)
    return inst.replace(dc for dc in kept if dc is not None)


def chain_bound_oracle(inst: Instance, pi: Sequence[int]) -> ExtRational:
    check_oracle_cap(inst.n)
    return polymatroid_bound_oracle(chain_relax(inst, pi))[0]
