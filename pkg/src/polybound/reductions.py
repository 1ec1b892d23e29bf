"""Bound-preserving rewrites of an instance into restricted shapes.

All three return a :class:`ReductionTrace`.  ``variable_map[v]`` is the mask of
original variables that reduced variable ``v`` stands for; a merged variable
stands for the union of its parts.  Merges always pick the lowest pair, and
fresh variables are named ``m1``, ``m2``, ... (skipping names already taken).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .model import (
    DegreeConstraint,
    Instance,
    MAX_VARS,
    PreconditionError,
    classify,
    members,
    popcount,
)

ACYCLIC_PLUS_SIMPLE = "acyclic-plus-simple"
TWO_THREE = "two-three"
SIMPLE_PLUS_FD = "simple-plus-fd"
MODES = (ACYCLIC_PLUS_SIMPLE, TWO_THREE, SIMPLE_PLUS_FD)


@dataclass(frozen=True)
class Merge:
    constraint: int  # index in the reduced constraint list
    pair: tuple[int, int]
    into: int


@dataclass
class ReductionTrace:
    mode: str
    original: Instance
    reduced: Instance
    variable_map: tuple[int, ...]
    added_consistency: list[DegreeConstraint] = field(default_factory=list)
    merges: list[Merge] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.merges)

    def to_json(self) -> dict:
        red, orig = self.reduced, self.original

        def dc_json(dc):
            return {"X": red.set_names(dc.X), "Y": red.set_names(dc.Y), "c": str(dc.c)}

        return {
            "mode": self.mode,
            "original": orig.to_json(),
            "reduced": red.to_json(),
            "variable_map": {red.names[v]: orig.set_names(m) for v, m in enumerate(self.variable_map)},
            "added_consistency": [dc_json(dc) for dc in self.added_consistency],
            "merges": [
                {
                    "constraint": m.constraint + 1,
                    "pair": [red.names[m.pair[0]], red.names[m.pair[1]]],
                    "into": red.names[m.into],
                }
                for m in self.merges
            ],
            "iterations": self.iterations,
        }


def _lowest_pair(mask: int) -> tuple[int, int]:
    ms = members(mask)
    return ms[0], ms[1]


class _Merger:
    """Grows the universe one merged variable at a time."""

    def __init__(self, inst: Instance):
        self.names = list(inst.names)
        self.vmap = [1 << v for v in range(inst.n)]
        self.cons = list(inst.constraints)
        self.added: list[DegreeConstraint] = []
        self.merges: list[Merge] = []
        self.counter = 0

    def fresh(self, x: int, y: int) -> int:
        if len(self.names) >= MAX_VARS:
            raise PreconditionError(f"reduced universe would exceed {MAX_VARS} variables")
        taken = set(self.names)
        while True:
            self.counter += 1
            name = f"m{self.counter}"
            if name not in taken:
                break
        self.names.append(name)
        self.vmap.append(self.vmap[x] | self.vmap[y])
        return len(self.names) - 1

    def merge(self, i: int, x: int, y: int) -> int:
        """Replace ``{x, y}`` by a fresh ``z`` in constraint ``i`` only."""
        z = self.fresh(x, y)
        pair = 1 << x | 1 << y
        dc = self.cons[i]
        X = dc.X & ~pair | 1 << z if dc.X & pair == pair else dc.X
        Y = dc.Y & ~pair | 1 << z
        self.cons[i] = DegreeConstraint(X, Y, dc.c)
        self.merges.append(Merge(i, (x, y), z))
        return z

    def add(self, X: int, Y: int) -> None:
        dc = DegreeConstraint(X, Y, Fraction(0))
        self.added.append(dc)
        self.cons.append(dc)

    def trace(self, mode: str, inst: Instance) -> ReductionTrace:
        red = Instance(len(self.names), tuple(self.cons), tuple(self.names))
        return ReductionTrace(mode, inst, red, tuple(self.vmap), self.added, self.merges)


def reduce_acyclic_plus_simple(inst: Instance) -> ReductionTrace:
    """Two copies per variable tied by FDs; each constraint reads x-copies and writes y-copies.

    ``(A, B, c)`` becomes ``(x(A), x(A) ∪ y(B), c)``.  Every dependency edge then
    runs from an x-copy to a y-copy, so the rewritten constraints are acyclic,
    and the FDs ``x_i -> y_i`` and ``y_i -> x_i`` are simple.
    """
    n = inst.n
    if 2 * n > MAX_VARS:
        raise PreconditionError(f"reduced universe would exceed {MAX_VARS} variables")

    def x(mask):
        return mask

    def y(mask):
        return mask << n

    names = tuple(f"x_{a}" for a in inst.names) + tuple(f"y_{a}" for a in inst.names)
    rewritten = [DegreeConstraint(x(dc.X), x(dc.X) | y(dc.Y), dc.c) for dc in inst.constraints]
    added = []
    for v in range(n):
        both = x(1 << v) | y(1 << v)
        added.append(DegreeConstraint(x(1 << v), both, Fraction(0)))
        added.append(DegreeConstraint(y(1 << v), both, Fraction(0)))
    red = Instance(2 * n, tuple(rewritten + added), names)
    vmap = tuple(1 << v for v in range(n)) * 2
    return ReductionTrace(ACYCLIC_PLUS_SIMPLE, inst, red, vmap, added)


def two_three_ok(dc: DegreeConstraint) -> bool:
    nx, ny = popcount(dc.X), popcount(dc.Y)
    if nx > 2 or ny > 3:
        return False
    if ny == 3:
        return nx == 2 and dc.c == 0
    if ny == 2:
        return nx == 1
    return True


def reduce_two_three(inst: Instance) -> ReductionTrace:
    """Merge variable pairs until every constraint has ``|X| <= 2`` and ``|Y| <= 3``.

    Each step takes the first offending constraint and merges its lowest pair
    inside ``X`` when ``|X| > 2`` (or ``|X| = 2``, ``|Y| = 3``), otherwise inside
    ``Y − X``.  Either way ``|X| + |Y|`` drops, so the loop ends.
    """
    m = _Merger(inst)
    while True:
        bad = [i for i, dc in enumerate(m.cons) if not two_three_ok(dc)]
        if not bad:
            break
        i = bad[0]
        dc = m.cons[i]
        nx, ny = popcount(dc.X), popcount(dc.Y)
        if nx > 2 or (ny == 3 and nx == 2):
            x, y = _lowest_pair(dc.X)
        else:
            x, y = _lowest_pair(dc.Y & ~dc.X)
        z = m.merge(i, x, y)
        pair = 1 << x | 1 << y
        m.add(pair, pair | 1 << z)
        m.add(1 << z, 1 << z | 1 << x)
        m.add(1 << z, 1 << z | 1 << y)
    return m.trace(TWO_THREE, inst)


def reduce_simple_plus_fd(inst: Instance) -> ReductionTrace:
    """Merge the lowest pair of ``X`` in any non-simple constraint with ``c > 0``."""
    m = _Merger(inst)
    while True:
        bad = [i for i, dc in enumerate(m.cons) if popcount(dc.X) >= 2 and dc.c > 0]
        if not bad:
            break
        i = bad[0]
        x, y = _lowest_pair(m.cons[i].X)
        z = m.merge(i, x, y)
        pair = 1 << x | 1 << y
        m.add(pair, pair | 1 << z)
        m.add(1 << z, pair | 1 << z)
    return m.trace(SIMPLE_PLUS_FD, inst)


REDUCERS = {
    ACYCLIC_PLUS_SIMPLE: reduce_acyclic_plus_simple,
    TWO_THREE: reduce_two_three,
    SIMPLE_PLUS_FD: reduce_simple_plus_fd,
}


def postcondition_violations(trace: ReductionTrace) -> list[str]:
    """Shape checks on the reduced instance; empty when the target shape is met."""
    red = trace.reduced
    out = []
    if len(trace.variable_map) != red.n:
        out.append("variable_map is not total on the reduced universe")
    for v, mask in enumerate(trace.variable_map):
        if mask == 0 or mask & ~trace.original.universe:
            out.append(f"variable {red.names[v]} maps outside the original universe")
    if trace.mode == ACYCLIC_PLUS_SIMPLE:
        if red.n != 2 * trace.original.n:
            out.append("universe size is not 2n")
        added = set(trace.added_consistency)
        rest = [dc for dc in red.constraints if dc not in added]
        if rest and not classify(red.replace(rest)).is_acyclic:
            out.append("rewritten constraints are not acyclic")
        for dc in trace.added_consistency:
            if not (dc.c == 0 and popcount(dc.X) == 1 and popcount(dc.Y) == 2):
                out.append(f"{red.fmt_set(dc.X)}->{red.fmt_set(dc.Y)} is not a 2-variable FD")
    elif trace.mode == TWO_THREE:
        for i, dc in enumerate(red.constraints, 1):
            if not two_three_ok(dc):
                out.append(f"constraint {i} has |X|={popcount(dc.X)}, |Y|={popcount(dc.Y)}, c={dc.c}")
    elif trace.mode == SIMPLE_PLUS_FD:
        for i, dc in enumerate(red.constraints, 1):
            if not (dc.is_simple or dc.is_fd):
                out.append(f"constraint {i} is neither simple nor an FD")
    else:
        out.append(f"unknown mode {trace.mode!r}")
    return out
