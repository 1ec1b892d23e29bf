"""Variables, degree constraints and instances.

A set of variables is an ``int`` bit mask over a universe of ``n`` variables:
variable ``v`` (0-based internally, 1-based in files) is bit ``1 << v``.
"""
from __future__ import annotations

import heapq
import json
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .rationals import parse_rational

MAX_VARS = 62
DEFAULT_ORACLE_CAP = 14

_NAME_OK = re.compile(r"^[A-Za-z0-9_.'\-]+$")


class InstanceError(ValueError):
    """Malformed instance data."""


class PreconditionError(ValueError):
    """Well-formed input that the requested computation does not accept."""


class CapError(PreconditionError):
    """Universe too large for an exponential-size computation."""


def oracle_cap() -> int:
    raw = os.environ.get("POLYBOUND_ORACLE_CAP")
    if raw is None:
        return DEFAULT_ORACLE_CAP
    try:
        return int(raw)
    except ValueError:
        raise CapError(f"POLYBOUND_ORACLE_CAP={raw!r} is not an integer") from None


def check_oracle_cap(n: int) -> None:
    cap = oracle_cap()
    if n > cap:
        raise CapError(f"n={n} exceeds the oracle cap of {cap} variables")


def mask_of(items: Iterable[int]) -> int:
    m = 0
    for v in items:
        m |= 1 << v
    return m


def members(mask: int) -> list[int]:
    out = []
    v = 0
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def full_mask(n: int) -> int:
    return (1 << n) - 1


def is_subset(a: int, b: int) -> bool:
    return a & ~b == 0


def is_proper_subset(a: int, b: int) -> bool:
    return a != b and a & ~b == 0


def incomparable(a: int, b: int) -> bool:
    return a & ~b != 0 and b & ~a != 0


@dataclass(frozen=True)
class DegreeConstraint:
    """``h(Y) - h(X) <= c`` with ``X`` a proper subset of ``Y``."""

    X: int
    Y: int
    c: Fraction

    def __post_init__(self):
        if self.X & ~self.Y:
            raise InstanceError("X must be a subset of Y")
        if self.X == self.Y:
            raise InstanceError("X = Y makes the constraint vacuous")
        if self.c < 0:
            raise InstanceError(f"negative bound c={self.c}")

    @property
    def is_simple(self) -> bool:
        return popcount(self.X) <= 1

    @property
    def is_cardinality(self) -> bool:
        return self.X == 0

    @property
    def is_fd(self) -> bool:
        return self.c == 0

    def tags(self) -> tuple[str, ...]:
        out = []
        if self.is_cardinality:
            out.append("cardinality")
        if self.is_simple:
            out.append("simple")
        if self.is_fd:
            out.append("fd")
        return tuple(out) or ("general",)


@dataclass(frozen=True)
class Instance:
    n: int
    constraints: tuple[DegreeConstraint, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if not 1 <= self.n <= MAX_VARS:
            raise InstanceError(f"n={self.n} outside 1..{MAX_VARS}")
        if not self.names:
            object.__setattr__(self, "names", tuple(str(v + 1) for v in range(self.n)))
        else:
            object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != self.n:
            raise InstanceError(f"{len(self.names)} names given for n={self.n}")
        if len(set(self.names)) != self.n:
            raise InstanceError("variable names must be distinct")
        for name in self.names:
            if not _NAME_OK.match(name):
                raise InstanceError(f"bad variable name {name!r}")
        object.__setattr__(self, "constraints", tuple(self.constraints))
        top = full_mask(self.n)
        for dc in self.constraints:
            if dc.Y & ~top:
                raise InstanceError("constraint mentions a variable outside the universe")

    @property
    def k(self) -> int:
        return len(self.constraints)

    @property
    def universe(self) -> int:
        return full_mask(self.n)

    def replace(self, constraints: Iterable[DegreeConstraint]) -> "Instance":
        return Instance(self.n, tuple(constraints), self.names)

    def index_of(self, token) -> int:
        """0-based index of a variable given by name or 1-based integer."""
        if isinstance(token, bool):
            raise InstanceError(f"bad variable reference {token!r}")
        if isinstance(token, int):
            if not 1 <= token <= self.n:
                raise InstanceError(f"variable index {token} outside 1..{self.n}")
            return token - 1
        if isinstance(token, str):
            token = token.strip()
            if token in self.names:
                return self.names.index(token)
            if token.isdigit() and 1 <= int(token) <= self.n:
                return int(token) - 1
        raise InstanceError(f"unknown variable {token!r}")

    def set_of(self, tokens: Iterable) -> int:
        return mask_of(self.index_of(t) for t in tokens)

    def set_names(self, mask: int) -> list[str]:
        return [self.names[v] for v in members(mask)]

    def fmt_set(self, mask: int) -> str:
        return "{" + ",".join(self.set_names(mask)) + "}"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "vars": list(self.names),
            "constraints": [
                {"X": self.set_names(dc.X), "Y": self.set_names(dc.Y), "c": str(dc.c)}
                for dc in self.constraints
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        if not isinstance(data, dict):
            raise InstanceError("instance must be a JSON object")
        try:
            n = data["n"]
            raw = data["constraints"]
        except KeyError as e:
            raise InstanceError(f"missing field {e.args[0]!r}") from None
        if not isinstance(n, int) or isinstance(n, bool):
            raise InstanceError("n must be an integer")
        names = data.get("vars") or ()
        shell = cls(n, (), tuple(names))
        if not isinstance(raw, list) or not raw:
            raise InstanceError("an instance needs at least one constraint")
        out = []
        for pos, item in enumerate(raw, 1):
            try:
                X = shell.set_of(item.get("X", []))
                Y = shell.set_of(item["Y"])
                c = parse_rational(item["c"])
            except (KeyError, TypeError, AttributeError) as e:
                raise InstanceError(f"constraint {pos}: malformed ({e})") from None
            except ValueError as e:
                raise InstanceError(f"constraint {pos}: {e}") from None
            try:
                out.append(DegreeConstraint(X, Y, c))
            except InstanceError as e:
                raise InstanceError(f"constraint {pos}: {e}") from None
        return shell.replace(out)

    @classmethod
    def load(cls, path) -> "Instance":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as e:
                raise InstanceError(f"{path}: invalid JSON ({e})") from None
        return cls.from_json(data)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def make_instance(n: int, triples: Sequence, names: Sequence[str] = ()) -> Instance:
    """Build an instance from ``(X, Y, c)`` triples of name/1-based-index lists."""
    shell = Instance(n, (), tuple(names))
    return shell.replace(
        DegreeConstraint(shell.set_of(X), shell.set_of(Y), parse_rational(c)) for X, Y, c in triples
    )


# -- classification ---------------------------------------------------------


def dependency_edges(inst: Instance) -> set[tuple[int, int]]:
    edges = set()
    for dc in inst.constraints:
        for u in members(dc.X):
            for v in members(dc.Y & ~dc.X):
                edges.add((u, v))
    return edges


def closure(inst: Instance, start: int = 0) -> int:
    """Smallest superset of ``start`` closed under ``X ⊆ S  =>  Y ⊆ S``."""
    S = start
    changed = True
    while changed:
        changed = False
        for dc in inst.constraints:
            if dc.X & ~S == 0 and dc.Y & ~S:
                S |= dc.Y
                changed = True
    return S


def _topo_order(n: int, edges: set[tuple[int, int]]) -> Optional[tuple[int, ...]]:
    # Kahn's algorithm, smallest ready vertex first so the output is identity when possible.
    indeg = [0] * n
    succ: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        succ[u].append(v)
        indeg[v] += 1
    ready = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    return tuple(order) if len(order) == n else None


@dataclass(frozen=True)
class Classification:
    is_simple: bool
    is_cardinality_only: bool
    is_acyclic: bool
    tags: tuple[tuple[str, ...], ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "is_simple": self.is_simple,
            "is_cardinality_only": self.is_cardinality_only,
            "is_acyclic": self.is_acyclic,
            "constraints": [list(t) for t in self.tags],
        }


def classify(inst: Instance) -> Classification:
    return Classification(
        is_simple=all(dc.is_simple for dc in inst.constraints),
        is_cardinality_only=all(dc.is_cardinality for dc in inst.constraints),
        is_acyclic=_topo_order(inst.n, dependency_edges(inst)) is not None,
        tags=tuple(dc.tags() for dc in inst.constraints),
    )


def require_simple(inst: Instance, what: str) -> None:
    bad = [i + 1 for i, dc in enumerate(inst.constraints) if not dc.is_simple]
    if bad:
        raise PreconditionError(f"{what} needs a simple instance; constraints {bad} have |X| > 1")
    if not inst.constraints:
        raise PreconditionError(f"{what} needs at least one constraint")


def vkey(mask: int) -> tuple[int, ...]:
    """Sort key for sets: sorted members, so the empty set comes first."""
    return tuple(members(mask))


def topological_permutation(inst: Instance) -> Optional[tuple[int, ...]]:
    """A variable order putting ``u`` before ``v`` for every dependency edge, or None."""
    return _topo_order(inst.n, dependency_edges(inst))


def check_permutation(n: int, pi: Sequence[int]) -> tuple[int, ...]:
    pi = tuple(pi)
    if sorted(pi) != list(range(n)):
        raise InstanceError(f"{list(pi)} is not a permutation of the {n} variables")
    return pi


def parse_permutation(inst: Instance, text: str) -> tuple[int, ...]:
    """``"a,b,c"`` or ``"1,2,3"`` to a 0-based permutation."""
    parts = [p for p in text.split(",") if p.strip()]
    return check_permutation(inst.n, [inst.index_of(p) for p in parts])
