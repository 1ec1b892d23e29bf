"""Lift a feasible flow solution to a feasible solution of the lattice dual.

The lattice dual has a variable ``δ_i`` per constraint (an edge ``X_i -> Y_i``),
``μ_{X,Y}`` per pair ``X ⊊ Y`` (an edge ``Y -> X``) and ``σ_{I,J}`` per
incomparable pair (a hyperedge taking flow out of ``I`` and ``J`` into ``I ∩ J``
and ``I ∪ J``).  Feasibility asks for excess ``>= 1`` at ``[n]``, ``>= -1`` at
``∅`` and ``>= 0`` everywhere else.

``lift`` walks the variables in order; at step ``i`` it reroutes the unit that
sits at ``[i]`` to ``[i+1]`` along the flow paths of sink ``i+1`` lifted by
``[i]``, then restores ``μ_{X_j ∪ [i+1], Y_j ∪ [i+1]} = δ_j`` for every
constraint.  Readings of the update rules:

* backward loop, μ edge ``A -> B`` with ``i+1 ∈ A``: decrease ``μ_{B∪[i], A∪[i]}``
  and increase ``μ_{B∪[i], B∪[i+1]}`` (skipped when the two sets coincide);
* cleanup with ``i+1 ∉ Y_j``: besides ``σ_{X_j∪[i+1], Y_j∪[i]}``, the target
  ``μ_{X_j∪[i+1], Y_j∪[i+1]}`` also grows by ``ε``, otherwise excess would
  pile up at ``Y_j ∪ [i+1]``;
* constraints with ``i+1 ∈ X_j`` are skipped in cleanup (their update is a no-op).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .flow_engine import DEG, FlowSolution, PathDecomposition
from .model import (
    Instance,
    check_permutation,
    incomparable,
    is_proper_subset,
    require_simple,
    vkey,
)
from .rationals import parse_rational


class LiftError(RuntimeError):
    """An internal invariant of the lift broke; names where."""


def _pair_key(I: int, J: int) -> tuple[int, int]:
    return (I, J) if vkey(I) <= vkey(J) else (J, I)


@dataclass
class DualWitness:
    delta: tuple[Fraction, ...]
    sigma: dict = field(default_factory=dict)  # (I, J) -> value, I and J incomparable
    mu: dict = field(default_factory=dict)  # (X, Y) -> value, X ⊊ Y

    def objective(self, inst: Instance) -> Fraction:
        return sum((dc.c * d for dc, d in zip(inst.constraints, self.delta)), Fraction(0))

    def to_json(self, inst: Instance) -> dict:
        names = inst.set_names
        return {
            "delta": [str(d) for d in self.delta],
            "sigma": [
                {"I": names(I), "J": names(J), "value": str(v)}
                for (I, J), v in sorted(self.sigma.items(), key=lambda kv: (vkey(kv[0][0]), vkey(kv[0][1])))
                if v
            ],
            "mu": [
                {"X": names(X), "Y": names(Y), "value": str(v)}
                for (X, Y), v in sorted(self.mu.items(), key=lambda kv: (vkey(kv[0][0]), vkey(kv[0][1])))
                if v
            ],
        }

    @classmethod
    def from_json(cls, data: dict, inst: Instance) -> "DualWitness":
        delta = tuple(parse_rational(d) for d in data["delta"])
        sigma, mu = {}, {}
        for item in data.get("sigma", []):
            key = (inst.set_of(item["I"]), inst.set_of(item["J"]))
            sigma[key] = sigma.get(key, Fraction(0)) + parse_rational(item["value"])
        for item in data.get("mu", []):
            key = (inst.set_of(item["X"]), inst.set_of(item["Y"]))
            mu[key] = mu.get(key, Fraction(0)) + parse_rational(item["value"])
        return cls(delta, sigma, mu)


# -- verification (independent of the lift) ----------------------------------------


@dataclass(frozen=True)
class WitnessVerdict:
    accepted: bool
    violations: tuple[str, ...]
    excess: dict
    objective: Fraction


def witness_excess(inst: Instance, w: DualWitness) -> dict[int, Fraction]:
    ex: dict[int, Fraction] = {}

    def bump(Z, v):
        ex[Z] = ex.get(Z, Fraction(0)) + v

    for dc, d in zip(inst.constraints, w.delta):
        bump(dc.Y, d)
        bump(dc.X, -d)
    for (I, J), v in w.sigma.items():
        bump(I & J, v)
        bump(I | J, v)
        bump(I, -v)
        bump(J, -v)
    for (X, Y), v in w.mu.items():
        bump(X, v)
        bump(Y, -v)
    return ex


def verify_dual_witness(inst: Instance, w: DualWitness) -> WitnessVerdict:
    bad = []
    fmt = inst.fmt_set
    if len(w.delta) != inst.k:
        bad.append(f"{len(w.delta)} delta values for {inst.k} constraints")
    for i, d in enumerate(w.delta):
        if d < 0:
            bad.append(f"delta_{i + 1} = {d} < 0")
    for (I, J), v in w.sigma.items():
        if not incomparable(I, J):
            bad.append(f"sigma_{fmt(I)},{fmt(J)}: sets are comparable")
        if v < 0:
            bad.append(f"sigma_{fmt(I)},{fmt(J)} = {v} < 0")
    for (X, Y), v in w.mu.items():
        if not is_proper_subset(X, Y):
            bad.append(f"mu_{fmt(X)},{fmt(Y)}: not a proper subset pair")
        if v < 0:
            bad.append(f"mu_{fmt(X)},{fmt(Y)} = {v} < 0")
    ex = witness_excess(inst, w)
    top = inst.universe
    ex.setdefault(0, Fraction(0))
    ex.setdefault(top, Fraction(0))
    for Z in sorted(ex, key=vkey):
        need = 1 if Z == top else -1 if Z == 0 else 0
        if ex[Z] < need:
            bad.append(f"excess({fmt(Z)}) = {ex[Z]} < {need}")
    objective = sum((dc.c * d for dc, d in zip(inst.constraints, w.delta[: inst.k])), Fraction(0))
    return WitnessVerdict(not bad, tuple(bad), ex, objective)


# -- the lift -----------------------------------------------------------------------

Observer = Callable[..., None]


class _Lifter:
    def __init__(self, inst: Instance, delta):
        self.inst = inst
        self.w = DualWitness(tuple(delta))
        self.excess: dict[int, Fraction] = {}
        self.where = "init"

    def _bump(self, Z, v):
        self.excess[Z] = self.excess.get(Z, Fraction(0)) + v

    def mu(self, X: int, Y: int, eps: Fraction) -> None:
        if not is_proper_subset(X, Y):
            raise LiftError(f"{self.where}: mu on non-nested pair {self.inst.fmt_set(X)}, {self.inst.fmt_set(Y)}")
        v = self.w.mu.get((X, Y), Fraction(0)) + eps
        if v < 0:
            raise LiftError(f"{self.where}: mu_{self.inst.fmt_set(X)},{self.inst.fmt_set(Y)} would become {v}")
        if v:
            self.w.mu[(X, Y)] = v
        else:
            self.w.mu.pop((X, Y), None)
        self._bump(X, eps)
        self._bump(Y, -eps)

    def sigma(self, I: int, J: int, eps: Fraction) -> None:
        if not incomparable(I, J):
            raise LiftError(f"{self.where}: sigma on comparable pair")
        key = _pair_key(I, J)
        self.w.sigma[key] = self.w.sigma.get(key, Fraction(0)) + eps
        self._bump(I & J, eps)
        self._bump(I | J, eps)
        self._bump(I, -eps)
        self._bump(J, -eps)

    def ex(self, Z: int) -> Fraction:
        return self.excess.get(Z, Fraction(0))

    def check_level(self, i: int, prefix: Sequence[int]) -> None:
        """Outer-loop invariant after iteration ``i`` (level ``[i+1]``)."""
        top = prefix[i + 1]
        fmt = self.inst.fmt_set
        for Z, v in self.excess.items():
            want = 1 if Z == top else -1 if Z == 0 else 0
            if v != want:
                raise LiftError(f"iteration {i}, after cleanup: excess({fmt(Z)}) = {v}, expected {want}")
        if self.ex(top) != 1:
            raise LiftError(f"iteration {i}: excess at {fmt(top)} is {self.ex(top)}")
        want: dict = {}
        for dc, d in zip(self.inst.constraints, self.w.delta):
            X, Y = dc.X | top, dc.Y | top
            if X != Y:
                want[(X, Y)] = want.get((X, Y), Fraction(0)) + d
        for key, v in want.items():
            got = self.w.mu.get(key, Fraction(0))
            if got != v:
                raise LiftError(
                    f"iteration {i}, after cleanup: mu_{fmt(key[0])},{fmt(key[1])} = {got}, expected {v}"
                )


def lift(
    inst: Instance,
    sol: FlowSolution,
    paths: PathDecomposition,
    pi: Optional[Sequence[int]] = None,
    check: bool = False,
    observer: Optional[Observer] = None,
) -> DualWitness:
    """Extend ``sol.delta`` to a feasible ``(δ, σ, μ)``.

    ``pi`` orders the variables (identity by default).  With ``check`` the
    outer-loop invariant and the per-path forward claim are asserted.
    ``observer(event, **data)`` is called after every processed edge and
    cleanup item, with the witness in its current state.
    """
    require_simple(inst, "the dual lift")
    n = inst.n
    order = check_permutation(n, pi if pi is not None else range(n))
    prefix = [0]
    for v in order:
        prefix.append(prefix[-1] | 1 << v)
    L = _Lifter(inst, sol.delta)
    note = observer or (lambda *a, **k: None)

    for dc, d in zip(inst.constraints, sol.delta):
        L._bump(dc.Y, d)
        L._bump(dc.X, -d)
        if d:
            L.mu(dc.X, dc.Y, d)
    note("init", lifter=L)

    for i in range(n):
        t = order[i]
        lo, hi = prefix[i], prefix[i + 1]
        sink_paths = paths.paths[t]

        for p_no, path in enumerate(sink_paths):
            eps = path.value
            before = dict(L.excess) if check else None
            for e_no, e in enumerate(path.edges):
                A, B = e.tail | lo, e.head | lo
                L.where = f"iteration {i}, forward loop, path {p_no}, edge {e_no} at {inst.fmt_set(A)}"
                if is_proper_subset(A, B):
                    L.mu(A, B, -eps)
                    note("forward-up", i=i, A=A, B=B, eps=eps, lifter=L)
                elif is_proper_subset(B, A):
                    L.mu(B, A, eps)
                    note("forward-down", i=i, A=A, B=B, eps=eps, lifter=L)
            if check:
                _check_forward(L, before, lo, hi, eps, i, p_no)

        for p_no, path in enumerate(sink_paths):
            eps = path.value
            for e_no, e in reversed(list(enumerate(path.edges))):
                A, B = e.tail, e.head
                A1, B1 = A | hi, B | hi
                L.where = f"iteration {i}, backward loop, path {p_no}, edge {e_no} at {inst.fmt_set(A1)}"
                if is_proper_subset(A1, B1):
                    L.mu(A1, B1, eps)
                    note("backward-up", i=i, A=A1, B=B1, eps=eps, lifter=L)
                elif is_proper_subset(B1, A1):
                    A0, B0 = A | lo, B | lo
                    L.mu(B0, A0, -eps)
                    if A & (1 << t):
                        if B0 != B1:
                            L.mu(B0, B1, eps)
                        note("backward-down-in", i=i, A0=A0, B0=B0, B1=B1, eps=eps, lifter=L)
                    else:
                        L.sigma(A0, B1, eps)
                        note("backward-down-out", i=i, A0=A0, A1=A1, B0=B0, B1=B1, eps=eps, lifter=L)

        f = paths.recompose(t)
        used = [Fraction(0)] * inst.k
        for e, v in f.items():
            if e.kind == DEG:
                used[e.index] += v
        for j, dc in enumerate(inst.constraints):
            X0, Y0, X1, Y1 = dc.X | lo, dc.Y | lo, dc.X | hi, dc.Y | hi
            if X1 == Y1 or dc.X & (1 << t):
                continue
            eps = sol.delta[j] - used[j]
            if not eps:
                continue
            L.where = f"iteration {i}, cleanup loop, constraint {j + 1} at {inst.fmt_set(X0)}"
            L.mu(X0, Y0, -eps)
            if dc.Y & (1 << t):
                L.mu(X0, X1, eps)
                L.mu(X1, Y1, eps)
                note("cleanup-in", i=i, j=j, X0=X0, X1=X1, Y0=Y0, eps=eps, lifter=L)
            else:
                L.sigma(X1, Y0, eps)
                L.mu(X1, Y1, eps)
                note("cleanup-out", i=i, j=j, X0=X0, X1=X1, Y0=Y0, Y1=Y1, eps=eps, lifter=L)
        if check:
            L.check_level(i, prefix)
    return L.w


def _check_forward(L: _Lifter, before: dict, lo: int, hi: int, eps, i: int, p_no: int) -> None:
    keys = set(before) | set(L.excess)
    for Z in keys:
        delta = L.excess.get(Z, Fraction(0)) - before.get(Z, Fraction(0))
        want = Fraction(0)
        if Z == lo:
            want -= eps
        if Z == hi:
            want += eps
        if delta != want:
            raise LiftError(
                f"iteration {i}, forward loop, path {p_no}: excess at {L.inst.fmt_set(Z)} moved by {delta}, expected {want}"
            )
