"""Proof sequences for simple instances, emitted alongside the dual lift.

Every edge the lift processes becomes one or two proof steps:

==================================  =====================================
lift event                          steps (weight ε)
==================================  =====================================
forward, lifted edge goes up        compose ``∅, A, B``
forward, lifted edge goes down      decompose ``∅, B, A``
backward, degree edge               decompose ``∅, A, B``  (level ``[i+1]``)
backward, μ edge, ``i+1 ∈ A``       decompose ``∅, B∪[i], B∪[i+1]``;
                                    compose ``∅, B∪[i], A∪[i]``
backward, μ edge, ``i+1 ∉ A``       submodularity ``I=A∪[i], J=B∪[i+1]``;
                                    compose ``∅, B∪[i+1], A∪[i+1]``
cleanup, ``i+1 ∈ Y_j``              decompose ``X∪[i], X∪[i+1], Y∪[i]``;
                                    monotonicity ``X∪[i], X∪[i+1]``
cleanup, ``i+1 ∉ Y_j``              submodularity ``I=Y∪[i], J=X∪[i+1]``
==================================  =====================================

Compose/decompose steps whose middle set equals an end are identities
(they only touch the zero term ``h(S|S)``) and are left out, as are
weight-zero steps.

In lock-step mode the bag is compared with the lift after every event: a
term ``h(Y|X)`` with ``X ≠ ∅`` carries ``μ_{X,Y}``, and ``h(Y|∅)`` carries
``μ_{∅,Y}`` plus the excess at ``Y``.  Weight dropped by monotonicity steps
is added back before comparing.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from ..dual_lift import lift
from ..flow_engine import FlowSolution, PathDecomposition
from ..model import Instance, require_simple
from .terms import COMPOSE, DECOMPOSE, MONOTONICITY, SUBMODULARITY, ProofDocument, ProofStep, Term


class ProofGenerationError(RuntimeError):
    """A generated step would make a coefficient negative, or lock-step failed."""


def length_cap(n: int, k: int, C: int = 16) -> int:
    return C * (k + n) * k * n * n


class _Builder:
    def __init__(self, inst: Instance, delta, lockstep: bool):
        self.inst = inst
        self.steps: list[ProofStep] = []
        self.bag: dict[Term, Fraction] = {}
        self.dropped: dict[Term, Fraction] = {}
        self.lockstep = lockstep
        for dc, d in zip(inst.constraints, delta):
            if d:
                t = Term(dc.X, dc.Y)
                self.bag[t] = self.bag.get(t, Fraction(0)) + d

    def _take(self, t: Term, w) -> None:
        if t.X == t.Y:
            return
        v = self.bag.get(t, Fraction(0)) - w
        if v < 0:
            raise ProofGenerationError(
                f"step {len(self.steps) + 1}: h({self.inst.fmt_set(t.Y)}|{self.inst.fmt_set(t.X)}) would become {v}"
            )
        if v:
            self.bag[t] = v
        else:
            del self.bag[t]

    def _give(self, t: Term, w) -> None:
        if t.X != t.Y:
            self.bag[t] = self.bag.get(t, Fraction(0)) + w

    def decompose(self, X, Z, Y, w):
        if w and Z != X and Z != Y:
            self._take(Term(X, Y), w)
            self._give(Term(X, Z), w)
            self._give(Term(Z, Y), w)
            self.steps.append(ProofStep(DECOMPOSE, w, X=X, Z=Z, Y=Y))

    def compose(self, X, Z, Y, w):
        if w and Z != X and Z != Y:
            self._take(Term(X, Z), w)
            self._take(Term(Z, Y), w)
            self._give(Term(X, Y), w)
            self.steps.append(ProofStep(COMPOSE, w, X=X, Z=Z, Y=Y))

    def monotonicity(self, X, Y, w):
        if w:
            t = Term(X, Y)
            self._take(t, w)
            self.dropped[t] = self.dropped.get(t, Fraction(0)) + w
            self.steps.append(ProofStep(MONOTONICITY, w, X=X, Y=Y))

    def submodularity(self, I, J, w):
        if w:
            self._take(Term(I & J, I), w)
            self._give(Term(J, I | J), w)
            self.steps.append(ProofStep(SUBMODULARITY, w, I=I, J=J))

    def compare(self, event: str, lifter) -> None:
        mu = lifter.w.mu
        keys = set(self.bag) | set(self.dropped) | {Term(X, Y) for X, Y in mu}
        keys |= {Term(0, Z) for Z in lifter.excess if Z}
        for t in keys:
            have = self.bag.get(t, Fraction(0)) + self.dropped.get(t, Fraction(0))
            want = mu.get((t.X, t.Y), Fraction(0))
            if t.X == 0:
                want += lifter.ex(t.Y)
            if have != want:
                fmt = self.inst.fmt_set
                raise ProofGenerationError(
                    f"lock-step broken after {event} (step {len(self.steps)}): "
                    f"h({fmt(t.Y)}|{fmt(t.X)}) has {have}, lift says {want}"
                )

    def __call__(self, event: str, lifter=None, **d) -> None:
        eps = d.get("eps")
        if event == "forward-up":
            self.compose(0, d["A"], d["B"], eps)
        elif event == "forward-down":
            self.decompose(0, d["B"], d["A"], eps)
        elif event == "backward-up":
            self.decompose(0, d["A"], d["B"], eps)
        elif event == "backward-down-in":
            if d["B0"] != d["B1"]:
                self.decompose(0, d["B0"], d["B1"], eps)
            self.compose(0, d["B0"], d["A0"], eps)
        elif event == "backward-down-out":
            self.submodularity(d["A0"], d["B1"], eps)
            self.compose(0, d["B1"], d["A1"], eps)
        elif event == "cleanup-in":
            self.decompose(d["X0"], d["X1"], d["Y0"], eps)
            self.monotonicity(d["X0"], d["X1"], eps)
        elif event == "cleanup-out":
            self.submodularity(d["Y0"], d["X1"], eps)
        if self.lockstep:
            self.compare(event, lifter)


def generate_proof(
    inst: Instance,
    sol: FlowSolution,
    paths: PathDecomposition,
    pi: Optional[Sequence[int]] = None,
    lockstep: bool = False,
) -> ProofDocument:
    """A proof of ``h([n]) <= Σ δ_j h(Y_j|X_j)`` for the ``δ`` of ``sol``."""
    require_simple(inst, "proof generation")
    b = _Builder(inst, sol.delta, lockstep)
    lift(inst, sol, paths, pi=pi, check=lockstep, observer=b)
    if b.bag.get(Term(0, inst.universe), Fraction(0)) < 1:
        raise ProofGenerationError("generated sequence does not reach h([n])")
    return ProofDocument(inst.n, tuple(sol.delta), tuple(b.steps))
