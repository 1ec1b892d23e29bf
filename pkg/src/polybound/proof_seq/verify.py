"""Symbolic checker for proof sequences.

Replays the steps on a bag of term coefficients, starting from
``Σ δ_j h(Y_j|X_j)``.  Terms ``h(S|S)`` are identically zero: they are never
stored and may be produced or consumed freely.  Any other term may only be
consumed up to its current coefficient.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from ..model import Instance
from .terms import COMPOSE, DECOMPOSE, MONOTONICITY, SUBMODULARITY, ProofStep, Term


@dataclass(frozen=True)
class ProofVerdict:
    accepted: bool
    reason: str
    step: Optional[int] = None  # 1-based index of the offending step
    final: Fraction = Fraction(0)  # coefficient of h([n]) at the end
    bound: Optional[Fraction] = None  # Σ c_j δ_j when accepted


class _Reject(Exception):
    pass


def _sub(a: int, b: int) -> bool:
    return a & ~b == 0


def _structure(step: ProofStep) -> None:
    if step.w <= 0:
        raise _Reject(f"non-positive weight {step.w}")
    k = step.kind
    if k in (DECOMPOSE, COMPOSE):
        if None in (step.X, step.Z, step.Y):
            raise _Reject(f"{k} needs X, Z, Y")
        if not (_sub(step.X, step.Z) and _sub(step.Z, step.Y)) or step.X == step.Y:
            raise _Reject(f"malformed {k}: need X ⊆ Z ⊆ Y with X ≠ Y")
    elif k == MONOTONICITY:
        if None in (step.X, step.Y):
            raise _Reject("monotonicity needs X, Y")
        if not _sub(step.X, step.Y) or step.X == step.Y:
            raise _Reject("malformed monotonicity: need X ⊊ Y")
    elif k == SUBMODULARITY:
        if None in (step.I, step.J):
            raise _Reject("submodularity needs I, J")
        if _sub(step.I, step.J) or _sub(step.J, step.I):
            raise _Reject("malformed submodularity: I and J must be incomparable")
    else:
        raise _Reject(f"unknown step kind {k!r}")


def _moves(step: ProofStep) -> tuple[list[Term], list[Term]]:
    """Terms consumed and produced by one unit of the step."""
    k = step.kind
    if k == DECOMPOSE:
        return [Term(step.X, step.Y)], [Term(step.X, step.Z), Term(step.Z, step.Y)]
    if k == COMPOSE:
        return [Term(step.X, step.Z), Term(step.Z, step.Y)], [Term(step.X, step.Y)]
    if k == MONOTONICITY:
        return [Term(step.X, step.Y)], []
    I, J = step.I, step.J
    return [Term(I & J, I)], [Term(J, I | J)]


def verify_proof(inst: Instance, delta: Sequence, steps: Sequence[ProofStep]) -> ProofVerdict:
    delta = [Fraction(d) for d in delta]
    if len(delta) != inst.k:
        return ProofVerdict(False, f"{len(delta)} delta values for {inst.k} constraints")
    if any(d < 0 for d in delta):
        return ProofVerdict(False, "negative delta")
    bag: dict[Term, Fraction] = {}
    for dc, d in zip(inst.constraints, delta):
        if d:
            t = Term(dc.X, dc.Y)
            bag[t] = bag.get(t, Fraction(0)) + d
    top = inst.universe
    for no, step in enumerate(steps, 1):
        try:
            _structure(step)
            for name in ("X", "Z", "Y", "I", "J"):
                v = getattr(step, name)
                if v is not None and v & ~top:
                    raise _Reject(f"{name} mentions a variable outside the universe")
            used, made = _moves(step)
            for t in used:
                if t.X == t.Y:
                    continue
                have = bag.get(t, Fraction(0))
                if have < step.w:
                    raise _Reject(
                        f"coefficient of h({inst.fmt_set(t.Y)}|{inst.fmt_set(t.X)}) would become {have - step.w}"
                    )
                bag[t] = have - step.w
            for t in made:
                if t.X != t.Y:
                    bag[t] = bag.get(t, Fraction(0)) + step.w
        except _Reject as e:
            return ProofVerdict(False, f"step {no} ({step.kind}): {e}", no)
    final = bag.get(Term(0, top), Fraction(0))
    if final < 1:
        return ProofVerdict(False, f"final coefficient of h({inst.fmt_set(top)}) is {final} < 1", None, final)
    bound = sum((dc.c * d for dc, d in zip(inst.constraints, delta)), Fraction(0))
    return ProofVerdict(True, "ok", None, final, bound)
