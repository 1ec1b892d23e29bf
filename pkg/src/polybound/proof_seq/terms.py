"""Conditional terms ``h(Y|X)`` and weighted proof steps."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

DECOMPOSE = "decompose"
COMPOSE = "compose"
MONOTONICITY = "monotonicity"
SUBMODULARITY = "submodularity"
KINDS = (DECOMPOSE, COMPOSE, MONOTONICITY, SUBMODULARITY)

# parameters each kind carries, in canonical text order
FIELDS = {
    DECOMPOSE: ("X", "Z", "Y"),
    COMPOSE: ("X", "Z", "Y"),
    MONOTONICITY: ("X", "Y"),
    SUBMODULARITY: ("I", "J"),
}


class Term(NamedTuple):
    """``h(Y | X)``; ``X = 0`` is the unconditional ``h(Y)``."""

    X: int
    Y: int


@dataclass(frozen=True)
class ProofStep:
    """One weighted rule application.

    * decompose ``X, Z, Y``: ``h(Y|X) -> h(Z|X) + h(Y|Z)``
    * compose ``X, Z, Y``: ``h(Z|X) + h(Y|Z) -> h(Y|X)``
    * monotonicity ``X, Y``: ``h(Y|X) -> 0``
    * submodularity ``I, J``: ``h(I|I∩J) -> h(I∪J|J)``
    """

    kind: str
    w: Fraction
    X: Optional[int] = None
    Z: Optional[int] = None
    Y: Optional[int] = None
    I: Optional[int] = None
    J: Optional[int] = None

    def params(self) -> dict[str, int]:
        return {f: getattr(self, f) for f in FIELDS[self.kind]}

    def with_weight(self, w) -> "ProofStep":
        return ProofStep(self.kind, Fraction(w), self.X, self.Z, self.Y, self.I, self.J)


@dataclass(frozen=True)
class ProofDocument:
    """A proof sequence with the inequality it proves."""

    n: int
    delta: tuple[Fraction, ...]
    steps: tuple[ProofStep, ...]

    @property
    def k(self) -> int:
        return len(self.delta)
