"""Canonical text form of proof sequences.

::

    target={a,b,c,d} k=4 delta=1,0,1,1
    decompose w=1 X={} Z={a} Y={a,b}
    submodularity w=1 I={a,c} J={a,b}
"""
from __future__ import annotations

import re
from fractions import Fraction

from ..model import Instance, InstanceError
from ..rationals import parse_rational
from .terms import FIELDS, KINDS, ProofDocument, ProofStep

_SET = re.compile(r"^\{([^{}]*)\}$")


class ProofFormatError(ValueError):
    """Unparseable proof text."""


def format_step(step: ProofStep, inst: Instance) -> str:
    parts = [step.kind, f"w={step.w}"]
    for name, mask in step.params().items():
        parts.append(f"{name}={inst.fmt_set(mask)}")
    return " ".join(parts)


def format_proof(doc: ProofDocument, inst: Instance) -> str:
    head = f"target={inst.fmt_set(inst.universe)} k={doc.k} delta={','.join(str(d) for d in doc.delta)}"
    return "\n".join([head] + [format_step(s, inst) for s in doc.steps]) + "\n"


def _parse_set(text: str, inst: Instance, where: str) -> int:
    m = _SET.match(text)
    if not m:
        raise ProofFormatError(f"{where}: expected a set like {{a,b}}, got {text!r}")
    body = m.group(1).strip()
    try:
        return inst.set_of([t for t in body.split(",")]) if body else 0
    except InstanceError as e:
        raise ProofFormatError(f"{where}: {e}") from None


def _fields(tokens, where: str) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, eq, value = tok.partition("=")
        if not eq or not key:
            raise ProofFormatError(f"{where}: expected key=value, got {tok!r}")
        if key in out:
            raise ProofFormatError(f"{where}: {key} given twice")
        out[key] = value
    return out


def parse_proof(text: str, inst: Instance) -> ProofDocument:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ProofFormatError("empty proof file")
    head = _fields(lines[0].split(), "header")
    if set(head) != {"target", "k", "delta"}:
        raise ProofFormatError("header must be: target={...} k=<k> delta=<p/q,...>")
    target = _parse_set(head["target"], inst, "header")
    if target != inst.universe:
        raise ProofFormatError(f"header target {head['target']} is not the full variable set")
    try:
        k = int(head["k"])
        delta = tuple(parse_rational(d) for d in head["delta"].split(",")) if head["delta"] else ()
    except ValueError as e:
        raise ProofFormatError(f"header: {e}") from None
    if k != len(delta):
        raise ProofFormatError(f"header: k={k} but {len(delta)} delta values")
    steps = []
    for no, line in enumerate(lines[1:], 1):
        where = f"step {no}"
        kind, *rest = line.split()
        if kind not in KINDS:
            raise ProofFormatError(f"{where}: unknown step kind {kind!r}")
        fields = _fields(rest, where)
        expected = {"w", *FIELDS[kind]}
        if set(fields) != expected:
            raise ProofFormatError(f"{where}: {kind} takes fields {sorted(expected)}, got {sorted(fields)}")
        try:
            w = parse_rational(fields["w"])
        except ValueError as e:
            raise ProofFormatError(f"{where}: {e}") from None
        params = {f: _parse_set(fields[f], inst, where) for f in FIELDS[kind]}
        steps.append(ProofStep(kind, w, **params))
    return ProofDocument(inst.n, delta, tuple(steps))
