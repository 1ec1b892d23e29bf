"""Command-line front end.

Every command writes exactly one JSON document to stdout (a plain-text table
with ``--pretty``) and diagnostics to stderr.  Exit codes:

    0  success
    1  a proof was checked and rejected
    2  bad command-line usage
    3  unreadable or malformed instance / proof file
    4  the input is valid but the command does not accept it (non-simple
       instance, universe over the oracle cap, unbounded bound for ``proof``)
    5  internal fault
"""
from __future__ import annotations

import itertools
import json
import sys
import time

import click

from .dual_lift import lift, verify_dual_witness
from .flow_bound import flow_bound, suggest_permutation
from .flow_engine import build_aux_graph, decompose_flows, solve_flow_lp
from .model import (
    CapError,
    Instance,
    InstanceError,
    PreconditionError,
    check_oracle_cap,
    classify,
    parse_permutation,
    require_simple,
)
from .oracle import chain_bound_oracle, modular_bound, normal_bound_oracle, polymatroid_bound_oracle
from .proof_seq import ProofFormatError, format_proof, generate_proof, length_cap, parse_proof, verify_proof
from .rationals import fmt_ext, is_inf
from .reductions import ACYCLIC_PLUS_SIMPLE, REDUCERS, SIMPLE_PLUS_FD, TWO_THREE

EXIT_OK, EXIT_REJECTED, EXIT_USAGE, EXIT_PARSE, EXIT_PRECONDITION, EXIT_INTERNAL = 0, 1, 2, 3, 4, 5
ALL_PI_MAX_N = 7
KINDS = ("flow-simple", "oracle", "normal", "modular", "chain", "flow")
REDUCE_MODES = {"acyclic-simple": ACYCLIC_PLUS_SIMPLE, "two-three": TWO_THREE, "simple-fd": SIMPLE_PLUS_FD}


class Rejected(Exception):
    """Carries the report of a failed verification (exit code 1)."""

    def __init__(self, report: dict):
        super().__init__(report.get("reason", "rejected"))
        self.report = report


def _load(path: str) -> Instance:
    try:
        return Instance.load(path)
    except OSError as e:
        raise InstanceError(f"cannot read {path}: {e.strerror or e}") from None


def _digest(inst: Instance) -> dict:
    cl = classify(inst)
    return {
        "n": inst.n,
        "k": inst.k,
        "vars": list(inst.names),
        "simple": cl.is_simple,
        "cardinality_only": cl.is_cardinality_only,
        "acyclic": cl.is_acyclic,
    }


def _pi_names(inst: Instance, pi) -> list[str]:
    return [inst.names[v] for v in pi]


def _resolve_pi(inst: Instance, text):
    if text:
        return parse_permutation(inst, text), "given"
    return suggest_permutation(inst)


def _emit(ctx: click.Context, report: dict) -> None:
    if ctx.params.get("pretty"):
        click.echo(_table(report))
    else:
        click.echo(json.dumps(report, indent=2))


def _table(report: dict, indent: str = "") -> str:
    lines = []
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{indent}{key}:")
            lines.append(_table(value, indent + "  "))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"{indent}{key}:")
            for item in value:
                lines.append(_table(item, indent + "  - ".ljust(len(indent) + 4)))
        else:
            shown = ", ".join(map(str, value)) if isinstance(value, list) else value
            lines.append(f"{indent}{key}: {shown}")
    return "\n".join(line for line in lines if line)


pretty_option = click.option("--pretty", is_flag=True, help="Human-readable table instead of JSON.")


@click.group()
def cli():
    """Cardinality bounds for conjunctive queries under degree constraints."""


# -- bound -------------------------------------------------------------------------


def _bound_once(inst: Instance, kind: str, pi, multi_source: bool, artifacts: bool) -> tuple:
    extra = {}
    if kind == "flow-simple":
        require_simple(inst, "the flow-simple bound")
        value, sol = solve_flow_lp(inst)
        if artifacts and sol is not None:
            graph = build_aux_graph(inst)
            paths = decompose_flows(sol, graph)
            witness = lift(inst, sol, paths)
            extra["solution"] = sol.to_json(inst)
            extra["paths"] = paths.to_json(inst)
            extra["dual_witness"] = witness.to_json(inst)
            extra["dual_witness_accepted"] = verify_dual_witness(inst, witness).accepted
    elif kind == "oracle":
        value, table = polymatroid_bound_oracle(inst)
        if artifacts and table is not None:
            extra["h"] = table.to_json(inst)
    elif kind == "normal":
        value, weights = normal_bound_oracle(inst)
        if artifacts and weights:
            extra["step_weights"] = [{"V": inst.set_names(V), "lambda": str(v)} for V, v in sorted(weights.items())]
    elif kind == "modular":
        value, w = modular_bound(inst)
        if artifacts and w is not None:
            extra["weights"] = {inst.names[v]: str(x) for v, x in enumerate(w)}
    elif kind == "chain":
        value = chain_bound_oracle(inst, pi)
    elif kind == "flow":
        value = flow_bound(inst, pi, multi_source=multi_source)
    else:  # pragma: no cover - click restricts the choices
        raise PreconditionError(f"unknown kind {kind!r}")
    return value, extra


@cli.command()
@click.argument("file")
@click.option("--kind", type=click.Choice(KINDS), default="flow-simple", show_default=True)
@click.option("--pi", "pi_text", help="Variable order for chain/flow, e.g. a,b,c or 1,2,3.")
@click.option("--all-pi", is_flag=True, help=f"Minimise chain/flow over every order (n <= {ALL_PI_MAX_N}).")
@click.option("--multi-source/--single-source", default=True, show_default=True)
@click.option("--artifacts", is_flag=True, help="Include solutions, witnesses or tables.")
@pretty_option
@click.pass_context
def bound(ctx, file, kind, pi_text, all_pi, multi_source, artifacts, pretty):
    """Compute one bound for the instance in FILE."""
    inst = _load(file)
    if kind in ("oracle", "normal", "chain"):
        check_oracle_cap(inst.n)
    t0 = time.perf_counter()
    report = {"instance": _digest(inst), "kind": kind}
    if kind in ("chain", "flow"):
        if all_pi:
            if inst.n > ALL_PI_MAX_N:
                raise CapError(f"--all-pi needs n <= {ALL_PI_MAX_N}, got n={inst.n}")
            best, best_pi, count = None, None, 0
            for pi in itertools.permutations(range(inst.n)):
                value, _ = _bound_once(inst, kind, pi, multi_source, False)
                count += 1
                if best is None or value < best:
                    best, best_pi = value, pi
            report.update(value=fmt_ext(best), pi=_pi_names(inst, best_pi), pi_source="best-of-all", evaluated=count)
        else:
            pi, source = _resolve_pi(inst, pi_text)
            value, extra = _bound_once(inst, kind, pi, multi_source, artifacts)
            report.update(value=fmt_ext(value), pi=_pi_names(inst, pi), pi_source=source, **extra)
        if kind == "flow":
            report["multi_source"] = multi_source
    else:
        value, extra = _bound_once(inst, kind, None, multi_source, artifacts)
        report.update(value=fmt_ext(value), **extra)
    report["seconds"] = round(time.perf_counter() - t0, 6)
    _emit(ctx, report)


# -- proof / verify ----------------------------------------------------------------


@cli.command()
@click.argument("file")
@click.option("-o", "--out", type=click.Path(dir_okay=False, writable=True), help="Write the proof text here.")
@click.option("--lockstep", is_flag=True, help="Cross-check the proof against the witness after every step.")
@pretty_option
@click.pass_context
def proof(ctx, file, out, lockstep, pretty):
    """Generate a proof sequence for the simple instance in FILE."""
    inst = _load(file)
    require_simple(inst, "proof generation")
    t0 = time.perf_counter()
    value, sol = solve_flow_lp(inst)
    if sol is None:
        raise PreconditionError("the bound is unbounded, so there is no proof to emit")
    paths = decompose_flows(sol, build_aux_graph(inst))
    doc = generate_proof(inst, sol, paths, lockstep=lockstep)
    text = format_proof(doc, inst)
    verdict = verify_proof(inst, doc.delta, doc.steps)
    if not verdict.accepted:
        raise RuntimeError(f"generated proof failed self-check: {verdict.reason}")
    report = {
        "instance": _digest(inst),
        "value": fmt_ext(value),
        "certified": fmt_ext(verdict.bound),
        "length": len(doc.steps),
        "length_cap": length_cap(inst.n, inst.k),
        "delta": [str(d) for d in doc.delta],
    }
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        report["proof_file"] = out
    else:
        report["proof"] = text.splitlines()
    report["seconds"] = round(time.perf_counter() - t0, 6)
    _emit(ctx, report)


@cli.command()
@click.argument("file")
@click.argument("proof_file")
@pretty_option
@click.pass_context
def verify(ctx, file, proof_file, pretty):
    """Check the proof in PROOF_FILE against the instance in FILE."""
    inst = _load(file)
    try:
        with open(proof_file) as fh:
            text = fh.read()
    except OSError as e:
        raise ProofFormatError(f"cannot read {proof_file}: {e.strerror or e}") from None
    doc = parse_proof(text, inst)
    verdict = verify_proof(inst, doc.delta, doc.steps)
    report = {
        "instance": _digest(inst),
        "accepted": verdict.accepted,
        "reason": verdict.reason,
        "step": verdict.step,
        "length": len(doc.steps),
        "final_coefficient": str(verdict.final),
        "certified": fmt_ext(verdict.bound) if verdict.bound is not None else None,
    }
    if not verdict.accepted:
        raise Rejected(report)
    _emit(ctx, report)


# -- compare ------------------------------------------------------------------------


@cli.command()
@click.argument("file")
@click.option("--pi", "pi_text", help="Variable order for chain and flow bounds.")
@click.option("--multi-source/--single-source", default=True, show_default=True)
@pretty_option
@click.pass_context
def compare(ctx, file, pi_text, multi_source, pretty):
    """Compute every bound for FILE and check the known inequalities between them."""
    inst = _load(file)
    check_oracle_cap(inst.n)
    t0 = time.perf_counter()
    pi, source = _resolve_pi(inst, pi_text)
    simple = classify(inst).is_simple
    values = {
        "modular": modular_bound(inst)[0],
        "normal": normal_bound_oracle(inst)[0],
        "polymatroid": polymatroid_bound_oracle(inst)[0],
        "flow-simple": solve_flow_lp(inst)[0] if simple else None,
        "chain": chain_bound_oracle(inst, pi),
        "flow": flow_bound(inst, pi, multi_source=multi_source),
    }
    pairs = [
        ("modular", "normal"),
        ("normal", "polymatroid"),
        ("polymatroid", "chain"),
        ("polymatroid", "flow"),
        ("flow", "chain"),
    ]
    checks = {f"{a} <= {b}": values[a] <= values[b] for a, b in pairs}
    if simple:
        checks["flow-simple == polymatroid"] = values["flow-simple"] == values["polymatroid"]
    flags = []
    if is_inf(values["chain"]) and not is_inf(values["flow"]):
        flags.append("unbounded-gap")
    report = {
        "instance": _digest(inst),
        "pi": _pi_names(inst, pi),
        "pi_source": source,
        "bounds": {k: (fmt_ext(v) if v is not None else None) for k, v in values.items()},
        "checks": checks,
        "sandwich": all(checks.values()),
        "flags": flags,
        "seconds": round(time.perf_counter() - t0, 6),
    }
    _emit(ctx, report)


# -- reduce / classify -------------------------------------------------------------


@cli.command()
@click.argument("file")
@click.option("--mode", type=click.Choice(sorted(REDUCE_MODES)), required=True)
@click.option("--check", is_flag=True, help="Also compare the polymatroid bounds of both instances.")
@click.option("-o", "--out", type=click.Path(dir_okay=False, writable=True), help="Write the reduced instance here.")
@pretty_option
@click.pass_context
def reduce(ctx, file, mode, check, out, pretty):
    """Rewrite FILE into a restricted shape with the same polymatroid bound."""
    inst = _load(file)
    trace = REDUCERS[REDUCE_MODES[mode]](inst)
    report = trace.to_json()
    report["mode"] = mode
    if out:
        with open(out, "w") as fh:
            fh.write(trace.reduced.dumps() + "\n")
        report["reduced_file"] = out
    if check:
        try:
            check_oracle_cap(max(inst.n, trace.reduced.n))
        except CapError as e:
            report["check"] = {"performed": False, "reason": str(e)}
        else:
            a = polymatroid_bound_oracle(inst)[0]
            b = polymatroid_bound_oracle(trace.reduced)[0]
            report["check"] = {"performed": True, "original": fmt_ext(a), "reduced": fmt_ext(b), "equal": a == b}
    _emit(ctx, report)


@cli.command(name="classify")
@click.argument("file")
@pretty_option
@click.pass_context
def classify_cmd(ctx, file, pretty):
    """Report the shape of the instance in FILE."""
    inst = _load(file)
    pi, reason = suggest_permutation(inst)
    report = {
        "instance": _digest(inst),
        "constraints": [
            {"index": i + 1, "X": inst.set_names(dc.X), "Y": inst.set_names(dc.Y), "c": str(dc.c), "tags": list(dc.tags())}
            for i, dc in enumerate(inst.constraints)
        ],
        "suggested_pi": _pi_names(inst, pi),
        "suggested_pi_reason": reason,
    }
    _emit(ctx, report)


# -- entry point --------------------------------------------------------------------


def _fail(code: int, kind: str, message: str, extra=None) -> int:
    click.echo(f"error: {message}", err=True)
    doc = {"error": {"kind": kind, "message": message, "exit_code": code}}
    if extra:
        doc.update(extra)
    click.echo(json.dumps(doc, indent=2))
    return code


def run(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="polybound", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.Abort:
        return _fail(EXIT_INTERNAL, "aborted", "aborted")
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except Rejected as e:
        click.echo(f"error: proof rejected: {e}", err=True)
        click.echo(json.dumps(e.report, indent=2))
        return EXIT_REJECTED
    except (InstanceError, ProofFormatError) as e:
        return _fail(EXIT_PARSE, "parse", str(e))
    except PreconditionError as e:
        return _fail(EXIT_PRECONDITION, "precondition", str(e))
    except Exception as e:  # noqa: BLE001 - last line of defence
        return _fail(EXIT_INTERNAL, "internal", f"{type(e).__name__}: {e}")
    return EXIT_OK


def main() -> None:
    sys.exit(run())
