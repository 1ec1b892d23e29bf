"""Acceptance criteria 1-10, run over fixed-seed random suites.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion.
"""
import random
import time
from fractions import Fraction

import pytest

from conftest import DATA, random_instance, random_suite
from oracles import fractional_edge_cover
from polybound.dual_lift import DualWitness, lift, verify_dual_witness
from polybound.flow_bound import flow_bound, suggest_permutation
from polybound.flow_engine import build_aux_graph, decompose_flows, min_cut_certificate, solve_flow_lp
from polybound.model import classify, mask_of, members
from polybound.oracle import chain_bound_oracle, modular_bound, normal_bound_oracle, polymatroid_bound_oracle
from polybound.proof_seq import ProofStep, generate_proof, length_cap, parse_proof, verify_proof
from polybound.rationals import INF
from polybound.reductions import (
    postcondition_violations,
    reduce_acyclic_plus_simple,
    reduce_simple_plus_fd,
    reduce_two_three,
)

criterion = pytest.mark.criterion

SIMPLE_COUNT = 1000
GENERAL_COUNT = 200
PERMS_PER_INSTANCE = 5
REDUCTION_COUNT = 100
CARDINALITY_COUNT = 100


class Solved:
    """One simple instance with its flow optimum and path decomposition."""

    def __init__(self, inst):
        self.inst = inst
        self.value, self.sol = solve_flow_lp(inst)
        self.paths = decompose_flows(self.sol, build_aux_graph(inst)) if self.sol is not None else None


@pytest.fixture(scope="module")
def simple_suite():
    """1000 simple instances, n <= 6, k <= 6, c in {0, 1/2, ..., 4}; flow LP timed."""
    insts = random_suite(seed=20240601, count=SIMPLE_COUNT, n_max=6, k_max=6, kind="simple")
    t0 = time.perf_counter()
    solved = [Solved(inst) for inst in insts]
    oracle = [polymatroid_bound_oracle(inst)[0] for inst in insts]
    return solved, oracle, time.perf_counter() - t0


@pytest.fixture(scope="module")
def general_suite():
    insts = random_suite(seed=77, count=GENERAL_COUNT, n_max=6, k_max=5, kind="general", n_min=2)
    return [(inst, polymatroid_bound_oracle(inst)[0]) for inst in insts]


def _perms(rng, n, count):
    out = []
    for _ in range(count):
        pi = list(range(n))
        rng.shuffle(pi)
        out.append(tuple(pi))
    return out


def S(*vs):
    return mask_of("abcd".index(v) for v in vs)


# -- 1 ---------------------------------------------------------------------------------


@criterion(1, "running example: every bound is 3, an optimum with support {1,3,4} exists")
def test_c1_running_example(run4):
    value, sol = solve_flow_lp(run4)
    assert value == 3
    assert polymatroid_bound_oracle(run4)[0] == 3
    assert normal_bound_oracle(run4)[0] == 3
    assert modular_bound(run4)[0] == 3
    doc = generate_proof(run4, sol, decompose_flows(sol, build_aux_graph(run4)))
    verdict = verify_proof(run4, doc.delta, doc.steps)
    assert verdict.accepted and verdict.bound == 3

    value2, sol2 = solve_flow_lp(run4, zero=[1])
    assert value2 == 3
    assert {i + 1 for i, d in enumerate(sol2.delta) if d} == {1, 3, 4}


# -- 2 ---------------------------------------------------------------------------------


@criterion(2, "flow LP equals the polymatroid oracle on 1000 simple instances, under 60 s")
def test_c2_flow_equals_oracle(simple_suite):
    solved, oracle, seconds = simple_suite
    assert len(solved) >= 1000
    mismatches = [(s.inst.to_json(), s.value, o) for s, o in zip(solved, oracle) if s.value != o]
    assert not mismatches, mismatches[:3]
    assert any(o == INF for o in oracle) and any(o != INF for o in oracle)
    assert seconds < 60, f"suite took {seconds:.1f} s"


# -- 3 ---------------------------------------------------------------------------------


@criterion(3, "generated proofs verify, certify the LP optimum, fit 16(k+n)kn^2; golden sequence verifies")
def test_c3_proofs(simple_suite):
    solved, _, _ = simple_suite
    checked = 0
    for s in solved:
        if s.sol is None:
            continue
        doc = generate_proof(s.inst, s.sol, s.paths)
        verdict = verify_proof(s.inst, doc.delta, doc.steps)
        assert verdict.accepted, (s.inst.to_json(), verdict.reason)
        assert verdict.bound == s.value
        assert len(doc.steps) <= length_cap(s.inst.n, s.inst.k)
        checked += 1
    assert checked >= 300


@criterion(3, "generated proofs verify, certify the LP optimum, fit 16(k+n)kn^2; golden sequence verifies")
def test_c3_golden(run4):
    doc = parse_proof((DATA / "run4_paper.proof").read_text(), run4)
    assert len(doc.steps) == 12
    verdict = verify_proof(run4, doc.delta, doc.steps)
    assert verdict.accepted and verdict.bound == 3


# -- 4 ---------------------------------------------------------------------------------


@criterion(4, "lift is feasible on the suite with the loop invariant asserted; hand-built witness verifies")
def test_c4_lift(simple_suite):
    solved, _, _ = simple_suite
    rng = random.Random(4)
    for s in solved:
        if s.sol is None:
            continue
        pi = _perms(rng, s.inst.n, 1)[0]
        w = lift(s.inst, s.sol, s.paths, pi=pi, check=True)
        verdict = verify_dual_witness(s.inst, w)
        assert verdict.accepted, (s.inst.to_json(), pi, verdict.violations)
        assert verdict.objective == s.value


@criterion(4, "lift is feasible on the suite with the loop invariant asserted; hand-built witness verifies")
def test_c4_hand_witness(run4):
    one = Fraction(1)
    w = DualWitness(
        (one, Fraction(0), one, one),
        {(S("a", "b"), S("a", "c")): one, (S("a", "b", "c"), S("a", "d")): one},
        {(0, S("a")): one},
    )
    verdict = verify_dual_witness(run4, w)
    assert verdict.accepted, verdict.violations
    assert verdict.objective == 3


# -- 5 ---------------------------------------------------------------------------------


@criterion(5, "normal bound equals the polymatroid bound on every simple instance")
def test_c5_normal_equals_polymatroid(simple_suite):
    solved, oracle, _ = simple_suite
    for s, o in zip(solved, oracle):
        assert normal_bound_oracle(s.inst)[0] == o, s.inst.to_json()


# -- 6 ---------------------------------------------------------------------------------


@criterion(6, "modular <= normal <= polymatroid <= chain(pi) for 5 orders per instance")
def test_c6_hierarchy(simple_suite, general_suite):
    solved, oracle, _ = simple_suite
    pairs = [(s.inst, o) for s, o in zip(solved, oracle)] + list(general_suite)
    rng = random.Random(6)
    for inst, poly in pairs:
        m = modular_bound(inst)[0]
        nb = normal_bound_oracle(inst)[0]
        assert m <= nb <= poly, inst.to_json()
        for pi in _perms(rng, inst.n, PERMS_PER_INSTANCE):
            assert poly <= chain_bound_oracle(inst, pi), (inst.to_json(), pi)


# -- 7 ---------------------------------------------------------------------------------


@criterion(7, "oracle <= flow_bound(pi) <= chain(pi); exact on simple/acyclic; GAP2 gap")
def test_c7a_sandwich(general_suite):
    rng = random.Random(7)
    assert len(general_suite) >= 200
    strict = 0
    for inst, poly in general_suite:
        for pi in _perms(rng, inst.n, PERMS_PER_INSTANCE):
            fb = flow_bound(inst, pi)
            ch = chain_bound_oracle(inst, pi)
            assert poly <= fb <= ch, (inst.to_json(), pi, poly, fb, ch)
            strict += fb < ch
    assert strict > 0  # the comparison is not vacuous


@criterion(7, "oracle <= flow_bound(pi) <= chain(pi); exact on simple/acyclic; GAP2 gap")
def test_c7b_exact_on_simple_and_acyclic(simple_suite, general_suite):
    solved, oracle, _ = simple_suite
    pairs = [(s.inst, o) for s, o in zip(solved, oracle)] + list(general_suite)
    acyclic_general = 0
    for inst, poly in pairs:
        cl = classify(inst)
        if not (cl.is_simple or cl.is_acyclic):
            continue
        acyclic_general += not cl.is_simple
        pi, _ = suggest_permutation(inst)
        assert flow_bound(inst, pi) == poly, inst.to_json()
    assert acyclic_general >= 20


@criterion(7, "oracle <= flow_bound(pi) <= chain(pi); exact on simple/acyclic; GAP2 gap")
def test_c7c_gap(gap2):
    assert chain_bound_oracle(gap2, (0, 1)) == INF
    assert flow_bound(gap2, (0, 1)) == 2


# -- 8 ---------------------------------------------------------------------------------


def _reduction_cases(reducer, seed, n_max, cap=10):
    """Instances the reducer actually rewrites; identities would test nothing."""
    rng = random.Random(seed)
    out = []
    while len(out) < REDUCTION_COUNT:
        inst = random_instance(rng, rng.randint(1, n_max), rng.randint(1, 4), "general")
        trace = reducer(inst)
        if trace.reduced != inst and trace.reduced.n <= cap:
            out.append(trace)
    return out


@pytest.mark.parametrize(
    "reducer, n_max",
    [(reduce_acyclic_plus_simple, 4), (reduce_two_three, 5), (reduce_simple_plus_fd, 5)],
    ids=["acyclic-plus-simple", "two-three", "simple-plus-fd"],
)
@criterion(8, "each reduction preserves the oracle bound on 100 instances and meets its shape")
def test_c8_reductions(reducer, n_max):
    traces = _reduction_cases(reducer, seed=8, n_max=n_max)
    for tr in traces:
        assert not postcondition_violations(tr), (tr.original.to_json(), postcondition_violations(tr))
        a = polymatroid_bound_oracle(tr.original)[0]
        b = polymatroid_bound_oracle(tr.reduced)[0]
        assert a == b, (tr.original.to_json(), a, b)


# -- 9 ---------------------------------------------------------------------------------


@criterion(9, "cardinality-only instances: oracle equals the fractional edge cover optimum")
def test_c9_agm():
    insts = random_suite(seed=9, count=CARDINALITY_COUNT, n_max=5, k_max=5, kind="cardinality")
    finite = 0
    for inst in insts:
        want = fractional_edge_cover(inst.n, [members(dc.Y) for dc in inst.constraints], [dc.c for dc in inst.constraints])
        got = polymatroid_bound_oracle(inst)[0]
        assert got == (INF if want is None else want), inst.to_json()
        finite += want is not None
    assert finite >= 30


# -- 10 --------------------------------------------------------------------------------


def _finite_positive(solved, limit=150):
    return [s for s in solved if s.sol is not None and s.value > 0][:limit]


@criterion(10, "tampered proofs, negative witnesses and under-funded delta are all caught")
def test_c10_tampered_proofs(simple_suite):
    solved, oracle, _ = simple_suite
    rng = random.Random(10)
    tampered = 0
    for s in _finite_positive(solved):
        inst = s.inst
        doc = generate_proof(inst, s.sol, s.paths)
        steps = list(doc.steps)
        mass = sum(doc.delta, Fraction(0))

        # under-funded header: the steps would certify less than the optimum
        assert not verify_proof(inst, tuple(d / 2 for d in doc.delta), steps).accepted
        if not steps:
            continue  # one constraint already bounds the target
        tampered += 1

        # the first step consumes a term of the initial bag, which holds at most Σδ
        inflated = [steps[0].with_weight(steps[0].w + mass + 1)] + steps[1:]
        verdict = verify_proof(inst, doc.delta, inflated)
        assert not verdict.accepted and verdict.step == 1

        # broken subset relation at a random position
        i = rng.randrange(len(steps))
        top = inst.universe
        broken = ProofStep("decompose", steps[i].w, X=top, Z=0, Y=top)
        verdict = verify_proof(inst, doc.delta, steps[:i] + [broken] + steps[i + 1 :])
        assert not verdict.accepted and verdict.step == i + 1

        # swapped kinds: whatever is accepted must still be sound
        for j, st_ in enumerate(steps):
            if st_.kind in ("compose", "decompose") and st_.Z not in (st_.X, st_.Y):
                other = "decompose" if st_.kind == "compose" else "compose"
                swapped = steps[:j] + [ProofStep(other, st_.w, X=st_.X, Z=st_.Z, Y=st_.Y)] + steps[j + 1 :]
                verdict = verify_proof(inst, doc.delta, swapped)
                assert not verdict.accepted or verdict.bound >= s.value
                break
    assert tampered >= 100


@criterion(10, "tampered proofs, negative witnesses and under-funded delta are all caught")
def test_c10_golden_tampering(run4):
    doc = parse_proof((DATA / "run4_paper.proof").read_text(), run4)
    for i, st_ in enumerate(doc.steps):
        inflated = list(doc.steps)
        inflated[i] = st_.with_weight(st_.w * 2)
        assert not verify_proof(run4, doc.delta, inflated).accepted
        if st_.kind in ("compose", "decompose") and st_.Z not in (st_.X, st_.Y):
            other = "decompose" if st_.kind == "compose" else "compose"
            swapped = list(doc.steps)
            swapped[i] = ProofStep(other, st_.w, X=st_.X, Z=st_.Z, Y=st_.Y)
            assert not verify_proof(run4, doc.delta, swapped).accepted


@criterion(10, "tampered proofs, negative witnesses and under-funded delta are all caught")
def test_c10_negative_mu(simple_suite):
    solved, _, _ = simple_suite
    for s in _finite_positive(solved):
        w = lift(s.inst, s.sol, s.paths)
        if w.mu:
            key, v = next(iter(w.mu.items()))
            w.mu[key] = -v
        else:
            w.mu[(0, 1)] = Fraction(-1)
        verdict = verify_dual_witness(s.inst, w)
        assert not verdict.accepted
        assert any("< 0" in msg for msg in verdict.violations)


@criterion(10, "tampered proofs, negative witnesses and under-funded delta are all caught")
def test_c10_min_cut(simple_suite):
    solved, _, _ = simple_suite
    for s in _finite_positive(solved):
        inst = s.inst
        assert all(v.feasible for v in min_cut_certificate(inst, s.sol.delta))
        scaled = [d * Fraction(9, 10) for d in s.sol.delta]
        bad = [v for v in min_cut_certificate(inst, scaled) if not v.feasible]
        assert bad, inst.to_json()
        for v in bad:
            row = sum(
                (d for dc, d in zip(inst.constraints, scaled) if dc.X & ~v.cut == 0 and dc.Y & ~v.cut),
                Fraction(0),
            )
            assert row == v.row_sum < 1
            assert not v.cut >> v.sink & 1
