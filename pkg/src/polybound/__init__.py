"""Information-theoretic cardinality bounds for conjunctive queries.

The main entry points:

- :func:`solve_flow_lp` for the bound of a simple instance as a flow LP,
- :func:`generate_proof` / :func:`verify_proof` for proof sequences,
- :func:`lift` / :func:`verify_dual_witness` for dual witnesses,
- :mod:`polybound.oracle` for brute-force bounds on small universes,
- :func:`flow_bound` for general instances,
- :mod:`polybound.reductions` for shape-restricting rewrites.
"""
from .dual_lift import DualWitness, lift, verify_dual_witness
from .flow_bound import flow_bound, relax_for_flow, suggest_permutation
from .flow_engine import build_aux_graph, decompose_flows, min_cut_certificate, solve_flow_lp
from .model import (
    CapError,
    DegreeConstraint,
    Instance,
    InstanceError,
    PreconditionError,
    classify,
    make_instance,
)
from .oracle import (
    chain_bound_oracle,
    modular_bound,
    normal_bound_oracle,
    polymatroid_bound_oracle,
)
from .proof_seq import format_proof, generate_proof, parse_proof, verify_proof
from .rationals import INF, fmt_ext, parse_rational
from .reductions import reduce_acyclic_plus_simple, reduce_simple_plus_fd, reduce_two_three

__version__ = "0.1.0"
