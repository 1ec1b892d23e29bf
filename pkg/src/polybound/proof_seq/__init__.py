"""Proof sequences: generation from flows and independent verification."""
from .generate import ProofGenerationError, generate_proof, length_cap
from .terms import COMPOSE, DECOMPOSE, KINDS, MONOTONICITY, SUBMODULARITY, ProofDocument, ProofStep, Term
from .textio import ProofFormatError, format_proof, parse_proof
from .verify import ProofVerdict, verify_proof

__all__ = [
    "COMPOSE",
    "DECOMPOSE",
    "KINDS",
    "MONOTONICITY",
    "SUBMODULARITY",
    "ProofDocument",
    "ProofFormatError",
    "ProofGenerationError",
    "ProofStep",
    "ProofVerdict",
    "Term",
    "format_proof",
    "generate_proof",
    "length_cap",
    "parse_proof",
    "verify_proof",
]
