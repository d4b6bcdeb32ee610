"""Evaluation harness: bit tables, sparsity, benchmarks, attacks, randomness tests."""

from .attacks import (AttackKind, AttackReport, agreement_rate, simulate_passive_attack,
                      simulate_presentation_attack, sketch_inversion_errors)
from .benchmark import BenchmarkResult, Method, TrialOutcome, benchmark_reconciliation
from .nist import PASS_THRESHOLD, randomness_suite
from .scenarios import BodyScenario, derive_seed, parallel_map
from .tables import (BitStats, SparsityReport, binary_entropy, bit_table, quantized_pairs,
                     sparsity_histogram)

__all__ = [
    "AttackKind",
    "AttackReport",
    "agreement_rate",
    "simulate_passive_attack",
    "simulate_presentation_attack",
    "sketch_inversion_errors",
    "BenchmarkResult",
    "Method",
    "TrialOutcome",
    "benchmark_reconciliation",
    "PASS_THRESHOLD",
    "randomness_suite",
    "BodyScenario",
    "derive_seed",
    "parallel_map",
    "BitStats",
    "SparsityReport",
    "binary_entropy",
    "bit_table",
    "quantized_pairs",
    "sparsity_histogram",
]
