"""Mismatch correction: ±1 sketches with ℓ1 recovery, and an RS(15, 3) baseline."""

from .matrix import CompressedKey, SensingMatrix, make_matrix, project
from .mismatch import (LOG_BASE, SecurityMargin, Verdict, correct, effective_threshold,
                       recover_mismatch, security_margin, sparsity)
from .reedsolomon import BLOCK_BITS, GF16, RS_15_3, RSCode, rs_reconcile_apply, rs_reconcile_offset
from .solver import DEFAULT_EPSILON, MAX_ITERATIONS, solve_l1, solve_lattice

__all__ = [
    "CompressedKey",
    "SensingMatrix",
    "make_matrix",
    "project",
    "LOG_BASE",
    "SecurityMargin",
    "Verdict",
    "correct",
    "effective_threshold",
    "recover_mismatch",
    "security_margin",
    "sparsity",
    "BLOCK_BITS",
    "GF16",
    "RS_15_3",
    "RSCode",
    "rs_reconcile_apply",
    "rs_reconcile_offset",
    "DEFAULT_EPSILON",
    "MAX_ITERATIONS",
    "solve_l1",
    "solve_lattice",
]
