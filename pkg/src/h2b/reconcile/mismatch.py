"""Mismatch recovery from sketch differences and the P/Q parameter margins."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import InconsistentSketchError, ParameterError, ProtocolError
from ..quantizer import BitKey
from .matrix import CompressedKey, SensingMatrix, project
from .solver import DEFAULT_EPSILON, solve_lattice

__all__ = [
    "recover_mismatch",
    "correct",
    "sparsity",
    "SecurityMargin",
    "Verdict",
    "security_margin",
    "effective_threshold",
    "LOG_BASE",
]

# Base of the logarithm in S·log(N/S).
LOG_BASE = 2.0


def sparsity(v) -> int:
    return int(np.count_nonzero(np.asarray(v)))


def recover_mismatch(y_remote: CompressedKey, key_local: BitKey, matrix: SensingMatrix,
                     epsilon=DEFAULT_EPSILON) -> np.ndarray:
    """Positions where the local key differs from the remote one.

    ``Δy = y_remote − Φ x_local`` equals ``Φ d`` for the signed mismatch
    ``d = x_remote − x_local ∈ {−1, 0, 1}^N``. ``d`` is recovered by
    box-constrained, reweighted ℓ1 minimisation and ``Δx[i] = |d̂[i]| > 0.5``.

    Raises
    ------
    ProtocolError
        Sketch and key/matrix dimensions or seeds disagree.
    InconsistentSketchError
        ``Δy`` cannot come from any ±1/0 mismatch, so the remote sketch
        was not computed from a genuine key.
    SolverError
        Propagated from :func:`solve_lattice`.
    """
    if y_remote.matrix_seed != matrix.seed:
        raise ProtocolError("sketch was made with a different matrix seed")
    if y_remote.m != matrix.rows or y_remote.n_bits != matrix.cols:
        raise ProtocolError("sketch dimensions do not match the matrix")
    delta = y_remote.values - project(key_local, matrix).values
    if not delta.any():
        return np.zeros(matrix.cols, dtype=np.uint8)
    # Every row of Φd has the parity of |supp d| since all entries are odd.
    if np.unique(delta & 1).size > 1 or np.abs(delta).max() > matrix.cols:
        raise InconsistentSketchError("sketch difference is inconsistent with any bit mismatch")
    d_hat = solve_lattice(delta, matrix, epsilon)
    return (np.abs(d_hat) > 0.5).astype(np.uint8)


def correct(key_local: BitKey, delta_x) -> BitKey:
    """``x_local ⊕ Δx``."""
    bits = key_local.bits ^ np.asarray(delta_x, dtype=np.uint8)
    return BitKey(bits, key_local.bits_per_ipi, key_local.kept_band)


def effective_threshold(s: int, n: int) -> float:
    """``P = S·log(N/S)``, zero for ``S = 0``."""
    if s <= 0:
        return 0.0
    return s * math.log(n / s, LOG_BASE)


@dataclass(frozen=True)
class SecurityMargin:
    p_threshold: float
    q_threshold: float
    m: int
    s_mismatch: int
    s_key: int
    s_attacker: int


class Verdict(NamedTuple):
    effective: bool
    secure: bool

    @property
    def ok(self) -> bool:
        return self.effective and self.secure


def security_margin(s_mismatch: int, s_key: int, s_attacker: int, n: int, m: int):
    """Return ``(SecurityMargin, Verdict)`` for sketch length ``m``.

    Effective iff ``m > P``; secure iff ``m < Q = min(S_key, S_attacker)``.
    """
    if not 0 <= s_mismatch <= n:
        raise ParameterError("s_mismatch must lie in [0, n]")
    if s_key < 0 or s_attacker < 0:
        raise ParameterError("sparsities must be non-negative")
    p = effective_threshold(s_mismatch, n)
    q = min(s_key, s_attacker)
    margin = SecurityMargin(p, float(q), m, s_mismatch, s_key, s_attacker)
    return margin, Verdict(m > p, m < q)
