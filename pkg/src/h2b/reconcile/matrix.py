"""Seeded ±1 sensing matrices and integer key sketches."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import ParameterError, ProtocolError
from ..quantizer import BitKey

__all__ = ["SensingMatrix", "CompressedKey", "make_matrix", "project"]


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    seed: int
    entries: np.ndarray

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @cached_property
    def dense(self) -> np.ndarray:
        """Entries as float64 for the solver."""
        return self.entries.astype(float)

    @cached_property
    def svd(self):
        """Thin SVD ``(U, s, Vt)`` used for projections onto ``{d : Φd ≈ y}``."""
        return np.linalg.svd(self.dense, full_matrices=False)

    @cached_property
    def pseudo_inverse(self) -> np.ndarray:
        u, s, vt = self.svd
        return (vt.T / s) @ u.T


def make_matrix(seed: int, m: int, n: int) -> SensingMatrix:
    """Symmetric Bernoulli ``m × n`` matrix; both peers regenerate it from ``seed``."""
    if not 0 < m < n:
        raise ParameterError(f"need 0 < m < n, got m={m}, n={n}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    entries = (rng.integers(0, 2, size=(m, n), dtype=np.int8) * 2 - 1).astype(np.int8)
    entries.setflags(write=False)
    return SensingMatrix(int(seed), entries)


@dataclass(frozen=True, eq=False)
class CompressedKey:
    values: np.ndarray
    matrix_seed: int
    n_bits: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64).reshape(-1)
        if np.any(np.abs(values) > self.n_bits):
            raise ParameterError("sketch values must lie in [-N, N]")
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.size


def project(key: BitKey, matrix: SensingMatrix) -> CompressedKey:
    """Exact integer sketch ``y = Φ x`` of a 0/1 key."""
    if len(key) != matrix.cols:
        raise ProtocolError(f"key has {len(key)} bits, matrix expects {matrix.cols}")
    values = matrix.entries.astype(np.int64) @ key.bits.astype(np.int64)
    return CompressedKey(values, matrix.seed, matrix.cols)
