"""Per-bit entropy/mismatch tables and sparsity distributions."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import AlignmentError, EstimationError, ExtractionError, ParameterError
from ..ipi import align, extract_ipis
from ..protocol.pipeline import PipelineParams, derive_key, paired_keys
from ..quantizer import build_key, fit_model
from ..reconcile.mismatch import effective_threshold, sparsity
from ..signalgen import HeartModel
from .scenarios import BodyScenario, derive_seed, parallel_map

__all__ = [
    "BitStats",
    "binary_entropy",
    "bit_table",
    "quantized_pairs",
    "SparsityReport",
    "sparsity_histogram",
]

_PIPELINE_ERRORS = (ExtractionError, AlignmentError, EstimationError)


def binary_entropy(p):
    """``H(p)`` in bits, elementwise, with ``H(0) = H(1) = 0``."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return np.where((p <= 0) | (p >= 1), 0.0, h)


@dataclass(frozen=True)
class BitStats:
    """Index 0 is bit 1, the least significant bit of each Gray word."""

    per_bit_entropy: np.ndarray
    per_bit_mismatch: np.ndarray
    bit_count: int

    def rows(self):
        """``(bit, entropy, mismatch)`` from bit 1 upward."""
        return [(i + 1, float(h), float(e)) for i, (h, e)
                in enumerate(zip(self.per_bit_entropy, self.per_bit_mismatch))]

    def to_csv(self) -> str:
        lines = ["bit,entropy,mismatch"]
        lines += [f"{b},{h:.6f},{e:.6f}" for b, h, e in self.rows()]
        return "\n".join(lines) + "\n"


def bit_table(paired_keys, width: int) -> BitStats:
    """Entropy and mismatch of each of the ``width`` bits per interval.

    Entropy is the binary entropy of the ones-fraction pooled over both
    sides of every pair; mismatch is the fraction of intervals where the
    two sides disagree.
    """
    pairs = list(paired_keys)
    if not pairs:
        raise ParameterError("need at least one key pair")
    left, right = [], []
    for a, b in pairs:
        if a.bits_per_ipi != width or b.bits_per_ipi != width or len(a) != len(b):
            raise ParameterError("every key must carry the same width and length per pair")
        left.append(a.bits.reshape(-1, width))
        right.append(b.bits.reshape(-1, width))
    left, right = np.concatenate(left), np.concatenate(right)
    ones = np.concatenate([left, right]).mean(axis=0)
    mismatch = (left != right).mean(axis=0)
    # Columns are MSB first; flip so index 0 is bit 1.
    return BitStats(binary_entropy(ones)[::-1].copy(), mismatch[::-1].copy(), width)


def quantized_pairs(n_pairs: int, seed: int, scenario: BodyScenario = BodyScenario(),
                    levels=64, heart: HeartModel = HeartModel(), threads=1):
    """Full-width Gray keys of two synchronised sensors, one pair per session.

    Each device fits its own quantizer on its aligned intervals and keeps
    every bit; failed recordings are skipped.
    """
    width = levels.bit_length() - 1

    def one(t):
        traces = scenario.record(replace(heart, seed=derive_seed(seed, t)), t)
        try:
            a, b = align(extract_ipis(traces[0]), extract_ipis(traces[1]))
            return (build_key(a, fit_model(a, levels), (1, width)),
                    build_key(b, fit_model(b, levels), (1, width)))
        except _PIPELINE_ERRORS:
            return None

    return [p for p in parallel_map(one, range(n_pairs), threads) if p is not None]


@dataclass(frozen=True)
class SparsityReport:
    s_mismatch: np.ndarray
    s_key: np.ndarray
    s_attacker: np.ndarray
    p_threshold: np.ndarray
    q_threshold: np.ndarray
    m: int
    failed: int

    @property
    def trials(self) -> int:
        return self.s_mismatch.size

    @property
    def fraction_not_effective(self) -> float:
        """Share of trials with ``P >= M``."""
        return float(np.mean(self.p_threshold >= self.m))

    def to_csv(self) -> str:
        lines = ["trial,s_mismatch,s_key,s_attacker,p,q"]
        for i, row in enumerate(zip(self.s_mismatch, self.s_key, self.s_attacker,
                                    self.p_threshold, self.q_threshold)):
            lines.append(f"{i},{row[0]},{row[1]},{row[2]},{row[3]:.4f},{row[4]:.1f}")
        return "\n".join(lines) + "\n"


def sparsity_histogram(trials: int, n: int = 128, pipeline_params: PipelineParams = PipelineParams(),
                       seed: int = 0, scenario: BodyScenario = BodyScenario(),
                       heart: HeartModel = HeartModel(), threads=1) -> SparsityReport:
    """Per-trial ``S_ΔA,B``, ``S_Alice`` and ``S_ΔA,E`` with the derived P and Q.

    Alice and Bob wear two sensors of ``scenario``; Eve is another person
    recorded at Alice's location at the same time.
    """
    if trials < 100:
        raise ParameterError("sparsity_histogram needs at least 100 trials")
    params = replace(pipeline_params, n_bits=n)

    def one(t):
        victim = replace(heart, seed=derive_seed(seed, t, 0))
        eve = replace(heart, seed=derive_seed(seed, t, 1))
        try:
            key_a, key_b, _ = paired_keys(*scenario.record(victim, t)[:2], params)
            key_e = derive_key(extract_ipis(scenario.record(eve, t)[0]), params)
        except _PIPELINE_ERRORS:
            return None
        return (sparsity(key_a.bits ^ key_b.bits), int(key_a.bits.sum()),
                sparsity(key_a.bits ^ key_e.bits))

    rows = parallel_map(one, range(trials), threads)
    good = np.array([r for r in rows if r is not None], dtype=np.int64).reshape(-1, 3)
    s_ab, s_a, s_ae = good.T
    p = np.array([effective_threshold(int(s), n) for s in s_ab])
    q = np.minimum(s_a, s_ae).astype(float)
    return SparsityReport(s_ab, s_a, s_ae, p, q, params.m, trials - good.shape[0])
