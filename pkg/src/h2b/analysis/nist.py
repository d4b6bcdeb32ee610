"""Five tests from the NIST SP 800-22 randomness battery.

Each test takes a 0/1 vector and returns a p-value; a sequence passes at
``p >= 0.01``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, gammaincc, ndtr

from ..errors import ParameterError

__all__ = [
    "monobit",
    "block_frequency",
    "runs",
    "cumulative_sums",
    "approximate_entropy",
    "randomness_suite",
    "PASS_THRESHOLD",
    "MIN_BITS",
]

PASS_THRESHOLD = 0.01
MIN_BITS = 1000


def _bits(bits):
    b = np.asarray(bits, dtype=np.int64).reshape(-1)
    if b.size == 0 or np.any((b != 0) & (b != 1)):
        raise ParameterError("input must be a non-empty 0/1 vector")
    return b


def monobit(bits) -> float:
    b = _bits(bits)
    s = abs(int((2 * b - 1).sum())) / math.sqrt(b.size)
    return float(erfc(s / math.sqrt(2)))


def block_frequency(bits, block_size=128) -> float:
    b = _bits(bits)
    n_blocks = b.size // block_size
    if n_blocks < 1:
        raise ParameterError("sequence shorter than one block")
    pi = b[:n_blocks * block_size].reshape(n_blocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * float(((pi - 0.5) ** 2).sum())
    return float(gammaincc(n_blocks / 2.0, chi2 / 2.0))


def runs(bits) -> float:
    b = _bits(bits)
    n = b.size
    pi = b.mean()
    # Frequency prerequisite; the runs statistic is meaningless otherwise.
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return 0.0
    v_obs = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    return float(erfc(num / (2.0 * math.sqrt(2.0 * n) * pi * (1 - pi))))


def cumulative_sums(bits, reverse=False) -> float:
    b = _bits(bits)
    n = b.size
    x = 2 * b - 1
    if reverse:
        x = x[::-1]
    z = int(np.abs(np.cumsum(x)).max())
    root_n = math.sqrt(n)
    total = 1.0
    for k in range(int((-n / z + 1) / 4), int(math.floor((n / z - 1) / 4)) + 1):
        total -= ndtr((4 * k + 1) * z / root_n) - ndtr((4 * k - 1) * z / root_n)
    for k in range(int((-n / z - 3) / 4), int(math.floor((n / z - 1) / 4)) + 1):
        total += ndtr((4 * k + 3) * z / root_n) - ndtr((4 * k + 1) * z / root_n)
    return float(min(max(total, 0.0), 1.0))


def _phi(b, m):
    if m == 0:
        return 0.0
    n = b.size
    wrapped = np.concatenate([b, b[:m - 1]])
    codes = np.zeros(n, dtype=np.int64)
    for j in range(m):
        codes = (codes << 1) | wrapped[j:j + n]
    counts = np.bincount(codes, minlength=1 << m)
    c = counts[counts > 0] / n
    return float((c * np.log(c)).sum())


def approximate_entropy(bits, block_length=None) -> float:
    """``block_length`` defaults to ``floor(log2 n) - 6``, at least 2."""
    b = _bits(bits)
    n = b.size
    m = block_length if block_length is not None else max(int(math.log2(n)) - 6, 2)
    ap_en = _phi(b, m) - _phi(b, m + 1)
    chi2 = 2.0 * n * (math.log(2) - ap_en)
    return float(gammaincc(2.0 ** (m - 1), chi2 / 2.0))


def randomness_suite(bits) -> dict:
    """p-values of all five tests; needs at least :data:`MIN_BITS` bits."""
    b = _bits(bits)
    if b.size < MIN_BITS:
        raise ParameterError(f"need at least {MIN_BITS} bits, got {b.size}")
    return {
        "monobit": monobit(b),
        "block_frequency": block_frequency(b),
        "runs": runs(b),
        "cumulative_sums": min(cumulative_sums(b), cumulative_sums(b, reverse=True)),
        "approximate_entropy": approximate_entropy(b),
    }
