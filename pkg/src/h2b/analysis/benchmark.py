"""Monte-Carlo comparison of sketch-based and RS(15, 3) reconciliation."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import H2BError, ParameterError
from ..quantizer import BitKey
from ..reconcile.matrix import make_matrix, project
from ..reconcile.mismatch import correct, recover_mismatch
from ..reconcile.reedsolomon import rs_reconcile_apply, rs_reconcile_offset
from ..reconcile.solver import DEFAULT_EPSILON
from .scenarios import parallel_map

__all__ = [
    "Method",
    "TrialOutcome",
    "BenchmarkResult",
    "benchmark_reconciliation",
    "reconcile_once",
    "flipped_pair",
]


class Method(str, Enum):
    CS = "cs"
    RS = "rs"


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    flips: int
    success: bool


@dataclass(frozen=True)
class BenchmarkResult:
    method: Method
    n: int
    m: int
    mismatch_rate: float
    outcomes: tuple

    @property
    def trials(self) -> int:
        return len(self.outcomes)

    @property
    def successes(self) -> int:
        return sum(o.success for o in self.outcomes)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    def to_csv(self) -> str:
        lines = ["trial,method,n,m,flips,success"]
        lines += [f"{o.trial},{self.method.value},{self.n},{self.m},{o.flips},{int(o.success)}"
                  for o in self.outcomes]
        return "\n".join(lines) + "\n"


def flipped_pair(rng, n: int, flips: int):
    """A uniform random key and a copy with ``flips`` distinct positions inverted."""
    a = rng.integers(0, 2, n, dtype=np.uint8)
    b = a.copy()
    b[rng.choice(n, size=flips, replace=False)] ^= 1
    return BitKey(a, 1, (1, 1)), BitKey(b, 1, (1, 1))


def reconcile_once(method, key_ref: BitKey, key_other: BitKey, m: int, rng,
                   epsilon=DEFAULT_EPSILON) -> bool:
    """Whether ``key_other``'s holder ends up with exactly ``key_ref``.

    The holder of ``key_ref`` publishes (sketch or code offset); any
    decoder or solver failure counts as a failed trial.
    """
    method = Method(method)
    try:
        if method is Method.CS:
            matrix = make_matrix(int(rng.integers(0, 2 ** 63)), m, len(key_ref))
            delta = recover_mismatch(project(key_ref, matrix), key_other, matrix, epsilon)
            recovered = correct(key_other, delta)
        else:
            offset, check = rs_reconcile_offset(key_ref, rng)
            recovered = rs_reconcile_apply(offset, key_other)
    except H2BError:
        return False
    return bool(np.array_equal(recovered.bits, key_ref.bits))


def benchmark_reconciliation(method, n=128, m=50, mismatch_rate=0.1, trials=500, seed=0,
                             threads=1, epsilon=DEFAULT_EPSILON) -> BenchmarkResult:
    """Success fraction when ``round(mismatch_rate · n)`` random bits differ.

    Trial ``t`` draws everything from ``SeedSequence([seed, t])``, so the
    result depends on ``seed`` and ``trials`` only, never on ``threads``.
    ``m`` is ignored by the RS method.
    """
    method = Method(method)
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    if not 0 <= mismatch_rate <= 1:
        raise ParameterError("mismatch_rate must lie in [0, 1]")
    flips = int(round(mismatch_rate * n))

    def one(t):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), t]))
        key_a, key_b = flipped_pair(rng, n, flips)
        return TrialOutcome(t, flips, reconcile_once(method, key_a, key_b, m, rng, epsilon))

    outcomes = tuple(parallel_map(one, range(trials), threads))
    return BenchmarkResult(method, n, m, float(mismatch_rate), outcomes)
