"""Passive, presentation and sketch-inversion attacks on the pairing.

An attack succeeds only if the complete protocol verifies on both sides,
which requires the attacker's key to reconcile to the victim's exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from ..errors import (AlignmentError, DegenerateModelError, EstimationError, ExtractionError,
                      ParameterError, SolverError)
from ..ipi import extract_ipis
from ..protocol.pipeline import PipelineParams, derive_key, exchange
from ..quantizer import BitKey
from ..reconcile.matrix import make_matrix, project
from ..reconcile.solver import solve_l1
from ..signalgen import HeartModel
from .scenarios import BodyScenario, derive_seed, parallel_map

__all__ = [
    "AttackKind",
    "AttackReport",
    "agreement_rate",
    "simulate_passive_attack",
    "simulate_presentation_attack",
    "sketch_inversion_errors",
]

_Z95 = 1.959963984540054
_PIPELINE_ERRORS = (ExtractionError, AlignmentError, EstimationError, DegenerateModelError)


class AttackKind(str, Enum):
    PASSIVE = "passive"
    PRESENTATION = "presentation"


def agreement_rate(a: BitKey, b: BitKey) -> float:
    """Fraction of positions where two equal-length keys agree."""
    if len(a) != len(b):
        raise ParameterError("keys differ in length")
    return float(np.mean(a.bits == b.bits))


@dataclass(frozen=True)
class AttackReport:
    kind: AttackKind
    agreement_rates: np.ndarray
    success_count: int
    trials: int
    excluded: bool = False
    skipped: int = 0

    @property
    def mean_agreement(self) -> float:
        return float(self.agreement_rates.mean()) if self.agreement_rates.size else math.nan

    @property
    def max_agreement(self) -> float:
        return float(self.agreement_rates.max()) if self.agreement_rates.size else math.nan

    def confidence_interval(self):
        """Normal-approximation 95% interval for the mean agreement."""
        k = self.agreement_rates.size
        if k < 2:
            return (math.nan, math.nan)
        half = _Z95 * self.agreement_rates.std(ddof=1) / math.sqrt(k)
        return (self.mean_agreement - half, self.mean_agreement + half)

    def to_json(self) -> dict:
        lo, hi = self.confidence_interval()
        return {
            "kind": self.kind.value,
            "trials": self.trials,
            "success_count": self.success_count,
            "excluded": self.excluded,
            "skipped": self.skipped,
            "mean_agreement": self.mean_agreement,
            "max_agreement": self.max_agreement,
            "ci95": [lo, hi],
        }


def _attack(key_victim, key_attacker, params, matrix_seed):
    out_a, out_b = exchange(key_victim, key_attacker, replace(params, matrix_seed=matrix_seed))
    return agreement_rate(key_victim, key_attacker), out_a.verified and out_b.verified


def _report(kind, rows, trials):
    done = [r for r in rows if r is not None]
    rates = np.array([r[0] for r in done], dtype=float)
    return AttackReport(kind, rates, int(sum(r[1] for r in done)), trials,
                        skipped=trials - len(done))


def simulate_passive_attack(users, trials=None, params: PipelineParams = PipelineParams(),
                            scenario: BodyScenario = BodyScenario(), seed=0,
                            threads=1) -> AttackReport:
    """Another person's sensor, worn at the victim's location, tries to pair.

    Trials cycle through every ordered (victim, attacker) pair of
    ``users``; each pass uses fresh recordings. ``trials`` defaults to one
    pass.
    """
    users = list(users)
    if len(set(users)) < 2:
        raise ParameterError("need at least two distinct heart models")
    pairs = [(i, j) for i, j in itertools.permutations(range(len(users)), 2)
             if users[i] != users[j]]
    trials = len(pairs) if trials is None else int(trials)

    def one(t):
        (i, j), rnd = pairs[t % len(pairs)], t // len(pairs)
        session = derive_seed(seed, rnd)
        try:
            victim = derive_key(extract_ipis(scenario.record(users[i], session)[0]), params)
            attacker = derive_key(extract_ipis(scenario.record(users[j], session)[0]), params)
        except _PIPELINE_ERRORS:
            return None
        return _attack(victim, attacker, params, derive_seed(seed, t, 2))

    return _report(AttackKind.PASSIVE, parallel_map(one, range(trials), threads), trials)


def simulate_presentation_attack(model: HeartModel, trials=200,
                                 params: PipelineParams = PipelineParams(),
                                 scenario: BodyScenario = BodyScenario(), seed=0,
                                 threads=1) -> AttackReport:
    """Keys from the first half of a recording attack a session on the second half.

    A zero-variance heart carries no entropy; it is reported as
    ``excluded`` without running any trial.
    """
    if model.ipi_std == 0:
        return AttackReport(AttackKind.PRESENTATION, np.empty(0), 0, 0, excluded=True)

    def one(t):
        trace = scenario.record(model, derive_seed(seed, t), n_ipis=2 * scenario.n_ipis)[0]
        try:
            ipis = extract_ipis(trace)
            half = len(ipis) // 2
            replayed = derive_key(ipis.slice(0, half), params)
            live = derive_key(ipis.slice(half), params)
        except _PIPELINE_ERRORS:
            return None
        return _attack(live, replayed, params, derive_seed(seed, t, 2))

    return _report(AttackKind.PRESENTATION, parallel_map(one, range(trials), threads), trials)


def sketch_inversion_errors(trials=200, n=128, m=50, seed=0, balance=(0.45, 0.55)):
    """Bit errors when a key is rebuilt from its sketch alone by ℓ1 minimisation.

    Keys are uniform draws whose ones-fraction falls within ``balance``.
    The estimate is ``x̂ = 1[x̃ > 0.5]`` for the minimum-ℓ1 ``x̃`` with
    ``Φx̃ = y``; a solve that does not converge counts as the all-zero guess.
    """
    errors = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), t]))
        while True:
            bits = rng.integers(0, 2, n, dtype=np.uint8)
            if balance[0] <= bits.mean() <= balance[1]:
                break
        matrix = make_matrix(int(rng.integers(0, 2 ** 63)), m, n)
        y = project(BitKey(bits, 1, (1, 1)), matrix).values
        try:
            x_hat = solve_l1(y, matrix)
        except SolverError:
            x_hat = np.zeros(n)
        errors[t] = int(np.count_nonzero((x_hat > 0.5).astype(np.uint8) != bits))
    return errors
