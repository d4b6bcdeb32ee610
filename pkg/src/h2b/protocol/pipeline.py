"""Trace-to-final-key pipeline for two devices on one body."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from ..errors import AlignmentError, EstimationError, ExtractionError, ParameterError
from ..ipi import DEFAULT_MAX_OFFSET_MS, SmootherConfig, align, extract_ipis
from ..quantizer import DEFAULT_BAND, DEFAULT_LEVELS, BitKey, build_key, fit_model
from ..reconcile.mismatch import SecurityMargin, Verdict, security_margin, sparsity
from ..reconcile.solver import DEFAULT_EPSILON
from ..types import IpiSequence, PiezoTrace
from .session import KEY_VALIDITY_S, Outcome, PairingSession, Role

__all__ = [
    "PipelineParams",
    "PairingResult",
    "derive_key",
    "paired_keys",
    "exchange",
    "pair_end_to_end",
    "margin_summary",
]


@dataclass(frozen=True)
class PipelineParams:
    """Knobs shared by both devices.

    The quantizer of each device is fitted on all of its own aligned
    intervals; the key is cut from the first ``ceil(n_bits / bits_per_ipi)``
    of them.
    """

    n_bits: int = 128
    m: int = 50
    levels: int = DEFAULT_LEVELS
    band: tuple[int, int] = DEFAULT_BAND
    matrix_seed: int = 0
    epsilon: float = DEFAULT_EPSILON
    smoother: SmootherConfig | None = None
    max_offset: float = DEFAULT_MAX_OFFSET_MS
    validity: float = KEY_VALIDITY_S

    def __post_init__(self):
        object.__setattr__(self, "band", tuple(int(b) for b in self.band))
        if not 0 < self.m < self.n_bits:
            raise ParameterError("need 0 < m < n_bits")
        if self.levels < 2 or self.levels & (self.levels - 1):
            raise ParameterError("levels must be a power of two >= 2")
        width = self.levels.bit_length() - 1
        if not 1 <= self.band[0] <= self.band[1] <= width:
            raise ParameterError(f"band {self.band} outside bits 1..{width}")

    @property
    def bits_per_ipi(self) -> int:
        return self.band[1] - self.band[0] + 1

    @property
    def key_ipis(self) -> int:
        return math.ceil(self.n_bits / self.bits_per_ipi)


def derive_key(ipis: IpiSequence, params: PipelineParams = PipelineParams()) -> BitKey:
    """Fit the quantizer on ``ipis`` and cut an ``n_bits`` key from its head."""
    if len(ipis) < params.key_ipis:
        raise ExtractionError(
            f"{len(ipis)} intervals, need {params.key_ipis} for a {params.n_bits}-bit key")
    model = fit_model(ipis, params.levels)
    key = build_key(ipis.slice(0, params.key_ipis), model, params.band)
    return key.take(params.n_bits)


def paired_keys(trace_a: PiezoTrace, trace_b: PiezoTrace,
                params: PipelineParams = PipelineParams()):
    """Raw keys of two synchronised devices, plus the aligned interval count."""
    ipis_a = extract_ipis(trace_a, params.smoother)
    ipis_b = extract_ipis(trace_b, params.smoother)
    ipis_a, ipis_b = align(ipis_a, ipis_b, params.max_offset)
    return derive_key(ipis_a, params), derive_key(ipis_b, params), len(ipis_a)


def exchange(key_a: BitKey, key_b: BitKey, params: PipelineParams = PipelineParams(),
             clock=time.time):
    """One in-process protocol run over wire bytes.

    Returns ``(initiator_outcome, responder_outcome)``.
    """
    common = dict(m=params.m, n=params.n_bits, epsilon=params.epsilon,
                  validity=params.validity, clock=clock)
    alice = PairingSession(Role.INITIATOR, params.matrix_seed, **common)
    bob = PairingSession(Role.RESPONDER, params.matrix_seed, **common)
    wire = alice.initiate(key_a).to_bytes()
    out_b = bob.respond(wire, key_b)
    out_a = alice.accept_notification(bob.confirm().to_bytes())
    return out_a, out_b


@dataclass
class PairingResult:
    verified: bool
    reason: str | None
    initiator: Outcome | None = None
    responder: Outcome | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def final_keys(self):
        if self.initiator is None or self.responder is None:
            return None, None
        return self.initiator.final_key, self.responder.final_key


def pair_end_to_end(trace_a: PiezoTrace, trace_b: PiezoTrace,
                    params: PipelineParams = PipelineParams(), clock=time.time) -> PairingResult:
    """Extract, quantize and reconcile on both sides independently.

    ``diagnostics`` holds ``aligned_ipis``, ``mismatch_bits``,
    ``mismatch_rate``, ``s_key``, ``margin`` and ``verdict``. The margin
    uses ``n_bits / 2`` for the attacker sparsity, its expectation for an
    independent key.
    """
    try:
        key_a, key_b, n_aligned = paired_keys(trace_a, trace_b, params)
    except (ExtractionError, AlignmentError, EstimationError) as exc:
        return PairingResult(False, f"pipeline: {exc}")
    s_mismatch = sparsity(key_a.bits ^ key_b.bits)
    margin, verdict = security_margin(s_mismatch, int(key_a.bits.sum()), params.n_bits // 2,
                                      params.n_bits, params.m)
    diagnostics = {
        "aligned_ipis": n_aligned,
        "mismatch_bits": s_mismatch,
        "mismatch_rate": s_mismatch / params.n_bits,
        "s_key": margin.s_key,
        "margin": margin,
        "verdict": verdict,
    }
    out_a, out_b = exchange(key_a, key_b, params, clock)
    verified = out_a.verified and out_b.verified
    reason = None if verified else (out_b.reason or out_a.reason)
    return PairingResult(verified, reason, out_a, out_b, diagnostics)


def margin_summary(margin: SecurityMargin, verdict: Verdict) -> dict:
    return {
        "p_threshold": margin.p_threshold,
        "q_threshold": margin.q_threshold,
        "m": margin.m,
        "effective": verdict.effective,
        "secure": verdict.secure,
    }
