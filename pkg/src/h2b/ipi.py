"""Heartbeat localisation: Savitzky-Golay smoothing, peak picking, alignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks, savgol_coeffs

from .errors import AlignmentError, ExtractionError, ParameterError
from .types import IpiSequence, PiezoTrace

__all__ = [
    "SmootherConfig",
    "sg_smooth",
    "detect_peaks",
    "extract_ipis",
    "align",
    "rmse_against_truth",
]

DEFAULT_MIN_SEPARATION_MS = 300.0
DEFAULT_PROMINENCE = 0.3
DEFAULT_MAX_OFFSET_MS = 200.0
_WINDOW_SECONDS = 31 / 120.0


@dataclass(frozen=True)
class SmootherConfig:
    window_length: int = 31
    poly_order: int = 9

    def __post_init__(self):
        if self.window_length % 2 != 1:
            raise ParameterError("window_length must be odd")
        if self.poly_order < 0 or self.window_length <= self.poly_order:
            raise ParameterError("window_length must exceed poly_order")

    @classmethod
    def for_rate(cls, rate, poly_order=9) -> "SmootherConfig":
        """The 31-sample/120 Hz window scaled to another sampling rate."""
        window = int(round(_WINDOW_SECONDS * rate))
        window += 1 - window % 2
        return cls(max(window, poly_order + 2 - poly_order % 2), poly_order)


def _smooth_array(x, window_length, poly_order):
    n = x.size
    half = window_length // 2
    out = np.empty(n)
    if n > 2 * half:
        coeffs = savgol_coeffs(window_length, poly_order, use="dot")
        out[half:n - half] = np.correlate(x, coeffs, mode="valid")
    # Edges: centred windows shrunk to fit inside the signal.
    for i in list(range(min(half, n))) + list(range(max(n - half, half), n)):
        h = min(half, i, n - 1 - i)
        order = min(poly_order, 2 * h)
        c = savgol_coeffs(2 * h + 1, order, use="dot")
        out[i] = c @ x[i - h:i + h + 1]
    return out


def sg_smooth(trace: PiezoTrace, cfg: SmootherConfig | None = None) -> PiezoTrace:
    """Zero-phase least-squares polynomial smoothing.

    Near the ends the window shrinks symmetrically (and the polynomial
    order with it), so the output has the same length as the input and
    polynomials of degree ``poly_order`` pass through unchanged.
    """
    cfg = cfg or SmootherConfig.for_rate(trace.sampling_rate)
    if cfg.window_length > trace.samples.size:
        raise ParameterError("smoothing window longer than trace")
    return trace.with_samples(_smooth_array(trace.samples, cfg.window_length, cfg.poly_order))


def _refine(y, k):
    """Sub-sample vertex of the parabola through samples k-1, k, k+1."""
    a, b, c = y[k - 1], y[k], y[k + 1]
    denom = a - 2 * b + c
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))


def detect_peaks(trace: PiezoTrace, min_separation=DEFAULT_MIN_SEPARATION_MS,
                 prominence_fraction=DEFAULT_PROMINENCE) -> np.ndarray:
    """Beat times (ms) of the prominent local maxima of ``trace``.

    Returns an empty array when nothing qualifies.
    """
    if min_separation <= 0:
        raise ParameterError("min_separation must be positive")
    y = trace.samples
    span = float(y.max() - y.min())
    if span == 0:
        return np.empty(0)
    distance = max(int(np.ceil(min_separation / trace.sample_period)), 1)
    idx, props = find_peaks(y, distance=distance, prominence=prominence_fraction * span)
    if idx.size == 0:
        return np.empty(0)
    times = np.array([(k + _refine(y, k)) * trace.sample_period for k in idx])
    heights = y[idx]
    # Sub-sample refinement can pull neighbours inside min_separation.
    keep = list(range(times.size))
    i = 0
    while i < len(keep) - 1:
        a, b = keep[i], keep[i + 1]
        if times[b] - times[a] < min_separation:
            keep.pop(i + 1 if heights[a] >= heights[b] else i)
            i = max(i - 1, 0)
        else:
            i += 1
    return times[keep]


def extract_ipis(trace: PiezoTrace, smoother: SmootherConfig | None = None,
                 min_separation=DEFAULT_MIN_SEPARATION_MS,
                 prominence_fraction=DEFAULT_PROMINENCE) -> IpiSequence:
    smoothed = sg_smooth(trace, smoother)
    beats = detect_peaks(smoothed, min_separation, prominence_fraction)
    if beats.size < 2:
        raise ExtractionError(f"found {beats.size} heartbeat(s), need at least 2")
    return IpiSequence.from_beats(beats, trace.sampling_rate)


def _beat_index(beats, values):
    idx = np.searchsorted(beats, values - 1e-6)
    return np.minimum(idx, beats.size - 1)


def align(a: IpiSequence, b: IpiSequence, max_offset=DEFAULT_MAX_OFFSET_MS):
    """Pair beats of two sequences on a shared clock.

    Beats are matched one-to-one, closest pairs first, within
    ``max_offset`` ms. An interval survives only if both its beats are
    paired and the partner sequence has the interval between the partners.
    """
    if len(a) == 0 or len(b) == 0:
        raise AlignmentError("cannot align an empty sequence")
    beats_a, beats_b = a.beats(), b.beats()
    gap = np.abs(beats_a[:, None] - beats_b[None, :])
    ii, jj = np.nonzero(gap <= max_offset)
    order = np.argsort(gap[ii, jj], kind="stable")
    partner = np.full(beats_a.size, -1)
    used_b = np.zeros(beats_b.size, dtype=bool)
    for i, j in zip(ii[order], jj[order]):
        if partner[i] < 0 and not used_b[j]:
            partner[i] = j
            used_b[j] = True
    if not np.any(partner >= 0):
        raise AlignmentError("no beats within max_offset of each other")

    b_start = _beat_index(beats_b, b.beat_times)
    b_end = _beat_index(beats_b, b.end_times)
    b_lookup = {(s, e): k for k, (s, e) in enumerate(zip(b_start, b_end))}
    a_start = _beat_index(beats_a, a.beat_times)
    a_end = _beat_index(beats_a, a.end_times)

    keep_a, keep_b = [], []
    for k, (s, e) in enumerate(zip(a_start, a_end)):
        ps, pe = partner[s], partner[e]
        if ps < 0 or pe < 0:
            continue
        kb = b_lookup.get((ps, pe))
        if kb is not None:
            keep_a.append(k)
            keep_b.append(kb)
    if not keep_a:
        raise AlignmentError("no interval is bounded by paired beats on both sides")
    keep_a, keep_b = np.array(keep_a), np.array(keep_b)
    return (IpiSequence(a.intervals[keep_a], a.beat_times[keep_a], a.source_rate),
            IpiSequence(b.intervals[keep_b], b.beat_times[keep_b], b.source_rate))


def rmse_against_truth(trace: PiezoTrace, ipis: IpiSequence,
                       max_offset=DEFAULT_MAX_OFFSET_MS) -> float:
    """RMSE (ms) of extracted intervals vs the trace's ground truth."""
    got, truth = align(ipis, trace.true_ipis(), max_offset)
    return float(np.sqrt(np.mean((got.intervals - truth.intervals) ** 2)))
