"""Synthetic piezo heartbeat traces with known beat instants.

IPIs come from a stationary AR(1) Gaussian process. Each sensor renders
the same beats with its own pulse shape, propagation delay, timing jitter
and additive noise, so every downstream stage can be scored against
ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ParameterError
from .types import IpiSequence, Location, PiezoTrace

__all__ = [
    "HeartModel",
    "SensorConfig",
    "generate_ipi_series",
    "render_trace",
    "render_body",
    "downsample",
    "pulse_template",
    "MIN_IPI_MS",
]

MIN_IPI_MS = 200.0
MIN_RATE, MAX_RATE = 40, 400

# Typical arrival delay relative to the heart, ms. Only differences matter.
DEFAULT_DELAYS = {
    Location.CHEST: 0.0,
    Location.WAIST: 4.0,
    Location.NECK: 8.0,
    Location.WRIST: 18.0,
    Location.ANKLE: 35.0,
}


@dataclass(frozen=True)
class HeartModel:
    mean_ipi: float = 850.0
    ipi_std: float = 50.0
    ar_coefficient: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.mean_ipi > 0:
            raise ParameterError("mean_ipi must be positive")
        if not self.ipi_std >= 0:
            raise ParameterError("ipi_std must be non-negative")
        if not 0 <= self.ar_coefficient < 1:
            raise ParameterError("ar_coefficient must lie in [0, 1)")


@dataclass(frozen=True)
class SensorConfig:
    location: Location = Location.CHEST
    sampling_rate: float = 120.0
    noise_std: float = 0.2
    propagation_delay: float = 0.0
    jitter_std: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "location", Location(self.location))
        if not MIN_RATE <= self.sampling_rate <= MAX_RATE:
            raise ConfigurationError(
                f"sampling_rate must be in [{MIN_RATE}, {MAX_RATE}] Hz, "
                f"got {self.sampling_rate}")
        if self.propagation_delay < 0 or self.jitter_std < 0 or self.noise_std < 0:
            raise ParameterError("delay, jitter and noise must be non-negative")

    @classmethod
    def at(cls, location, **overrides) -> "SensorConfig":
        """Config for ``location`` with its typical propagation delay."""
        location = Location(location)
        overrides.setdefault("propagation_delay", DEFAULT_DELAYS[location])
        return cls(location=location, **overrides)


def generate_ipi_series(model: HeartModel, count: int) -> IpiSequence:
    """Draw ``count`` intervals from the AR(1) process of ``model``.

    Values below :data:`MIN_IPI_MS` are clamped to it.
    """
    if count < 1:
        raise ParameterError("count must be at least 1")
    rng = np.random.default_rng(model.seed)
    a = model.ar_coefficient
    innovations = rng.standard_normal(count)
    z = np.empty(count)
    z[0] = innovations[0]
    scale = np.sqrt(1.0 - a * a)
    for i in range(1, count):
        z[i] = a * z[i - 1] + scale * innovations[i]
    intervals = np.maximum(model.mean_ipi + model.ipi_std * z, MIN_IPI_MS)
    onsets = np.concatenate([[0.0], np.cumsum(intervals[:-1])])
    return IpiSequence(intervals, onsets)


def pulse_template(location, t_ms):
    """Unit-peak pulse shape evaluated at offsets ``t_ms`` from the beat.

    Chest and waist get a Gaussian-damped cosine (SCG-like ringing); the
    arterial sites get a single raised-cosine lobe (BCG pressure pulse).
    Both peak at exactly ``t = 0``.
    """
    t = np.asarray(t_ms, dtype=float)
    if Location(location).is_scg:
        return np.cos(2 * np.pi * 6.0e-3 * t) * np.exp(-(t / 45.0) ** 2)
    half_width = 45.0
    lobe = 0.5 * (1.0 + np.cos(np.pi * t / half_width))
    return np.where(np.abs(t) < half_width, lobe, 0.0)


_SUPPORT_MS = 200.0


def render_trace(ipis: IpiSequence, cfg: SensorConfig, seed=0,
                 lead_in=500.0, tail=500.0) -> PiezoTrace:
    """Render one sensor's view of the beats in ``ipis``.

    The first beat lands at ``lead_in`` ms (plus delay and jitter). The
    returned ``true_beat_times`` are the jittered, delayed instants, one
    more than there are intervals.
    """
    if len(ipis) == 0:
        raise ParameterError("need at least one interval to render")
    if cfg.sampling_rate < MIN_RATE:
        raise ConfigurationError("sampling rate too low to resolve pulses")
    rng = np.random.default_rng(seed)
    nominal = lead_in + np.concatenate([[0.0], np.cumsum(ipis.intervals)])
    jitter = rng.normal(0.0, cfg.jitter_std, nominal.size) if cfg.jitter_std else 0.0
    beats = nominal + cfg.propagation_delay + jitter
    if np.any(np.diff(beats) <= 0):
        raise ParameterError("jitter reordered beats; reduce jitter_std")

    period = 1000.0 / cfg.sampling_rate
    n_samples = int(np.ceil((beats[-1] + tail) / period))
    times = np.arange(n_samples) * period
    signal = np.zeros(n_samples)
    half = int(np.ceil(_SUPPORT_MS / period))
    for b in beats:
        centre = int(round(b / period))
        lo, hi = max(centre - half, 0), min(centre + half + 1, n_samples)
        signal[lo:hi] += pulse_template(cfg.location, times[lo:hi] - b)
    if cfg.noise_std:
        signal += rng.normal(0.0, cfg.noise_std, n_samples)
    return PiezoTrace(signal, cfg.sampling_rate, beats, cfg.location)


def render_body(ipis: IpiSequence, cfgs, seed=0, **kwargs) -> list[PiezoTrace]:
    """Simultaneous capture of one heart by several sensors.

    Each sensor gets an independent jitter/noise stream spawned from
    ``seed``; the clock origin is shared.
    """
    cfgs = list(cfgs)
    if len(cfgs) < 2:
        raise ParameterError("render_body needs at least two sensors")
    streams = np.random.SeedSequence(seed).spawn(len(cfgs))
    return [render_trace(ipis, cfg, seed=s, **kwargs) for cfg, s in zip(cfgs, streams)]


def downsample(trace: PiezoTrace, target_rate) -> PiezoTrace:
    """Keep every k-th sample, where ``k = sampling_rate / target_rate``."""
    ratio = trace.sampling_rate / target_rate
    k = int(round(ratio))
    if target_rate <= 0 or k < 1 or abs(ratio - k) > 1e-9:
        raise ParameterError(
            f"{target_rate} Hz does not divide {trace.sampling_rate} Hz")
    return PiezoTrace(trace.samples[::k], float(target_rate), trace.true_beat_times,
                      trace.location)
