"""Seeded synthetic recording sessions shared by the analysis harness."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..errors import ParameterError
from ..signalgen import HeartModel, SensorConfig, generate_ipi_series, render_body
from ..types import Location

__all__ = ["BodyScenario", "derive_seed", "parallel_map"]


def derive_seed(*parts) -> int:
    """A 63-bit seed determined by ``parts`` alone."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0]
               >> np.uint64(1))


def parallel_map(fn, items, threads=1):
    """``list(map(fn, items))``, optionally on a thread pool; order is kept."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class BodyScenario:
    """Sensors worn by one person during one recording.

    ``noise_free`` zeroes noise, jitter and propagation delay so every
    sensor sees exactly the same waveform.
    """

    locations: tuple = (Location.CHEST, Location.WAIST)
    n_ipis: int = 350
    sampling_rate: float = 120.0
    noise_std: float = 0.2
    jitter_std: float = 2.0
    noise_free: bool = False

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(Location(x) for x in self.locations))
        if len(self.locations) < 1:
            raise ParameterError("need at least one sensor location")
        if self.n_ipis < 2:
            raise ParameterError("n_ipis must be at least 2")

    def sensors(self):
        if self.noise_free:
            return [SensorConfig(loc, self.sampling_rate, 0.0, 0.0, 0.0) for loc in self.locations]
        return [SensorConfig.at(loc, sampling_rate=self.sampling_rate, noise_std=self.noise_std,
                                jitter_std=self.jitter_std) for loc in self.locations]

    def record(self, heart: HeartModel, session: int, n_ipis=None):
        """Traces of every sensor for recording ``session`` of ``heart``.

        The heart's own ``seed`` identifies the person; ``session`` picks a
        fresh stretch of their heartbeat and fresh sensor noise.
        """
        person = replace(heart, seed=derive_seed(heart.seed, session, 0))
        ipis = generate_ipi_series(person, n_ipis or self.n_ipis)
        sensors = self.sensors()
        if len(sensors) == 1:
            sensors = sensors * 2
            return render_body(ipis, sensors, seed=derive_seed(heart.seed, session, 1))[:1]
        return render_body(ipis, sensors, seed=derive_seed(heart.seed, session, 1))
