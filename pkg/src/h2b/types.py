"""Value types passed between the signal, extraction and quantization stages."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParameterError


# Onset/end times closer than this are the same beat (float round-off).
_SAME_BEAT_MS = 1e-6


class Location(str, Enum):
    CHEST = "chest"
    NECK = "neck"
    WRIST = "wrist"
    WAIST = "waist"
    ANKLE = "ankle"

    @property
    def is_scg(self) -> bool:
        """Chest and waist sensors pick up the seismocardiogram."""
        return self in (Location.CHEST, Location.WAIST)


@dataclass(frozen=True, eq=False)
class IpiSequence:
    """Heartbeat intervals in milliseconds.

    ``beat_times[i]`` is the beat that opens interval ``i``, so for a
    contiguous sequence ``intervals[i] == beat_times[i + 1] - beat_times[i]``.
    Sequences produced by :func:`h2b.ipi.align` may skip intervals around
    unpaired beats; those gaps are the only places the identity breaks.
    """

    intervals: np.ndarray
    beat_times: np.ndarray
    source_rate: float | None = None

    def __post_init__(self):
        intervals = np.asarray(self.intervals, dtype=float).reshape(-1)
        beat_times = np.asarray(self.beat_times, dtype=float).reshape(-1)
        if intervals.shape != beat_times.shape:
            raise ParameterError("need one onset time per interval")
        if np.any(intervals <= 0):
            raise ParameterError("intervals must be positive")
        if np.any(np.diff(beat_times) <= 0):
            raise ParameterError("beat times must be strictly increasing")
        object.__setattr__(self, "intervals", intervals)
        object.__setattr__(self, "beat_times", beat_times)

    @classmethod
    def from_beats(cls, beats, source_rate=None) -> "IpiSequence":
        beats = np.asarray(beats, dtype=float)
        return cls(np.diff(beats), beats[:-1], source_rate)

    def __len__(self):
        return self.intervals.size

    @property
    def end_times(self) -> np.ndarray:
        return self.beat_times + self.intervals

    @property
    def is_contiguous(self) -> bool:
        return bool(np.allclose(self.end_times[:-1], self.beat_times[1:]))

    def beats(self) -> np.ndarray:
        """All distinct beat instants touched by the intervals."""
        merged = np.sort(np.concatenate([self.beat_times, self.end_times]))
        keep = np.concatenate([[True], np.diff(merged) > _SAME_BEAT_MS])
        return merged[keep]

    def slice(self, start, stop=None) -> "IpiSequence":
        return IpiSequence(self.intervals[start:stop], self.beat_times[start:stop],
                           self.source_rate)

    def to_json(self) -> dict:
        return {
            "intervals_ms": self.intervals.tolist(),
            "beat_times_ms": self.beat_times.tolist(),
            "source_rate": self.source_rate,
        }

    @classmethod
    def from_json(cls, obj) -> "IpiSequence":
        return cls(obj["intervals_ms"], obj["beat_times_ms"], obj.get("source_rate"))


@dataclass(frozen=True, eq=False)
class PiezoTrace:
    samples: np.ndarray
    sampling_rate: float
    true_beat_times: np.ndarray
    location: Location = Location.CHEST

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).reshape(-1)
        beats = np.asarray(self.true_beat_times, dtype=float).reshape(-1)
        if samples.size == 0:
            raise ParameterError("trace has no samples")
        if np.any(np.diff(beats) <= 0):
            raise ParameterError("true beat times must be strictly increasing")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "true_beat_times", beats)
        object.__setattr__(self, "location", Location(self.location))

    @property
    def sample_period(self) -> float:
        """Milliseconds between samples."""
        return 1000.0 / self.sampling_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_period

    @property
    def duration(self) -> float:
        return self.samples.size * self.sample_period

    def with_samples(self, samples) -> "PiezoTrace":
        return PiezoTrace(samples, self.sampling_rate, self.true_beat_times, self.location)

    def true_ipis(self) -> IpiSequence:
        return IpiSequence.from_beats(self.true_beat_times, self.sampling_rate)
