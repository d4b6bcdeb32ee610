"""Equal-probability quantization of IPIs into Gray-coded key bits.

Intervals are mapped through the quantile function of a Normal fitted to
the device's own calibration window, so each of the ``n`` levels is
equally likely. Levels are Gray coded and only a band of the most
significant, low-mismatch bits is kept.

Bit positions are numbered from 1 at the least significant bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DegenerateModelError, EstimationError, ParameterError
from .types import IpiSequence

__all__ = [
    "QuantizerModel",
    "BitKey",
    "estimate_entropy",
    "levels_for_entropy",
    "fit_model",
    "quantize",
    "gray_encode",
    "gray_decode",
    "build_key",
    "DEFAULT_LEVELS",
    "DEFAULT_BAND",
]

DEFAULT_LEVELS = 64
DEFAULT_BAND = (4, 6)
MIN_CALIBRATION = 30

_STANDARD_NORMAL = NormalDist()


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF; ``+inf`` at ``p == 1``."""
    if p >= 1.0:
        return math.inf
    return _STANDARD_NORMAL.inv_cdf(p)


@dataclass(frozen=True, eq=False)
class QuantizerModel:
    thresholds: np.ndarray
    dist_mean: float
    dist_std: float

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        n = t.size
        if n < 2 or n & (n - 1):
            raise ParameterError("number of levels must be a power of two >= 2")
        if np.any(np.diff(t) <= 0):
            raise ParameterError("thresholds must be strictly ascending")
        object.__setattr__(self, "thresholds", t)

    @property
    def n_levels(self) -> int:
        return self.thresholds.size

    @property
    def width(self) -> int:
        """Gray word length in bits."""
        return self.n_levels.bit_length() - 1


@dataclass(frozen=True, eq=False)
class BitKey:
    bits: np.ndarray
    bits_per_ipi: int
    kept_band: tuple[int, int]

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).reshape(-1)
        if np.any(bits > 1):
            raise ParameterError("key bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "kept_band", tuple(int(b) for b in self.kept_band))

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        return isinstance(other, BitKey) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def take(self, n: int) -> "BitKey":
        """The first ``n`` bits, e.g. 128 of the 129 produced by 43 IPIs."""
        if n > self.bits.size:
            raise ParameterError(f"key has only {self.bits.size} bits, asked for {n}")
        return BitKey(self.bits[:n], self.bits_per_ipi, self.kept_band)

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()

    def to_json(self) -> dict:
        return {
            "bits": "".join(map(str, self.bits.tolist())),
            "bits_per_ipi": self.bits_per_ipi,
            "band": list(self.kept_band),
        }

    @classmethod
    def from_json(cls, obj) -> "BitKey":
        bits = np.frombuffer(obj["bits"].encode("ascii"), dtype=np.uint8) - ord("0")
        return cls(bits, int(obj["bits_per_ipi"]), tuple(obj["band"]))


def estimate_entropy(ipis: IpiSequence, bin_width=None) -> float:
    """Shannon entropy (bits) of the interval histogram.

    Bins are ``bin_width`` ms wide, aligned to multiples of the width. The
    default width is one sample period of the source.
    """
    x = ipis.intervals
    if x.size < MIN_CALIBRATION:
        raise EstimationError(f"need at least {MIN_CALIBRATION} intervals, got {x.size}")
    if bin_width is None:
        if not ipis.source_rate:
            raise ParameterError("bin_width required when the source rate is unknown")
        bin_width = 1000.0 / ipis.source_rate
    if bin_width <= 0:
        raise ParameterError("bin_width must be positive")
    _, counts = np.unique(np.floor(x / bin_width), return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum()) + 0.0


def levels_for_entropy(entropy: float) -> int:
    """``2 ** floor(H)``, at least 2."""
    return 2 ** max(int(math.floor(entropy)), 1)


def fit_model(ipis: IpiSequence, n_levels=DEFAULT_LEVELS) -> QuantizerModel:
    """Equal-probability thresholds from a Normal fitted to ``ipis``.

    ``thresholds[i]`` is the quantile at ``(i + 1) / n``; the last one is
    the ``+inf`` sentinel.
    """
    if n_levels < 2 or n_levels & (n_levels - 1):
        raise ParameterError("n_levels must be a power of two >= 2")
    x = ipis.intervals
    if x.size < MIN_CALIBRATION:
        raise EstimationError(f"need at least {MIN_CALIBRATION} intervals, got {x.size}")
    mean, std = float(x.mean()), float(x.std(ddof=1))
    if not std > 0:
        raise DegenerateModelError("calibration intervals have zero variance")
    z = np.array([normal_quantile((i + 1) / n_levels) for i in range(n_levels)])
    return QuantizerModel(mean + std * z, mean, std)


def quantize(ipis: IpiSequence, model: QuantizerModel) -> np.ndarray:
    """Level index = number of thresholds strictly below the interval."""
    return np.searchsorted(model.thresholds, ipis.intervals, side="left")


def gray_encode(level: int, width: int) -> str:
    """Reflected binary Gray code of ``level``, MSB first."""
    if level < 0 or level >= 1 << width:
        raise ParameterError(f"level {level} does not fit in {width} bits")
    return format(level ^ (level >> 1), f"0{width}b")


def gray_decode(code: str) -> int:
    g = int(code, 2)
    level = 0
    while g:
        level ^= g
        g >>= 1
    return level


def _gray_bits(levels, width):
    levels = np.asarray(levels, dtype=np.int64)
    gray = levels ^ (levels >> 1)
    shifts = np.arange(width - 1, -1, -1)
    return ((gray[:, None] >> shifts) & 1).astype(np.uint8)


def build_key(ipis: IpiSequence, model: QuantizerModel, kept_band=DEFAULT_BAND) -> BitKey:
    """Concatenate the ``kept_band`` bits of each interval's Gray word.

    ``kept_band = (low, high)`` is inclusive and 1-based from the LSB;
    within an interval the kept bits stay MSB first.
    """
    low, high = kept_band
    width = model.width
    if not 1 <= low <= high <= width:
        raise ParameterError(f"band {kept_band} outside bits 1..{width}")
    words = _gray_bits(quantize(ipis, model), width)
    # Column c of ``words`` is bit ``width - c``.
    kept = words[:, width - high:width - low + 1]
    return BitKey(kept.reshape(-1), high - low + 1, (low, high))
