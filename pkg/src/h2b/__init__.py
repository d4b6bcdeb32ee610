"""Symmetric key agreement between body-worn sensors from heartbeat timing.

Stages, each in its own module:

``signalgen``  synthetic piezo traces with ground-truth beats
``ipi``        beat extraction and cross-device alignment
``quantizer``  equal-probability Gray-coded key bits
``reconcile``  sketch-based mismatch correction and an RS baseline
``protocol``   authenticated pairing sessions
``analysis``   evaluation harness
"""

from .errors import H2BError
from .quantizer import BitKey
from .signalgen import HeartModel, SensorConfig
from .types import IpiSequence, Location, PiezoTrace

__version__ = "0.1.0"

__all__ = ["H2BError", "BitKey", "HeartModel", "SensorConfig", "IpiSequence", "Location",
           "PiezoTrace", "__version__"]
