"""Wire formats for the reconciliation exchange.

ReconMessage, all integers big-endian::

    version  u8
    m        u16
    n        u16
    seed     u64
    y        m × i16
    tag      32 bytes, HMAC-SHA256 over every preceding byte

The MAC key is the sender's raw key bits packed MSB first, so the tag
both authenticates the sketch and lets the receiver test a corrected key.

Notification::

    status   u8   (1 = verified, 0 = failed)
    tag      32 bytes, HMAC-SHA256 keyed by the final key (zeros on failure)
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, ParseError
from ..quantizer import BitKey
from ..reconcile.matrix import CompressedKey

__all__ = ["ReconMessage", "Notification", "PROTOCOL_VERSION", "TAG_BYTES", "mac"]

PROTOCOL_VERSION = 1
TAG_BYTES = 32
_HEADER = struct.Struct(">BHHQ")
_NOTIFY_LABEL = b"h2b-notify"


def mac(key: bytes, data: bytes) -> bytes:
    return hmac.new(key, data, hashlib.sha256).digest()


@dataclass(frozen=True, eq=False)
class ReconMessage:
    version: int
    m: int
    n: int
    matrix_seed: int
    y_values: np.ndarray
    tag: bytes

    def __post_init__(self):
        y = np.asarray(self.y_values, dtype=np.int64).reshape(-1)
        if y.size != self.m:
            raise ParameterError(f"message declares m={self.m} but carries {y.size} values")
        if np.any(np.abs(y) > 2 ** 15 - 1):
            raise ParameterError("y values must fit in signed 16 bits")
        if len(self.tag) != TAG_BYTES:
            raise ParameterError(f"tag must be {TAG_BYTES} bytes")
        object.__setattr__(self, "y_values", y)
        object.__setattr__(self, "tag", bytes(self.tag))

    @classmethod
    def build(cls, sketch: CompressedKey, key: BitKey) -> "ReconMessage":
        """Message carrying ``sketch``, tagged with ``key``."""
        unsigned = cls(PROTOCOL_VERSION, sketch.m, sketch.n_bits, sketch.matrix_seed,
                       sketch.values, bytes(TAG_BYTES))
        return unsigned.with_tag(mac(key.to_bytes(), unsigned.signed_bytes()))

    def with_tag(self, tag) -> "ReconMessage":
        return ReconMessage(self.version, self.m, self.n, self.matrix_seed, self.y_values, tag)

    def signed_bytes(self) -> bytes:
        """Every field before the tag, as sent on the wire."""
        header = _HEADER.pack(self.version, self.m, self.n, self.matrix_seed)
        return header + self.y_values.astype(">i2").tobytes()

    def to_bytes(self) -> bytes:
        return self.signed_bytes() + self.tag

    def verify(self, key: BitKey) -> bool:
        """Whether ``tag`` was made with ``key``."""
        return hmac.compare_digest(mac(key.to_bytes(), self.signed_bytes()), self.tag)

    def sketch(self) -> CompressedKey:
        try:
            return CompressedKey(self.y_values, self.matrix_seed, self.n)
        except ParameterError as exc:
            raise ParseError(str(exc)) from exc

    @classmethod
    def from_bytes(cls, data: bytes) -> "ReconMessage":
        data = bytes(data)
        if len(data) < _HEADER.size + TAG_BYTES:
            raise ParseError("message too short")
        version, m, n, seed = _HEADER.unpack_from(data)
        if version != PROTOCOL_VERSION:
            raise ParseError(f"unsupported protocol version {version}")
        expected = _HEADER.size + 2 * m + TAG_BYTES
        if len(data) != expected:
            raise ParseError(f"message is {len(data)} bytes, header implies {expected}")
        if not 0 < m < n:
            raise ParseError(f"invalid dimensions m={m}, n={n}")
        y = np.frombuffer(data, dtype=">i2", count=m, offset=_HEADER.size).astype(np.int64)
        if np.any(np.abs(y) > n):
            raise ParseError("sketch value outside [-n, n]")
        return cls(version, m, n, seed, y, data[-TAG_BYTES:])

    def __eq__(self, other):
        return isinstance(other, ReconMessage) and self.to_bytes() == other.to_bytes()

    def __hash__(self):
        return hash(self.to_bytes())


@dataclass(frozen=True)
class Notification:
    success: bool
    tag: bytes = bytes(TAG_BYTES)

    def __post_init__(self):
        if len(self.tag) != TAG_BYTES:
            raise ParameterError(f"tag must be {TAG_BYTES} bytes")

    @staticmethod
    def expected_tag(final_key: bytes, recon_tag: bytes) -> bytes:
        """Success tag, bound to the reconciliation message it answers."""
        return mac(final_key, _NOTIFY_LABEL + b"\x01" + recon_tag)

    @classmethod
    def verified(cls, final_key: bytes, recon_tag: bytes) -> "Notification":
        return cls(True, cls.expected_tag(final_key, recon_tag))

    @classmethod
    def failed(cls) -> "Notification":
        return cls(False)

    def to_bytes(self) -> bytes:
        return bytes([1 if self.success else 0]) + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "Notification":
        data = bytes(data)
        if len(data) != 1 + TAG_BYTES or data[0] not in (0, 1):
            raise ParseError("malformed notification")
        return cls(bool(data[0]), data[1:])
