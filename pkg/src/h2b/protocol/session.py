"""Initiator/responder state machine for one pairing attempt.

Initiator: ``idle → keyed → sent → verified | failed``. The initiator
sends the tagged sketch and becomes verified only on an authenticated
success notification.

Responder: ``idle → keyed → verified | failed``. It corrects its key from
the sketch and accepts the correction only if the sender's tag verifies
under the corrected key.

``reset`` returns either role to ``idle`` from any state.
"""

from __future__ import annotations

import hashlib
import hmac
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import (InconsistentSketchError, ParameterError, ParseError, ReconciliationError,
                      SolverError, StateError)
from ..quantizer import BitKey
from ..reconcile.matrix import make_matrix, project
from ..reconcile.mismatch import correct, recover_mismatch
from ..reconcile.solver import DEFAULT_EPSILON
from .messages import Notification, ReconMessage

__all__ = ["Role", "State", "FinalKey", "Outcome", "PairingSession", "KEY_VALIDITY_S"]

KEY_VALIDITY_S = 300.0


class Role(str, Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


class State(str, Enum):
    IDLE = "idle"
    KEYED = "keyed"
    SENT = "sent"
    VERIFIED = "verified"
    FAILED = "failed"


@dataclass(frozen=True)
class FinalKey:
    """SHA-256 of the agreed raw key with a short validity window."""

    digest: bytes
    created_at: float
    validity: float = KEY_VALIDITY_S

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @property
    def expires_at(self) -> float:
        return self.created_at + self.validity

    def is_valid(self, now=None) -> bool:
        now = time.time() if now is None else now
        return self.created_at <= now < self.expires_at

    def __eq__(self, other):
        return isinstance(other, FinalKey) and hmac.compare_digest(self.digest, other.digest)

    def __hash__(self):
        return hash(self.digest)


@dataclass(frozen=True)
class Outcome:
    verified: bool
    reason: str | None = None
    final_key: FinalKey | None = None


def _amplify(key: BitKey) -> bytes:
    return hashlib.sha256(key.to_bytes()).digest()


class PairingSession:
    """Mutable state of one side of one pairing attempt.

    Parameters
    ----------
    role : Role
    matrix_seed : int
        Public seed of the sensing matrix.
    m, n : int
        Sketch length and key length in bits.
    epsilon : float
        Solver tolerance used by the responder.
    clock : callable, optional
        Returns the current time in seconds; stamps the final key.
    """

    def __init__(self, role, matrix_seed, m=50, n=128, epsilon=DEFAULT_EPSILON,
                 validity=KEY_VALIDITY_S, clock=time.time):
        self.role = Role(role)
        self.matrix = make_matrix(matrix_seed, m, n)
        self.epsilon = epsilon
        self.validity = validity
        self._clock = clock
        self.reset()

    @property
    def matrix_seed(self) -> int:
        return self.matrix.seed

    @property
    def m(self) -> int:
        return self.matrix.rows

    @property
    def n(self) -> int:
        return self.matrix.cols

    @property
    def final_key(self) -> FinalKey | None:
        return self._final_key if self.state is State.VERIFIED else None

    def reset(self):
        self.state = State.IDLE
        self.raw_key = None
        self.reason = None
        self._final_key = None
        self._sent = None
        self._received_tag = None
        self.corrected_mismatch = None

    def _require(self, *states, role=None):
        if role is not None and self.role is not role:
            raise StateError(f"operation not available to the {self.role.value}")
        if self.state not in states:
            allowed = ", ".join(s.value for s in states)
            raise StateError(f"session is {self.state.value}, expected {allowed}")

    def _fail(self, reason) -> Outcome:
        self.state = State.FAILED
        self.reason = reason
        self._final_key = None
        return Outcome(False, reason)

    def _verify(self, key: BitKey) -> Outcome:
        self.state = State.VERIFIED
        self.reason = None
        self._final_key = FinalKey(_amplify(key), self._clock(), self.validity)
        return Outcome(True, None, self._final_key)

    def load_key(self, key: BitKey):
        """``idle → keyed``."""
        self._require(State.IDLE)
        if len(key) != self.n:
            raise ParameterError(f"key has {len(key)} bits, session expects {self.n}")
        self.raw_key = key
        self.state = State.KEYED

    def initiate(self, key: BitKey | None = None) -> ReconMessage:
        """Sketch the raw key and tag it; ``keyed → sent``.

        Passing ``key`` from ``idle`` loads it first.
        """
        self._require(State.IDLE, State.KEYED, role=Role.INITIATOR)
        if self.state is State.IDLE:
            if key is None:
                raise StateError("no key loaded")
            self.load_key(key)
        elif key is not None:
            raise StateError("a key is already loaded")
        msg = ReconMessage.build(project(self.raw_key, self.matrix), self.raw_key)
        self._sent = msg
        self.state = State.SENT
        return msg

    def respond(self, msg, key_local: BitKey | None = None) -> Outcome:
        """Correct the local key from ``msg`` and check the sender's tag.

        ``msg`` may be a :class:`ReconMessage` or its wire bytes.

        Raises
        ------
        ParseError
            ``msg`` is malformed; the session is marked failed first.
        """
        self._require(State.IDLE, State.KEYED, role=Role.RESPONDER)
        if self.state is State.IDLE:
            if key_local is None:
                raise StateError("no key loaded")
            self.load_key(key_local)
        elif key_local is not None:
            raise StateError("a key is already loaded")
        try:
            if not isinstance(msg, ReconMessage):
                msg = ReconMessage.from_bytes(msg)
            sketch = msg.sketch()
        except ParseError:
            self._fail("parse")
            raise
        if (msg.m, msg.n, msg.matrix_seed) != (self.m, self.n, self.matrix_seed):
            return self._fail("parameters")
        self._received_tag = msg.tag
        try:
            delta = recover_mismatch(sketch, self.raw_key, self.matrix, self.epsilon)
        except InconsistentSketchError:
            # Genuine sketches always give a consistent difference.
            return self._fail("mac")
        except (ReconciliationError, SolverError):
            return self._fail("reconciliation")
        candidate = correct(self.raw_key, delta)
        if not msg.verify(candidate):
            # The message is discarded; nothing learned from it is kept.
            return self._fail("mac")
        self.corrected_mismatch = int(np.count_nonzero(delta))
        return self._verify(candidate)

    def confirm(self) -> Notification:
        """Notification of the responder's result."""
        self._require(State.VERIFIED, State.FAILED, role=Role.RESPONDER)
        if self.state is State.VERIFIED:
            return Notification.verified(self._final_key.digest, self._received_tag)
        return Notification.failed()

    def accept_notification(self, note) -> Outcome:
        """``sent → verified`` on an authentic success notice, else ``failed``."""
        self._require(State.SENT, role=Role.INITIATOR)
        try:
            if not isinstance(note, Notification):
                note = Notification.from_bytes(note)
        except ParseError:
            self._fail("parse")
            raise
        if not note.success:
            return self._fail("peer failed")
        expected = Notification.expected_tag(_amplify(self.raw_key), self._sent.tag)
        if not hmac.compare_digest(expected, note.tag):
            return self._fail("notification mac")
        return self._verify(self.raw_key)

    def timeout(self) -> Outcome:
        """The peer went silent; any non-terminal state becomes failed."""
        if self.state in (State.VERIFIED, State.FAILED):
            return Outcome(self.state is State.VERIFIED, self.reason, self.final_key)
        return self._fail("timeout")
