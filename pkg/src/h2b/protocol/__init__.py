"""Pairing protocol: wire messages, session state machine, transports, pipeline."""

from .messages import PROTOCOL_VERSION, TAG_BYTES, Notification, ReconMessage
from .pipeline import (PairingResult, PipelineParams, derive_key, exchange, pair_end_to_end,
                       paired_keys)
from .session import KEY_VALIDITY_S, FinalKey, Outcome, PairingSession, Role, State
from .transport import (LoopbackChannel, SocketChannel, localhost_pair, loopback_pair,
                        run_initiator, run_pair, run_responder)

__all__ = [
    "PROTOCOL_VERSION",
    "TAG_BYTES",
    "ReconMessage",
    "Notification",
    "PipelineParams",
    "PairingResult",
    "derive_key",
    "paired_keys",
    "exchange",
    "pair_end_to_end",
    "KEY_VALIDITY_S",
    "FinalKey",
    "Outcome",
    "PairingSession",
    "Role",
    "State",
    "LoopbackChannel",
    "SocketChannel",
    "loopback_pair",
    "localhost_pair",
    "run_initiator",
    "run_responder",
    "run_pair",
]
