"""Ordered duplex byte-message channels and the two protocol drivers.

A channel delivers whole messages in order without duplication. It may
lose them, which a receiver sees as :class:`TransportTimeout`.
"""

from __future__ import annotations

import queue
import socket
import struct
import threading

from ..errors import ParseError, ProtocolError, TransportTimeout
from ..quantizer import BitKey
from .session import Outcome, PairingSession

__all__ = [
    "Channel",
    "LoopbackChannel",
    "SocketChannel",
    "loopback_pair",
    "localhost_pair",
    "run_initiator",
    "run_responder",
    "run_pair",
    "DEFAULT_TIMEOUT_S",
]

DEFAULT_TIMEOUT_S = 5.0
_LENGTH = struct.Struct(">I")
_MAX_FRAME = 1 << 20


class Channel:
    """Interface: ``send(bytes)``, ``recv(timeout) -> bytes``, ``close()``."""

    def send(self, data: bytes):
        raise NotImplementedError

    def recv(self, timeout=DEFAULT_TIMEOUT_S) -> bytes:
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class LoopbackChannel(Channel):
    """In-process endpoint backed by two queues."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue):
        self._inbox, self._outbox = inbox, outbox

    def send(self, data: bytes):
        self._outbox.put(bytes(data))

    def recv(self, timeout=DEFAULT_TIMEOUT_S) -> bytes:
        try:
            return self._inbox.get(timeout=timeout)
        except queue.Empty:
            raise TransportTimeout(f"nothing received within {timeout} s") from None


def loopback_pair():
    """Two connected in-process endpoints."""
    a_to_b, b_to_a = queue.Queue(), queue.Queue()
    return LoopbackChannel(b_to_a, a_to_b), LoopbackChannel(a_to_b, b_to_a)


class SocketChannel(Channel):
    """Length-prefixed (u32 big-endian) frames over a stream socket."""

    def __init__(self, sock: socket.socket):
        self._sock = sock

    def send(self, data: bytes):
        data = bytes(data)
        self._sock.sendall(_LENGTH.pack(len(data)) + data)

    def _read_exact(self, count):
        chunks = []
        while count:
            chunk = self._sock.recv(count)
            if not chunk:
                raise ProtocolError("connection closed by peer")
            chunks.append(chunk)
            count -= len(chunk)
        return b"".join(chunks)

    def recv(self, timeout=DEFAULT_TIMEOUT_S) -> bytes:
        self._sock.settimeout(timeout)
        try:
            (length,) = _LENGTH.unpack(self._read_exact(_LENGTH.size))
            if length > _MAX_FRAME:
                raise ParseError(f"frame of {length} bytes exceeds limit")
            return self._read_exact(length)
        except socket.timeout:
            raise TransportTimeout(f"nothing received within {timeout} s") from None

    def close(self):
        self._sock.close()


def localhost_pair(timeout=DEFAULT_TIMEOUT_S):
    """Two endpoints connected through a TCP socket on 127.0.0.1."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.bind(("127.0.0.1", 0))
        server.listen(1)
        server.settimeout(timeout)
        client = socket.create_connection(server.getsockname(), timeout=timeout)
        conn, _ = server.accept()
    return SocketChannel(client), SocketChannel(conn)


def run_initiator(session: PairingSession, channel: Channel, key: BitKey,
                  timeout=DEFAULT_TIMEOUT_S) -> Outcome:
    """Send the sketch, wait for the verdict."""
    channel.send(session.initiate(key).to_bytes())
    try:
        reply = channel.recv(timeout)
    except TransportTimeout:
        return session.timeout()
    try:
        return session.accept_notification(reply)
    except ParseError:
        return Outcome(False, session.reason)


def run_responder(session: PairingSession, channel: Channel, key: BitKey,
                  timeout=DEFAULT_TIMEOUT_S) -> Outcome:
    """Wait for a sketch, reconcile, report back."""
    session.load_key(key)
    try:
        data = channel.recv(timeout)
    except TransportTimeout:
        return session.timeout()
    try:
        outcome = session.respond(data)
    except ParseError:
        outcome = Outcome(False, session.reason)
    channel.send(session.confirm().to_bytes())
    return outcome


def run_pair(initiator: PairingSession, responder: PairingSession, key_a: BitKey,
             key_b: BitKey, channels=None, timeout=DEFAULT_TIMEOUT_S):
    """Run both drivers concurrently; returns ``(initiator_outcome, responder_outcome)``."""
    ch_a, ch_b = channels if channels is not None else loopback_pair()
    result = {}

    def responder_side():
        result["b"] = run_responder(responder, ch_b, key_b, timeout)

    worker = threading.Thread(target=responder_side, daemon=True)
    worker.start()
    result["a"] = run_initiator(initiator, ch_a, key_a, timeout)
    worker.join(timeout)
    if "b" not in result:
        result["b"] = responder.timeout()
    return result["a"], result["b"]
