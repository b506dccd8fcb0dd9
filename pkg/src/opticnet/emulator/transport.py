"""Message codecs between controller-side handles and emulated agents.

Messages are JSON documents with a ``verb`` (configure / poll / interrupt /
ack / error).  Two interchangeable transports carry them: an in-process
channel and a loopback socket pair framing each document with a 4-byte
big-endian length prefix.  Both are synchronous request/response paths; the
discrete-event scheduler, not the transport, accounts emulated latency.
"""

import json
import socket
import struct

from ..errors import AgentError

_LEN = struct.Struct(">I")


def encode(doc: dict) -> bytes:
    payload = json.dumps(doc, sort_keys=True).encode("utf-8")
    return _LEN.pack(len(payload)) + payload


def decode_stream(sock) -> dict:
    header = _recv_exact(sock, _LEN.size)
    (length,) = _LEN.unpack(header)
    return json.loads(_recv_exact(sock, length).decode("utf-8"))


def _recv_exact(sock, n: int) -> bytes:
    chunks = []
    while n > 0:
        chunk = sock.recv(n)
        if not chunk:
            raise AgentError("connection closed mid-frame")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


class InProcTransport:
    """Messages stay as dicts; still round-trips through the codec."""

    def __init__(self, handler):
        self._handler = handler

    def request(self, doc: dict) -> dict:
        return json.loads(json.dumps(self._handler(json.loads(
            json.dumps(doc, sort_keys=True)))))

    def close(self):
        pass


class LoopbackTransport:
    """Length-prefixed frames over a real socket pair."""

    def __init__(self, handler):
        self._handler = handler
        self._client, self._server = socket.socketpair()
        self._client.settimeout(5.0)
        self._server.settimeout(5.0)

    def request(self, doc: dict) -> dict:
        self._client.sendall(encode(doc))
        request = decode_stream(self._server)
        self._server.sendall(encode(self._handler(request)))
        return decode_stream(self._client)

    def close(self):
        self._client.close()
        self._server.close()


def make_transport(kind: str, handler):
    if kind == "inproc":
        return InProcTransport(handler)
    if kind == "loopback":
        return LoopbackTransport(handler)
    raise AgentError(f"unknown transport kind {kind!r}")
