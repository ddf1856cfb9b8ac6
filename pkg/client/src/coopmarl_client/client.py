"""Remote environment client.

Speaks the server's length-prefixed JSON protocol over one TCP connection
and exposes the familiar episode API: ``obs, state = env.reset()``,
``reward, done, info = env.step(actions)``, ``get_obs``/``get_state`` from
the cached last response, ``n_agents``, ``get_total_actions()``, and
``close()``. One environment per connection; no retry or reconnect logic,
faults surface immediately as exceptions.
"""
from __future__ import annotations

import json
import operator
import socket
import struct
from dataclasses import dataclass

from .errors import ProtocolError, raise_for

PROTOCOL_VERSION = 1
FRAME_MAX = 16 * 1024 * 1024
_LEN = struct.Struct(">I")

Obs = list[list[float]]
State = list[float]


@dataclass(frozen=True)
class EnvSpec:
    """The server's description of the environment behind this session."""

    env: str
    key: str
    n_agents: int
    n_actions: int
    obs_dim: int
    state_dim: int
    time_limit: int


def _send(sock: socket.socket, message: dict) -> None:
    payload = json.dumps(message, separators=(",", ":")).encode("utf-8")
    if len(payload) > FRAME_MAX:
        raise ProtocolError(f"request of {len(payload)} bytes exceeds the frame limit")
    sock.sendall(_LEN.pack(len(payload)) + payload)


def _recv(sock: socket.socket) -> dict:
    header = _recv_exact(sock, _LEN.size)
    (length,) = _LEN.unpack(header)
    if length > FRAME_MAX:
        raise ProtocolError(f"frame of {length} bytes exceeds the frame limit")
    try:
        reply = json.loads(_recv_exact(sock, length).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"undecodable reply: {exc}") from exc
    if not isinstance(reply, dict):
        raise ProtocolError(f"expected a reply object, got {type(reply).__name__}")
    return reply


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    parts: list[bytes] = []
    got = 0
    while got < n:
        chunk = sock.recv(n - got)
        if not chunk:
            raise ProtocolError("server closed the connection")
        parts.append(chunk)
        got += len(chunk)
    return b"".join(parts)


class RemoteEnv:
    """One live environment session on a server.

    Not thread-safe: requests and replies alternate strictly on a single
    socket. Open several connections for several environments.
    """

    def __init__(self, sock: socket.socket, spec: EnvSpec):
        self._sock = sock
        self._spec = spec
        self._obs: Obs | None = None
        self._state: State | None = None

    @property
    def spec(self) -> EnvSpec:
        return self._spec

    @property
    def n_agents(self) -> int:
        return self._spec.n_agents

    def get_total_actions(self) -> int:
        return self._spec.n_actions

    @property
    def time_limit(self) -> int:
        return self._spec.time_limit

    def _rpc(self, **message) -> dict:
        _send(self._sock, message)
        reply = _recv(self._sock)
        kind = reply.get("kind")
        if kind == "err":
            raise_for(str(reply.get("code", "")), str(reply.get("message", "")))
        if kind != "ok":
            raise ProtocolError(f"unexpected reply kind {kind!r}")
        return reply

    def reset(self) -> tuple[Obs, State]:
        reply = self._rpc(kind="reset")
        self._obs = reply["obs"]
        self._state = reply["state"]
        return self._obs, self._state

    def step(self, actions: list[int]) -> tuple[float, bool, dict]:
        reply = self._rpc(kind="step",
                          actions=[operator.index(a) for a in actions])
        self._obs = reply["obs"]
        self._state = reply["state"]
        return float(reply["reward"]), bool(reply["done"]), dict(reply["info"])

    def get_obs(self) -> Obs:
        if self._obs is None:
            raise ProtocolError("no observation before the first reset()")
        return self._obs

    def get_state(self) -> State:
        if self._state is None:
            raise ProtocolError("no state before the first reset()")
        return self._state

    def close(self) -> None:
        if self._sock.fileno() < 0:
            return
        try:
            self._rpc(kind="close")
        finally:
            self._sock.close()

    def __enter__(self) -> "RemoteEnv":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def connect(address: tuple[str, int], env_key: str,
            env_args: dict | None = None) -> RemoteEnv:
    """Open a session for one environment: hello exchanged, spec cached.

    ``env_key`` names the environment family; ``env_args`` passes the
    environment's keyword arguments through verbatim (key, seed,
    time_limit, and any family extras).
    """
    sock = socket.create_connection(address)
    try:
        _send(sock, {"kind": "hello", "v": PROTOCOL_VERSION,
                     "env": env_key, "env_args": dict(env_args or {})})
        reply = _recv(sock)
        if reply.get("kind") == "err":
            raise_for(str(reply.get("code", "")), str(reply.get("message", "")))
        if reply.get("kind") != "ok":
            raise ProtocolError(f"unexpected reply kind {reply.get('kind')!r}")
        spec = EnvSpec(
            env=str(reply["env"]),
            key=str(reply["key"]),
            n_agents=int(reply["n_agents"]),
            n_actions=int(reply["n_actions"]),
            obs_dim=int(reply["obs_dim"]),
            state_dim=int(reply["state_dim"]),
            time_limit=int(reply["time_limit"]),
        )
    except BaseException:
        sock.close()
        raise
    return RemoteEnv(sock, spec)
