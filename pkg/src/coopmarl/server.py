"""Framed JSON TCP endpoint exposing environments to remote trainers.

Wire format: each message is one frame, a 4-byte big-endian unsigned
length prefix followed by that many bytes of UTF-8 JSON; frames above
FRAME_MAX are rejected. JSON keeps the protocol cross-language; floats
serialize as shortest round-trip decimals, so a remote trajectory parses
back to the in-process values.

A session is a strict request/response alternation over one connection
holding at most one live environment. Request kinds: hello (declares
protocol version "v", environment family, and env_args), reset, step,
obs, state, spec, close. Every request gets exactly one response:
ok{...} or err{code, message}. A malformed payload inside a well-formed
frame costs an err{bad_frame} but keeps the session alive; a broken
length prefix (oversize claim) cannot be resynchronized, so the server
answers err{bad_frame} and drops the connection.

Sessions are isolated: concurrent connections hold independent
environment instances, so two sessions with the same seed step through
identical trajectories.
"""
from __future__ import annotations

import json
import os
import socket
import socketserver
import struct
import threading

from .config import EnvConfig
from .envs import CANONICAL_KEYS, FAMILY_BUILDERS, make_env
from .errors import (BadActionError, BadExtraError, BindFailureError,
                     ClosedError, EnvError, EpisodeOverError, FrameError,
                     UnknownKeyError)

FRAME_MAX = 16 * 1024 * 1024
PROTOCOL_VERSION = 1
DEFAULT_PORT = 7557
PORT_ENV_VAR = "COOPMARL_PORT"

_LEN = struct.Struct(">I")

_ERR_CODES: tuple[tuple[type, str], ...] = (
    (UnknownKeyError, "unknown_key"),
    (BadExtraError, "bad_extra"),
    (BadActionError, "bad_action"),
    (EpisodeOverError, "episode_over"),
    (ClosedError, "no_env"),
)


def resolve_port(cli_port: int | None = None) -> int:
    """CLI flag wins, then the environment variable, then the default."""
    if cli_port is not None:
        return cli_port
    return int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))


def encode_frame(message: dict) -> bytes:
    data = json.dumps(message, separators=(",", ":")).encode("utf-8")
    if len(data) > FRAME_MAX:
        raise FrameError(f"frame of {len(data)} bytes exceeds {FRAME_MAX}")
    return _LEN.pack(len(data)) + data


def decode_frame(frame: bytes) -> dict:
    """Inverse of encode_frame for a complete frame byte string."""
    if len(frame) < _LEN.size:
        raise FrameError("frame shorter than its length prefix")
    (length,) = _LEN.unpack(frame[: _LEN.size])
    if length > FRAME_MAX:
        raise FrameError(f"declared length {length} exceeds {FRAME_MAX}")
    body = frame[_LEN.size:]
    if len(body) != length:
        raise FrameError(f"declared length {length}, got {len(body)} bytes")
    return json.loads(body.decode("utf-8"))


def send_frame(sock: socket.socket, message: dict) -> None:
    sock.sendall(encode_frame(message))


def recv_exact(sock: socket.socket, n: int) -> bytes | None:
    """n bytes from the socket, or None on clean EOF before any byte."""
    parts: list[bytes] = []
    got = 0
    while got < n:
        chunk = sock.recv(min(65536, n - got))
        if not chunk:
            if got == 0:
                return None
            raise FrameError("connection closed mid-frame")
        parts.append(chunk)
        got += len(chunk)
    return b"".join(parts)


def recv_frame(sock: socket.socket) -> bytes | None:
    """Raw JSON payload of the next frame, or None on clean EOF."""
    header = recv_exact(sock, _LEN.size)
    if header is None:
        return None
    (length,) = _LEN.unpack(header)
    if length > FRAME_MAX:
        raise FrameError(f"declared length {length} exceeds {FRAME_MAX}")
    body = recv_exact(sock, length)
    if body is None and length > 0:
        raise FrameError("connection closed mid-frame")
    return body if body is not None else b""


def _ok(**payload) -> dict:
    payload["kind"] = "ok"
    return payload


def _err(code: str, message: str) -> dict:
    return {"kind": "err", "code": code, "message": message}


def _spec_payload(env, family: str, key: str) -> dict:
    return {
        "env": family,
        "key": key,
        "n_agents": env.n_agents,
        "n_actions": env.n_actions,
        "obs_dim": env.obs_dims[0],
        "state_dim": env.state_dim,
        "time_limit": env.time_limit,
    }


def _obs_payload(env) -> list:
    return [o.tolist() for o in env.get_obs()]


def _state_payload(env) -> list:
    return env.get_state().tolist()


class _Session:
    """Per-connection protocol state machine."""

    def __init__(self) -> None:
        self.env = None
        self.spec: dict = {}

    def dispatch(self, msg: object) -> dict:
        if not isinstance(msg, dict) or not isinstance(msg.get("kind"), str):
            return _err("bad_frame", "request must be an object with a string 'kind'")
        kind = msg["kind"]
        handler = getattr(self, f"_on_{kind}", None)
        if handler is None:
            return _err("bad_frame", f"unknown request kind {kind!r}")
        try:
            return handler(msg)
        except EnvError as exc:
            for err_type, code in _ERR_CODES:
                if isinstance(exc, err_type):
                    return _err(code, str(exc))
            return _err("bad_frame", str(exc))

    def _require_env(self):
        if self.env is None:
            raise ClosedError("no environment; send hello first")
        return self.env

    def _on_hello(self, msg: dict) -> dict:
        if msg.get("v") != PROTOCOL_VERSION:
            return _err("bad_frame",
                        f"unsupported protocol version {msg.get('v')!r}")
        family = msg.get("env")
        if not isinstance(family, str):
            return _err("bad_frame", "hello requires a string 'env' field")
        if family not in FAMILY_BUILDERS:
            return _err("unknown_key", f"unknown environment family {family!r}")
        args = msg.get("env_args", {})
        if args is None:
            args = {}
        if not isinstance(args, dict):
            return _err("bad_frame", "env_args must be an object")
        args = dict(args)
        key = args.pop("key", CANONICAL_KEYS[family])
        seed = args.pop("seed", 1)
        time_limit = args.pop("time_limit", None)
        cfg = EnvConfig(env_family=family, key=key, seed=seed,
                        time_limit=time_limit, extras=args)
        try:
            env = make_env(cfg)
        except (TypeError, ValueError) as exc:
            return _err("bad_extra", f"invalid env_args: {exc}")
        if self.env is not None:
            self.env.close()
        self.env = env
        self.spec = _spec_payload(env, family, key)
        return _ok(v=PROTOCOL_VERSION, **self.spec)

    def _on_reset(self, msg: dict) -> dict:
        env = self._require_env()
        env.reset()
        return _ok(obs=_obs_payload(env), state=_state_payload(env))

    def _on_step(self, msg: dict) -> dict:
        env = self._require_env()
        actions = msg.get("actions")
        if not isinstance(actions, list):
            return _err("bad_frame", "step requires an 'actions' list")
        for a in actions:
            if isinstance(a, bool) or not isinstance(a, int):
                raise BadActionError(f"actions must be integers, got {a!r}")
        out = env.step(actions)
        info = {
            "truncated": bool(out.info["truncated"]),
            "agent_rewards": [float(r) for r in out.info["agent_rewards"]],
        }
        return _ok(reward=float(out.reward), done=bool(out.done), info=info,
                   obs=_obs_payload(env), state=_state_payload(env))

    def _on_obs(self, msg: dict) -> dict:
        return _ok(obs=_obs_payload(self._require_env()))

    def _on_state(self, msg: dict) -> dict:
        return _ok(state=_state_payload(self._require_env()))

    def _on_spec(self, msg: dict) -> dict:
        self._require_env()
        return _ok(**self.spec)

    def _on_close(self, msg: dict) -> dict:
        if self.env is not None:
            self.env.close()
            self.env = None
            self.spec = {}
        return _ok()

    def teardown(self) -> None:
        if self.env is not None:
            self.env.close()
            self.env = None


class _Handler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        session = _Session()
        sock = self.request
        try:
            while True:
                try:
                    body = recv_frame(sock)
                except FrameError as exc:
                    # length prefix is untrustworthy: report and hang up
                    try:
                        send_frame(sock, _err("bad_frame", str(exc)))
                    except OSError:
                        pass
                    return
                if body is None:
                    return
                try:
                    msg = json.loads(body.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                    # frame boundary is intact, so the session survives
                    send_frame(sock, _err("bad_frame", f"invalid JSON: {exc}"))
                    continue
                try:
                    reply = session.dispatch(msg)
                except Exception as exc:  # a peer must not kill the thread
                    reply = _err("bad_frame", f"{type(exc).__name__}: {exc}")
                send_frame(sock, reply)
        except OSError:
            pass
        finally:
            session.teardown()


class _ThreadingServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class EnvServer:
    """TCP endpoint serving one environment session per connection."""

    def __init__(self, host: str = "127.0.0.1", port: int | None = None):
        bind_port = resolve_port(port)
        try:
            self._server = _ThreadingServer((host, bind_port), _Handler)
        except OSError as exc:
            raise BindFailureError(f"cannot bind {host}:{bind_port}: {exc}") from exc
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.server_address[:2]
        return host, port

    @property
    def port(self) -> int:
        return self.address[1]

    def start(self) -> "EnvServer":
        """Serve on a background thread; returns self for chaining."""
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None

    def __enter__(self) -> "EnvServer":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
