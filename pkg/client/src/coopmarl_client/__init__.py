"""TCP client for the cooperative multi-agent environment server.

Stdlib only: frames JSON requests over a socket and mirrors the episode
API of the in-process environments.
"""
from .client import FRAME_MAX, PROTOCOL_VERSION, EnvSpec, RemoteEnv, connect
from .errors import (BadActionError, BadExtraError, BadFrameError,
                     EpisodeOverError, NoEnvError, ProtocolError,
                     RemoteEnvError, UnknownKeyError)

__all__ = [
    "BadActionError",
    "BadExtraError",
    "BadFrameError",
    "EnvSpec",
    "EpisodeOverError",
    "FRAME_MAX",
    "NoEnvError",
    "PROTOCOL_VERSION",
    "ProtocolError",
    "RemoteEnv",
    "RemoteEnvError",
    "UnknownKeyError",
    "connect",
]

__version__ = "0.1.0"
