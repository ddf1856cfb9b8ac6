"""Client-side exceptions, one per server error code plus transport faults."""
from __future__ import annotations


class RemoteEnvError(Exception):
    """Base class for everything this package raises on purpose."""


class ProtocolError(RemoteEnvError):
    """Transport-level fault: disconnect, oversize frame, or malformed reply."""


class BadFrameError(RemoteEnvError):
    """The server rejected the request envelope itself."""


class NoEnvError(RemoteEnvError):
    """A request that needs an environment arrived before hello."""


class UnknownKeyError(RemoteEnvError):
    """The requested environment family or key does not exist."""


class BadExtraError(RemoteEnvError):
    """An environment argument was not understood."""


class BadActionError(RemoteEnvError):
    """An action was out of range or of the wrong shape."""


class EpisodeOverError(RemoteEnvError):
    """step() after the episode finished; call reset() first."""


ERROR_BY_CODE: dict[str, type[RemoteEnvError]] = {
    "bad_frame": BadFrameError,
    "no_env": NoEnvError,
    "unknown_key": UnknownKeyError,
    "bad_extra": BadExtraError,
    "bad_action": BadActionError,
    "episode_over": EpisodeOverError,
}


def raise_for(code: str, message: str) -> None:
    raise ERROR_BY_CODE.get(code, RemoteEnvError)(message)
