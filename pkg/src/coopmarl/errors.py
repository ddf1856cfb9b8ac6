"""Error types shared across the environment suite."""
from __future__ import annotations


class EnvError(Exception):
    """Base class for environment-layer failures."""


class UnknownKeyError(EnvError):
    """Task key does not parse or names an unregistered task."""


class BadExtraError(EnvError):
    """Unrecognized or ill-typed entry in EnvConfig.extras."""


class BadActionError(EnvError):
    """Joint action has wrong arity or an out-of-range component."""


class EpisodeOverError(EnvError):
    """step() called on a finished (or never reset) episode."""


class ClosedError(EnvError):
    """Operation on a closed environment handle."""


class UnsatisfiableSpawnError(EnvError):
    """Random placement constraints could not be met after bounded retries."""


class ReplayError(Exception):
    """Base class for replay-buffer failures."""


class UnderfilledError(ReplayError):
    """Sample requested before the buffer holds enough episodes."""


class BadIdError(ReplayError):
    """Priority update aimed at an id that is not (or no longer) stored."""


class HarnessError(Exception):
    """Base class for training/evaluation orchestration failures."""


class RunConfigError(HarnessError):
    """Run configuration failed pre-flight validation."""


class EmptyStreamError(HarnessError):
    """A metrics reduction was asked for on an empty row stream."""


class ServerError(Exception):
    """Base class for network-endpoint failures."""


class BindFailureError(ServerError):
    """The serving socket could not be bound."""


class FrameError(ServerError):
    """A wire frame violates the length-prefix contract."""


class NetError(Exception):
    """Base class for network-kernel failures."""


class DimMismatchError(NetError):
    """Input or parameter dimensions do not match the network spec."""


class StaleTapeError(NetError):
    """Backward on a consumed tape, or mixing variables across tapes."""
