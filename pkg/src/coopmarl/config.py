"""Environment configuration and joint-action/step types."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import BadExtraError

ENV_FAMILIES = (
    "gymma-lbf",
    "gymma-rware",
    "gymma-mpe",
    "overcooked",
    "pressureplate",
    "capturetarget",
    "boxpushing",
)

# Default episode horizons per family.
DEFAULT_TIME_LIMITS = {
    "gymma-lbf": 50,
    "gymma-rware": 500,
    "gymma-mpe": 25,
    "overcooked": 500,
    "pressureplate": 500,
    "capturetarget": 60,
    "boxpushing": 60,
}

# Recognized extras per family: name -> validator(value) -> normalized value.
# Anything else in extras is rejected outright.


def _bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "false"):
        return v.lower() == "true"
    raise TypeError(f"expected bool, got {v!r}")


def _prob(v: Any) -> float:
    f = float(v)
    if not (0.0 <= f <= 1.0):
        raise ValueError(f"probability out of [0,1]: {v!r}")
    return f


def _pos_int(v: Any) -> int:
    i = int(v)
    if i < 1:
        raise ValueError(f"expected positive integer, got {v!r}")
    return i


def _reward_type(v: Any) -> str:
    if v not in ("sparse", "shaped"):
        raise ValueError(f"reward_type must be 'sparse' or 'shaped', got {v!r}")
    return v


FAMILY_EXTRAS: dict[str, dict[str, Any]] = {
    "gymma-lbf": {},
    "gymma-rware": {"request_queue_size": _pos_int},
    "gymma-mpe": {"max_speed": float},
    "overcooked": {"reward_type": _reward_type, "recipe_size": _pos_int},
    "pressureplate": {"sight": _pos_int},
    "capturetarget": {
        "obs_one_hot": _bool,
        "target_flick_prob": _prob,
        "tgt_avoid_agent": _bool,
        "tgt_trans_noise": _prob,
        "agent_trans_noise": _prob,
    },
    "boxpushing": {"random_init": _bool},
}

_MAX_SEED = 2**64


@dataclass(frozen=True)
class EnvConfig:
    """Everything needed to build one environment instance.

    extras carries family-specific arguments; unknown names are rejected at
    validation time rather than silently ignored.
    """

    env_family: str
    key: str
    seed: int = 1
    time_limit: int | None = None
    extras: Mapping[str, Any] = field(default_factory=dict)

    def validated(self) -> "EnvConfig":
        if self.env_family not in ENV_FAMILIES:
            raise BadExtraError(f"unknown env_family {self.env_family!r}")
        if not (0 <= int(self.seed) < _MAX_SEED):
            raise BadExtraError(f"seed must fit in u64, got {self.seed!r}")
        if self.time_limit is not None and int(self.time_limit) < 1:
            raise BadExtraError(f"time_limit must be >= 1, got {self.time_limit!r}")
        known = FAMILY_EXTRAS[self.env_family]
        clean: dict[str, Any] = {}
        for name, value in dict(self.extras).items():
            if name not in known:
                raise BadExtraError(
                    f"extra {name!r} not recognized for family {self.env_family!r}"
                )
            try:
                clean[name] = known[name](value)
            except (TypeError, ValueError) as exc:
                raise BadExtraError(f"extra {name!r}: {exc}") from exc
        return EnvConfig(
            env_family=self.env_family,
            key=self.key,
            seed=int(self.seed),
            time_limit=None if self.time_limit is None else int(self.time_limit),
            extras=clean,
        )

    def horizon(self) -> int:
        if self.time_limit is not None:
            return int(self.time_limit)
        return DEFAULT_TIME_LIMITS[self.env_family]


JointAction = Sequence[int]


@dataclass
class StepOutcome:
    """Team reward, termination flag, and the info side channel.

    info always carries "truncated" (time-limit cut distinct from a true
    terminal) and "agent_rewards" (per-agent components summing to reward).
    """

    reward: float
    done: bool
    info: dict[str, Any]


@dataclass
class ObsStateSnapshot:
    obs: list[np.ndarray]
    state: np.ndarray

    def __iter__(self):
        # supports the idiomatic `obs, state = env.reset()` unpacking
        yield self.obs
        yield self.state


@dataclass
class EpisodeRecord:
    """One rolled-out episode: per-step arrays plus final flags."""

    observations: list[list[np.ndarray]]  # length T+1, includes terminal obs
    states: list[np.ndarray]  # length T+1
    actions: list[list[int]]  # length T
    rewards: list[float]  # length T
    agent_rewards: list[list[float]]  # length T
    terminated: bool  # true terminal (not a time-limit cut)
    truncated: bool

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def episode_return(self) -> float:
        return float(sum(self.rewards))
