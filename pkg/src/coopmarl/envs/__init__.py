"""Environment registry: env_family -> builder."""
from __future__ import annotations

from ..config import EnvConfig
from ..errors import (
    BadActionError,
    BadExtraError,
    ClosedError,
    EnvError,
    EpisodeOverError,
    UnknownKeyError,
    UnsatisfiableSpawnError,
)
from . import box_pushing, capture_target, lbf, overcooked, pressureplate, rware, spread
from .base import Environment, Policy, random_policy, run_episode

FAMILY_BUILDERS = {
    "gymma-lbf": lbf.build,
    "gymma-rware": rware.build,
    "gymma-mpe": spread.build,
    "overcooked": overcooked.build,
    "pressureplate": pressureplate.build,
    "capturetarget": capture_target.build,
    "boxpushing": box_pushing.build,
}

# one representative key per family, used by smoke tooling
CANONICAL_KEYS = {
    "gymma-lbf": "Foraging-8x8-2p-2f-coop-v2",
    "gymma-rware": "rware-tiny-2ag-hard-v1",
    "gymma-mpe": "SimpleSpread-3-v0",
    "overcooked": "cramped_room",
    "pressureplate": "pressureplate-linear-4p-v0",
    "capturetarget": "CaptureTarget-6x6-1t-2a-v0",
    "boxpushing": "BoxPushing-6x6-2a-v0",
}


def make_env(cfg: EnvConfig) -> Environment:
    """Validate the config and build the environment it names."""
    cfg = cfg.validated()
    return FAMILY_BUILDERS[cfg.env_family](cfg)


__all__ = [
    "BadActionError",
    "BadExtraError",
    "CANONICAL_KEYS",
    "ClosedError",
    "EnvConfig",
    "EnvError",
    "Environment",
    "EpisodeOverError",
    "FAMILY_BUILDERS",
    "Policy",
    "UnknownKeyError",
    "UnsatisfiableSpawnError",
    "make_env",
    "random_policy",
    "run_episode",
]
