"""Cooperative multi-agent RL suite.

Seven fully-cooperative environments behind one contract, three learners
built on a from-scratch float64 network kernel, an evaluation harness, and
a TCP serving layer exposing the whole thing over framed JSON.
"""
from __future__ import annotations

from .config import EnvConfig, EpisodeRecord, ObsStateSnapshot, StepOutcome
from .envs import Environment, make_env, random_policy, run_episode
from .rng import RngStream, rng_stream

__all__ = [
    "EnvConfig",
    "Environment",
    "EpisodeRecord",
    "ObsStateSnapshot",
    "RngStream",
    "StepOutcome",
    "make_env",
    "random_policy",
    "rng_stream",
    "run_episode",
]

__version__ = "0.1.0"
