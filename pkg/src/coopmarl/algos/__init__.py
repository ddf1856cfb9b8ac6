"""Learners: value factorization and on-policy actor-critics.

All learners share a small surface: ``zero_hidden``, ``act`` over
(n_agents, n_envs, obs_dim) stacks, ``update`` over padded episode
batches, and checkpoint entry dicts.
"""
from __future__ import annotations

from ..rng import RngStream
from .actor_critic import ActorCriticLearner, PPOLearner, Rollout, n_step_returns
from .common import (ActorCriticConfig, MultiAgentNet, PPOConfig, QmixConfig, RunningMeanStd,
                     episode_inputs, epsilon, one_hot, sample_actions, select_actions,
                     stack_agent_inputs)
from .qmix import MonotonicMixer, QmixLearner

ALGO_IDS = ("qmix", "maa2c", "mappo")

_CONFIGS = {"qmix": QmixConfig, "maa2c": ActorCriticConfig, "mappo": PPOConfig}
_LEARNERS = {"qmix": QmixLearner, "maa2c": ActorCriticLearner, "mappo": PPOLearner}


def default_config(algo: str):
    if algo not in _CONFIGS:
        raise KeyError(f"unknown algorithm {algo!r}; known: {ALGO_IDS}")
    return _CONFIGS[algo]()


def env_info(env) -> dict:
    """Learner-facing sizes of an environment (uniform per-agent obs)."""
    dims = env.obs_dims
    if len(set(dims)) != 1:
        raise ValueError(f"per-agent observation sizes differ: {dims}")
    return {
        "n_agents": env.n_agents,
        "n_actions": env.n_actions,
        "obs_dim": dims[0],
        "state_dim": env.state_dim,
    }


def build_learner(algo: str, info: dict, cfg, rng: RngStream):
    if algo not in _LEARNERS:
        raise KeyError(f"unknown algorithm {algo!r}; known: {ALGO_IDS}")
    return _LEARNERS[algo](info, cfg, rng)


__all__ = [
    "ALGO_IDS",
    "ActorCriticConfig",
    "ActorCriticLearner",
    "MonotonicMixer",
    "MultiAgentNet",
    "PPOConfig",
    "PPOLearner",
    "QmixConfig",
    "QmixLearner",
    "Rollout",
    "RunningMeanStd",
    "build_learner",
    "default_config",
    "env_info",
    "episode_inputs",
    "epsilon",
    "n_step_returns",
    "one_hot",
    "sample_actions",
    "select_actions",
    "stack_agent_inputs",
]
