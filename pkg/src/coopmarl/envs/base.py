"""Environment contract shared by every task family.

Lifecycle: build -> reset() -> step() until done -> reset() ...
Observations and the global state are computed once per transition and
cached, so repeated get_obs()/get_state() calls return identical values and
consume no randomness. The returned arrays are the cached ones: treat them
as read-only and copy before storing across steps. step() on a finished or
never-reset episode raises EpisodeOverError; any call on a closed handle
raises ClosedError.

The global state defaults to the concatenation of all per-agent
observations. Environments that can encode the full situation more cheaply
or losslessly override _global_state() and document the layout.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from operator import index
from typing import Callable

import numpy as np

from ..config import EnvConfig, EpisodeRecord, JointAction, ObsStateSnapshot, StepOutcome
from ..errors import BadActionError, ClosedError, EpisodeOverError
from ..rng import ENV_STREAM, RngStream


class Environment(ABC):
    def __init__(self, cfg: EnvConfig, n_agents: int, n_actions: int):
        self.cfg = cfg
        self.n_agents = n_agents
        self.n_actions = n_actions
        self.time_limit = cfg.horizon()
        self._rng = RngStream(cfg.seed, ENV_STREAM)
        self._t = 0
        self._needs_reset = True
        self._closed = False
        self._obs: list[np.ndarray] | None = None
        self._state: np.ndarray | None = None

    # ------------------------------------------------------------------
    # subclass hooks

    @abstractmethod
    def _do_reset(self) -> None:
        """Draw a fresh initial configuration from self._rng."""

    @abstractmethod
    def _do_step(self, actions: list[int]) -> tuple[list[float], bool]:
        """Advance one tick; return (per-agent rewards, true-terminal flag)."""

    @abstractmethod
    def _observe(self) -> list[np.ndarray]:
        """Per-agent observation vectors for the current situation."""

    def _global_state(self) -> np.ndarray:
        assert self._obs is not None
        return np.concatenate(self._obs)

    def render(self) -> str:
        """Text dump of the current situation; overridden per family."""
        return f"{type(self).__name__}(t={self._t})"

    # ------------------------------------------------------------------
    # public API

    def get_total_actions(self) -> int:
        return self.n_actions

    @property
    def obs_dims(self) -> list[int]:
        """Per-agent observation lengths (fixed for the life of the env)."""
        return list(self._obs_dims())

    @abstractmethod
    def _obs_dims(self) -> list[int]:
        ...

    @property
    def state_dim(self) -> int:
        return int(sum(self._obs_dims()))

    def reset(self) -> ObsStateSnapshot:
        self._check_open()
        self._do_reset()
        self._t = 0
        self._needs_reset = False
        self._refresh()
        assert self._obs is not None and self._state is not None
        return ObsStateSnapshot(obs=self._obs, state=self._state)

    def step(self, actions: JointAction) -> StepOutcome:
        self._check_open()
        if self._needs_reset:
            raise EpisodeOverError("episode is over; call reset()")
        acts = self._validate_actions(actions)
        agent_rewards, terminal = self._do_step(acts)
        self._t += 1
        truncated = (not terminal) and self._t >= self.time_limit
        done = terminal or truncated
        if done:
            self._needs_reset = True
        self._refresh()
        info = {"truncated": truncated, "agent_rewards": list(agent_rewards)}
        return StepOutcome(reward=float(sum(agent_rewards)), done=done, info=info)

    def get_obs(self) -> list[np.ndarray]:
        self._check_open()
        if self._obs is None:
            raise EpisodeOverError("no observation before the first reset()")
        return self._obs

    def get_state(self) -> np.ndarray:
        self._check_open()
        if self._state is None:
            raise EpisodeOverError("no state before the first reset()")
        return self._state

    def snapshot(self) -> ObsStateSnapshot:
        return ObsStateSnapshot(obs=self.get_obs(), state=self.get_state())

    def close(self) -> None:
        self._closed = True

    # ------------------------------------------------------------------

    def _refresh(self) -> None:
        self._obs = self._observe()
        self._state = self._global_state()

    def _check_open(self) -> None:
        if self._closed:
            raise ClosedError("environment handle is closed")

    def _validate_actions(self, actions: JointAction) -> list[int]:
        try:
            acts = [index(a) for a in actions]
        except TypeError as exc:
            raise BadActionError(f"joint action not integer-valued: {actions!r}") from exc
        if len(acts) != self.n_agents:
            raise BadActionError(
                f"expected {self.n_agents} actions, got {len(acts)}"
            )
        n = self.n_actions
        for a in acts:
            if not 0 <= a < n:
                raise BadActionError(f"action {a} out of range [0, {n})")
        return acts


Policy = Callable[[list[np.ndarray], int], list[int]]


def random_policy(rng: RngStream) -> Policy:
    def act(obs: list[np.ndarray], n_actions: int) -> list[int]:
        return [rng.randint(n_actions) for _ in obs]

    return act


def run_episode(env: Environment, policy: Policy, record: bool = True) -> EpisodeRecord:
    """Roll one episode to completion under `policy`.

    policy(obs, n_actions) -> joint action. record=False skips the obs and
    state copies (throughput measurements want the bare loop) but keeps the
    scalar per-step records.
    """
    obs, state = env.reset()
    observations = [[o.copy() for o in obs]] if record else []
    states = [state.copy()] if record else []
    actions: list[list[int]] = []
    rewards: list[float] = []
    agent_rewards: list[list[float]] = []
    terminated = False
    truncated = False
    done = False
    while not done:
        acts = policy(obs, env.n_actions)
        out = env.step(acts)
        obs = env.get_obs()
        done = out.done
        actions.append(list(acts))
        rewards.append(out.reward)
        agent_rewards.append(out.info["agent_rewards"])
        if record:
            observations.append([o.copy() for o in obs])
            states.append(env.get_state().copy())
        if done:
            truncated = out.info["truncated"]
            terminated = not truncated
    return EpisodeRecord(
        observations=observations,
        states=states,
        actions=actions,
        rewards=rewards,
        agent_rewards=agent_rewards,
        terminated=terminated,
        truncated=truncated,
    )
