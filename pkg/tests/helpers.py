"""Shared helpers for the test suite (importable, unlike conftest)."""
from __future__ import annotations

import numpy as np

from coopmarl.config import EnvConfig
from coopmarl.rng import RngStream

# One fast config per family. Time limits are trimmed for the three
# 500-step tasks so whole-episode tests stay quick; dims and dynamics do
# not depend on the horizon.
FAST_CONFIGS = {
    "gymma-lbf": EnvConfig("gymma-lbf", "Foraging-8x8-2p-3f-v2", seed=11),
    "gymma-rware": EnvConfig("gymma-rware", "rware-tiny-4ag-v1", seed=11, time_limit=80),
    "gymma-mpe": EnvConfig("gymma-mpe", "SimpleSpread-3-v0", seed=11),
    "overcooked": EnvConfig("overcooked", "cramped_room", seed=11, time_limit=80),
    "pressureplate": EnvConfig("pressureplate", "pressureplate-linear-4p-v0", seed=11, time_limit=80),
    "capturetarget": EnvConfig("capturetarget", "CaptureTarget-6x6-1t-2a-v0", seed=11),
    "boxpushing": EnvConfig("boxpushing", "BoxPushing-6x6-2a-v0", seed=11),
}


def rollout(env, n_steps: int, rng: RngStream):
    """Drive env with random actions; returns (actions, rewards, obs, states)."""
    if env._needs_reset:
        env.reset()
    actions, rewards, obs, states = [], [], [env.get_obs()], [env.get_state()]
    for _ in range(n_steps):
        a = [rng.randint(env.n_actions) for _ in range(env.n_agents)]
        out = env.step(a)
        actions.append(a)
        rewards.append(out.reward)
        obs.append(env.get_obs())
        states.append(env.get_state())
        if out.done:
            env.reset()
            obs.append(env.get_obs())
            states.append(env.get_state())
    return actions, rewards, obs, states


def assert_vec(actual: np.ndarray, expected, tol: float = 0.0) -> None:
    expected = np.asarray(expected, dtype=float)
    assert actual.shape == expected.shape, (actual.shape, expected.shape)
    if tol == 0.0:
        assert (actual == expected).all(), (actual, expected)
    else:
        assert np.abs(actual - expected).max() <= tol, (actual, expected)
