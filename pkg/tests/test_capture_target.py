"""Capture target: flicker statistics, pursuit dynamics, capture rewards."""
from __future__ import annotations

import numpy as np
import pytest

from coopmarl.config import EnvConfig
from coopmarl.envs import make_env
from coopmarl.envs.capture_target import GRID, STAY, CaptureTargetEnv
from coopmarl.rng import RngStream

from helpers import assert_vec

KEY = "CaptureTarget-6x6-1t-2a-v0"
NORTH, SOUTH, WEST, EAST = 0, 1, 2, 3


def build(seed: int = 1, time_limit: int | None = None, **extras) -> CaptureTargetEnv:
    env = make_env(EnvConfig("capturetarget", KEY, seed=seed, time_limit=time_limit, extras=extras))
    env.reset()
    return env


def place(env, agents, target):
    env._agents = list(agents)
    env._target = tuple(target)
    env._refresh()


def test_handle_shape():
    env = build()
    assert env.n_agents == 2
    assert env.n_actions == 5
    assert env.obs_dims == [4, 4]
    assert env.state_dim == 8


def test_golden_normalized_observation():
    # grid cells divide by 2.5: (1,1) reads 0.4, column 4 reads 1.6
    env = build(target_flick_prob=0.0)
    place(env, [(1, 1), (4, 4)], (1, 4))
    assert_vec(env.get_obs()[0], [0.4, 0.4, 0.4, 1.6])
    assert_vec(env.get_obs()[1], [1.6, 1.6, 0.4, 1.6])


def test_flick_zero_target_always_visible():
    env = build(target_flick_prob=0.0)
    rng = RngStream(2, 6)
    for _ in range(200):
        if env.step([rng.randint(5), rng.randint(5)]).done:
            env.reset()
        for obs in env.get_obs():
            assert obs[2] >= 0.0 and obs[3] >= 0.0


def test_flick_one_target_never_visible():
    env = build(target_flick_prob=1.0)
    rng = RngStream(3, 6)
    for _ in range(200):
        if env.step([rng.randint(5), rng.randint(5)]).done:
            env.reset()
        for obs in env.get_obs():
            assert obs[2] == -1.0 and obs[3] == -1.0


def test_flick_frequency_statistics():
    # two draws per step: 1e5 sentinel trials land within 0.005 of 0.3
    env = build(
        seed=8,
        time_limit=60_000,
        target_flick_prob=0.3,
        agent_trans_noise=0.0,
        tgt_avoid_agent=False,
    )
    place(env, [(0, 0), (0, 5)], (5, 2))
    hits = 0
    n = 50_000
    for _ in range(n):
        env.step([STAY, STAY])
        for obs in env.get_obs():
            if obs[2] == -1.0:
                hits += 1
    assert abs(hits / (2 * n) - 0.3) < 0.005


def test_state_never_flickers():
    env = build(target_flick_prob=1.0, agent_trans_noise=0.0, tgt_avoid_agent=False)
    place(env, [(0, 0), (0, 5)], (5, 2))
    env.step([STAY, STAY])
    state = env.get_state()
    tr, tc = env._target
    assert state[2] == tr / 2.5 and state[3] == tc / 2.5
    assert (state >= 0.0).all()


def test_capture_needs_both_agents():
    env = build(agent_trans_noise=0.0, target_flick_prob=0.0)
    place(env, [(2, 3), (3, 2)], (3, 3))
    out = env.step([SOUTH, EAST])  # both converge on the target
    assert out.reward == 1.0
    assert out.info["agent_rewards"] == [0.5, 0.5]
    assert out.done and not out.info["truncated"]

    env2 = build(agent_trans_noise=0.0, target_flick_prob=0.0)
    place(env2, [(2, 3), (0, 0)], (3, 3))
    out2 = env2.step([SOUTH, STAY])
    assert out2.reward == 0.0
    assert not out2.done


def test_moves_deterministic_without_noise():
    env = build(agent_trans_noise=0.0, target_flick_prob=0.0, tgt_avoid_agent=False, tgt_trans_noise=0.0)
    place(env, [(2, 2), (4, 4)], (0, 0))
    env.step([NORTH, WEST])
    assert env._agents == [(1, 2), (4, 3)]


def test_boundary_moves_clamp():
    env = build(agent_trans_noise=0.0)
    place(env, [(0, 0), (5, 5)], (3, 3))
    env.step([NORTH, SOUTH])
    assert env._agents == [(0, 0), (5, 5)]


def test_noise_replaces_intent_with_adjacent_move():
    env = build(seed=4, agent_trans_noise=1.0, target_flick_prob=0.0, tgt_avoid_agent=False)
    seen = set()
    for _ in range(100):
        place(env, [(3, 3), (0, 0)], (5, 5))
        env._t = 0
        env._needs_reset = False
        env.step([STAY, STAY])
        seen.add(env._agents[0])
    # a Stay intent under full noise always becomes one of the four moves
    assert seen == {(2, 3), (4, 3), (3, 2), (3, 4)}


def test_target_flees_nearest_agent_along_wider_axis():
    env = build(agent_trans_noise=0.0, tgt_trans_noise=0.0, target_flick_prob=0.0)
    # nearest is (0, 2); rows differ more than columns, so it steps south
    place(env, [(0, 2), (5, 5)], (2, 2))
    env.step([STAY, STAY])
    assert env._target == (3, 2)

    # column separation dominates: it steps east, away from (3, 1)
    place(env, [(3, 1), (0, 0)], (2, 3))
    env._t = 0
    env._needs_reset = False
    env.step([STAY, STAY])
    assert env._target == (2, 4)

    # equal separation on both axes prefers the row move
    place(env, [(4, 4), (5, 5)], (2, 2))
    env._t = 0
    env._needs_reset = False
    env.step([STAY, STAY])
    assert env._target == (1, 2)


def test_target_blocked_flight_falls_back_then_stays():
    env = build(agent_trans_noise=0.0, tgt_trans_noise=0.0, target_flick_prob=0.0)
    # fleeing north is off-grid and the columns align, so it freezes
    place(env, [(2, 3), (5, 0)], (0, 3))
    env.step([STAY, STAY])
    assert env._target == (0, 3)

    # primary row flight blocked at the wall: falls back to the column move
    place(env, [(2, 4), (5, 0)], (0, 3))
    env._t = 0
    env._needs_reset = False
    env.step([STAY, STAY])
    assert env._target == (0, 2)


def test_target_uniform_when_not_avoiding():
    env = build(seed=6, agent_trans_noise=0.0, tgt_avoid_agent=False, target_flick_prob=0.0)
    seen = set()
    for _ in range(200):
        place(env, [(0, 0), (0, 5)], (3, 3))
        env._t = 0
        env._needs_reset = False
        env.step([STAY, STAY])
        seen.add(env._target)
    assert seen == {(2, 3), (4, 3), (3, 2), (3, 4), (3, 3)}


def test_one_hot_observation_mode():
    env = build(obs_one_hot=True, target_flick_prob=0.0)
    assert env.obs_dims == [72, 72]
    assert env.state_dim == 144
    place(env, [(1, 1), (4, 4)], (1, 4))
    obs = env.get_obs()[0]
    expected = np.zeros(72)
    expected[1 * GRID + 1] = 1.0
    expected[36 + 1 * GRID + 4] = 1.0
    assert_vec(obs, expected)


def test_one_hot_flicker_zeroes_target_block():
    env = build(obs_one_hot=True, target_flick_prob=1.0)
    place(env, [(1, 1), (4, 4)], (1, 4))
    for obs in env.get_obs():
        assert obs[:36].sum() == 1.0
        assert obs[36:].sum() == 0.0


def test_reward_binary_under_random_play():
    env = build(seed=9)
    rng = RngStream(11, 6)
    for _ in range(3000):
        out = env.step([rng.randint(5), rng.randint(5)])
        assert out.reward in (0.0, 1.0)
        if out.reward == 1.0:
            assert out.done
        if out.done:
            env.reset()


def test_capture_rate_under_transition_noise():
    # converging from adjacent cells captures unless noise diverts a move:
    # success probability (1 - 0.1)^2 = 0.81
    env = build(seed=13)
    captures = 0
    trials = 200
    for _ in range(trials):
        place(env, [(2, 3), (3, 2)], (3, 3))
        env._t = 0
        env._needs_reset = False
        out = env.step([SOUTH, EAST])
        if out.reward == 1.0:
            assert out.done
            captures += 1
    assert abs(captures / trials - 0.81) < 0.1
