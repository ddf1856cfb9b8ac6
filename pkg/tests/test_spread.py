"""Cooperative navigation: observation layout, physics, reward formula."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import coopmarl.envs.spread as spread_mod
from coopmarl.config import EnvConfig
from coopmarl.envs import make_env
from coopmarl.envs.spread import AGENT_RADIUS, DAMPING, DT, GAIN, SpreadEnv, parse_key
from coopmarl.errors import UnknownKeyError
from coopmarl.rng import RngStream

from helpers import assert_vec

NONE, LEFT_A, RIGHT_A, DOWN_A, UP_A = range(5)


def build(n: int = 3, seed: int = 1) -> SpreadEnv:
    env = make_env(EnvConfig("gymma-mpe", f"SimpleSpread-{n}-v0", seed=seed))
    env.reset()
    return env


def place(env, pos, marks, vel=None):
    env._pos[:] = np.asarray(pos, dtype=float)
    env._marks[:] = np.asarray(marks, dtype=float)
    env._vel[:] = 0.0 if vel is None else np.asarray(vel, dtype=float)
    env._refresh()


def oracle_rewards(pos: np.ndarray, marks: np.ndarray) -> list[float]:
    """Direct evaluation of the documented formula."""
    n = len(pos)
    shared = -sum(
        min(np.linalg.norm(pos[i] - marks[k]) for i in range(n)) for k in range(n)
    )
    rewards = [shared] * n
    for i in range(n):
        for j in range(n):
            if i != j and np.linalg.norm(pos[i] - pos[j]) < 2 * AGENT_RADIUS:
                rewards[i] -= 1.0
    return rewards


# ---------------------------------------------------------------------------
# keys and dimensions


def test_key_parsing():
    assert parse_key("SimpleSpread-3-v0") == 3
    assert parse_key("mpe:SimpleSpread-8-v0") == 8
    for bad in ("SimpleSpread-1-v0", "SimpleTag-3-v0", "SimpleSpread-3-v1"):
        with pytest.raises(UnknownKeyError):
            parse_key(bad)


def test_observation_lengths():
    for n, d in ((3, 18), (4, 24), (5, 30), (8, 48)):
        env = build(n)
        assert env.obs_dims == [d] * n
        assert all(o.shape == (d,) for o in env.get_obs())


def test_initial_placement_bounds():
    for seed in range(10):
        env = build(3, seed=seed)
        assert (np.abs(env._pos) <= 1.0).all()
        assert (np.abs(env._marks) <= 1.0).all()
        assert (env._vel == 0).all()


# ---------------------------------------------------------------------------
# observation layout


def test_observation_layout_golden():
    env = build(3)
    pos = [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0)]
    marks = [(0.5, 0.5), (-1.0, 0.0), (2.0, 2.0)]
    place(env, pos, marks, vel=[(0.1, -0.2), (0, 0), (0, 0)])
    expected = [
        0.1, -0.2,              # own velocity
        0.0, 0.0,               # own position
        0.5, 0.5, -1.0, 0.0, 2.0, 2.0,   # landmarks relative
        1.0, 0.0, 0.0, 2.0,     # other agents relative
        0.0, 0.0, 0.0, 0.0,     # trailing zero block
    ]
    assert_vec(env.get_obs()[0], expected)


def test_agent_on_landmark_reads_zero_pair():
    env = build(3)
    place(env, [(0.3, -0.4), (1, 1), (-1, -1)], [(0.3, -0.4), (0, 0), (2, 2)])
    assert_vec(env.get_obs()[0][4:6], [0.0, 0.0])


def test_relative_entries_translation_invariant():
    env = build(3, seed=2)
    obs_a = [o.copy() for o in env.get_obs()]
    shift = np.array([0.731, -1.25])
    env2 = build(3, seed=2)
    place(env2, env._pos + shift, env._marks + shift, env._vel)
    obs_b = env2.get_obs()
    for a, b in zip(obs_a, obs_b):
        assert np.abs(a[4:] - b[4:]).max() < 1e-9  # relative block unchanged
        assert np.abs((b[2:4] - a[2:4]) - shift).max() < 1e-9


# ---------------------------------------------------------------------------
# physics


def test_noop_at_rest_stays_put():
    env = build(3)
    place(env, [(0, 0), (1, 1), (-1, -1)], [(2, 2), (2, -2), (-2, 2)])
    before = env._pos.copy()
    env.step([NONE, NONE, NONE])
    assert (env._pos == before).all()


def test_one_step_hand_integration():
    # far apart, so contact forces vanish exactly in float64
    env = build(3)
    place(env, [(0, 0), (10, 10), (-10, -10)], [(2, 2), (2, -2), (-2, 2)])
    env.step([RIGHT_A, NONE, NONE])
    v = GAIN * DT  # 0 * (1 - damping) + 1 * gain * dt
    assert env._vel[0, 0] == pytest.approx(v, abs=1e-12)
    assert env._vel[0, 1] == 0.0
    assert env._pos[0, 0] == pytest.approx(v * DT, abs=1e-12)


def test_second_step_applies_damping():
    env = build(3)
    place(env, [(0, 0), (10, 10), (-10, -10)], [(2, 2), (2, -2), (-2, 2)])
    env.step([RIGHT_A, NONE, NONE])
    env.step([NONE, NONE, NONE])
    assert env._vel[0, 0] == pytest.approx(GAIN * DT * (1 - DAMPING), abs=1e-12)


def test_action_force_directions():
    env = build(3)
    for action, sign, axis in ((LEFT_A, -1, 0), (RIGHT_A, 1, 0), (DOWN_A, -1, 1), (UP_A, 1, 1)):
        place(env, [(0, 0), (10, 10), (-10, -10)], [(2, 2), (2, -2), (-2, 2)])
        env.step([action, NONE, NONE])
        assert sign * env._vel[0, axis] > 0
        assert env._vel[0, 1 - axis] == 0.0


def test_overlapping_agents_pushed_apart():
    env = build(3)
    place(env, [(0, 0), (0.1, 0), (10, 10)], [(2, 2), (2, -2), (-2, 2)])
    env.step([NONE, NONE, NONE])
    assert env._pos[0, 0] < 0.0  # pushed -x
    assert env._pos[1, 0] > 0.1  # pushed +x


def test_deep_overlap_is_finite():
    # near-coincident agents must not overflow the contact computation
    env = build(3)
    place(env, [(0, 0), (1e-12, 0), (10, 10)], [(2, 2), (2, -2), (-2, 2)])
    out = env.step([NONE, NONE, NONE])
    assert np.isfinite(env._pos).all() and np.isfinite(env._vel).all()
    assert np.isfinite(out.reward)


def test_max_speed_extra_clamps():
    env = make_env(
        EnvConfig("gymma-mpe", "SimpleSpread-3-v0", seed=1, extras={"max_speed": 0.2})
    )
    env.reset()
    for _ in range(20):
        out = env.step([RIGHT_A, RIGHT_A, RIGHT_A])
        speeds = np.sqrt((env._vel**2).sum(axis=1))
        assert (speeds <= 0.2 + 1e-12).all()
        if out.done:
            env.reset()


def test_mirror_symmetry():
    env1 = build(3, seed=5)
    env2 = build(3, seed=5)
    place(env2, env1._pos * [-1, 1], env1._marks * [-1, 1], env1._vel * [-1, 1])
    mirror_action = {NONE: NONE, LEFT_A: RIGHT_A, RIGHT_A: LEFT_A, DOWN_A: DOWN_A, UP_A: UP_A}
    rng = RngStream(10, 3)
    for _ in range(20):
        acts = [rng.randint(5) for _ in range(3)]
        out1 = env1.step(acts)
        out2 = env2.step([mirror_action[a] for a in acts])
        assert np.abs(env1._pos * [-1, 1] - env2._pos).max() == 0.0
        assert out1.reward == out2.reward


# ---------------------------------------------------------------------------
# rewards


def test_landmarks_covered_zero_reward(monkeypatch):
    monkeypatch.setattr(spread_mod, "CONTACT", 0.0)  # freeze the configuration
    env = build(3)
    marks = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    place(env, marks, marks)
    out = env.step([NONE, NONE, NONE])
    assert out.reward == pytest.approx(0.0, abs=1e-12)


def test_one_colliding_pair_costs_two(monkeypatch):
    monkeypatch.setattr(spread_mod, "CONTACT", 0.0)
    env = build(3)
    pos = [(0.0, 0.0), (0.2, 0.0), (5.0, 5.0)]
    place(env, pos, pos)  # landmarks exactly under the agents
    out = env.step([NONE, NONE, NONE])
    assert out.reward == pytest.approx(-2.0, abs=1e-12)
    assert out.info["agent_rewards"] == pytest.approx([-1.0, -1.0, 0.0], abs=1e-12)


def test_three_way_overlap_counts_pairwise(monkeypatch):
    monkeypatch.setattr(spread_mod, "CONTACT", 0.0)
    env = build(3)
    pos = [(0.0, 0.0), (0.1, 0.0), (0.05, 0.05)]
    place(env, pos, pos)
    out = env.step([NONE, NONE, NONE])
    # each agent overlaps two partners: -2 each on top of the shared term
    assert out.info["agent_rewards"] == pytest.approx([-2.0, -2.0, -2.0], abs=1e-12)


def test_reward_matches_oracle_random_configs():
    env = build(4, seed=3)
    rng = RngStream(14, 3)
    for _ in range(50):
        out = env.step([rng.randint(5) for _ in range(4)])
        expected = oracle_rewards(env._pos, env._marks)
        assert out.info["agent_rewards"] == pytest.approx(expected, abs=1e-9)
        if out.done:
            env.reset()


@given(seed=st.integers(min_value=0, max_value=5000))
@settings(max_examples=20, deadline=None)
def test_team_reward_never_positive(seed):
    env = build(3, seed=seed)
    rng = RngStream(seed, 4)
    done = False
    while not done:
        out = env.step([rng.randint(5) for _ in range(3)])
        assert out.reward <= 1e-12
        done = out.done


def test_episode_ends_only_by_time_limit():
    env = build(3)
    for i in range(1, env.time_limit + 1):
        out = env.step([NONE, NONE, NONE])
    assert out.done and out.info["truncated"]
