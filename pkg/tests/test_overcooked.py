"""Kitchen cooperation: featurization goldens, interact rules, reward events.

The layout under test (row, col from the top-left):

    col    0    1    2    3    4
    row 0  X    X    P    P    X
    row 1  O    .    1    .    O
    row 2  X    .    2    .    X
    row 3  X    D    X    S    X

oracle_featurize is an independent re-derivation of the 46-entry player
vector used to cross-check the environment's own featurizer.
"""
from __future__ import annotations

import numpy as np
import pytest

from coopmarl.config import EnvConfig
from coopmarl.envs import make_env
from coopmarl.envs.overcooked import (
    EAST,
    INTERACT,
    NOOP,
    NORTH,
    SOUTH,
    WEST,
    OvercookedEnv,
)
from coopmarl.errors import UnknownKeyError
from coopmarl.rng import RngStream

from helpers import assert_vec


def build(reward_type: str = "sparse", **extras) -> OvercookedEnv:
    extras = {"reward_type": reward_type, **extras}
    env = make_env(EnvConfig("overcooked", "cramped_room", seed=3, extras=extras))
    env.reset()
    return env


def place(env, pos, orient, held):
    env._pos = list(pos)
    env._orient = list(orient)
    env._held = list(held)
    env._refresh()


# ---------------------------------------------------------------------------
# featurization goldens

POT_IDLE = [1, 1, 0, 0, 0, 0, 0, -1]


def test_reset_observation_golden():
    env = build()
    # cook 0 at (1, 2), cook 1 at (2, 2), both facing north, hands empty
    feats0 = (
        [1, 0, 0, 0] + [0, 0, 0, 0] + [1, 0, 0, 0]
        + [-2, 0] + [0, 0] + [-1, 2] + [0, 0] + [1, 2] + [-1, -1] + [0, 0]
        + POT_IDLE + [0, -1]
        + POT_IDLE + [1, -1]
    )
    feats1 = (
        [1, 0, 0, 0] + [0, 0, 0, 0] + [0, 1, 0, 0]
        + [-2, -1] + [0, 0] + [-1, 1] + [0, 0] + [1, 1] + [0, 1] + [0, 0]
        + POT_IDLE + [0, -2]
        + POT_IDLE + [1, -2]
    )
    obs = env.get_obs()
    assert_vec(obs[0], feats0 + feats1 + [0, 1, 2, 1])
    assert_vec(obs[1], feats1 + feats0 + [0, -1, 2, 2])


def test_held_item_slots():
    env = build()
    place(env, [(1, 1), (2, 3)], [SOUTH, EAST], ["onion", None])
    obs = env.get_obs()
    assert_vec(obs[0][:8], [0, 1, 0, 0, 1, 0, 0, 0])
    assert_vec(obs[0][12:14], [0, 0])  # held onion reads (0, 0)

    place(env, [(1, 1), (2, 3)], [WEST, NORTH], ["dish", ("soup", 3)])
    obs = env.get_obs()
    assert obs[0][6] == 1.0 and obs[0][4] == 0.0
    assert obs[1][5] == 1.0
    assert obs[1][24] == 3.0  # held soup's onion count


def test_ready_pot_is_a_soup_source():
    env = build()
    env._pots[0].onions = 3
    env._pots[0].timer = 0
    env._pots[0].ready = True
    place(env, [(1, 2), (2, 2)], [NORTH, NORTH], [None, None])
    obs = env.get_obs()
    assert_vec(obs[0][18:20], [0, -1])  # nearest soup: the ready pot at (0, 2)
    assert obs[0][24] == 3.0
    # pot block: exists, not empty, full, not cooking, ready, timer 0
    assert_vec(obs[0][26:34], [1, 0, 1, 0, 1, 3, 0, 0])


def test_cooking_pot_block_and_counter_items():
    env = build()
    env._pots[1].onions = 3
    env._pots[1].timer = 7
    env._counter_items[(0, 1)] = "onion"
    env._counter_items[(2, 4)] = "dish"
    place(env, [(1, 1), (2, 3)], [NORTH, SOUTH], [None, None])
    obs = env.get_obs()
    # loose onion at (0, 1) ties the dispenser at distance 1, wins row-major
    assert_vec(obs[0][12:14], [0, -1])
    assert_vec(obs[1][16:18], [1, 0])  # loose dish at (2, 4) beats the dispenser
    # cook 0's second-closest pot is (0, 3): cooking block with 13 ticks gone
    assert_vec(obs[0][36:44], [1, 0, 1, 1, 0, 3, 0, 7])
    # (0, 1) no longer counts as an empty counter for cook 0
    assert_vec(obs[0][22:24], [-1, -1])  # nearest empty counter is now (0, 0)


def oracle_featurize(env, i):
    grid = env._grid
    rows, cols = grid.shape
    me = env._pos[i]
    held = env._held[i]
    deltas = {0: (-1, 0), 1: (1, 0), 2: (0, 1), 3: (0, -1)}

    def manh(cell):
        return abs(cell[0] - me[0]) + abs(cell[1] - me[1])

    def nearest(cells):
        ranked = sorted(cells, key=lambda p: (manh(p), p[0], p[1]))
        return ranked[0] if ranked else None

    def offset(cell):
        return [0.0, 0.0] if cell is None else [float(cell[1] - me[1]), float(cell[0] - me[0])]

    out = [0.0] * 8
    out[env._orient[i]] = 1.0
    if held == "onion":
        out[4] = 1.0
    elif held == "dish":
        out[6] = 1.0
    elif held is not None:
        out[5] = 1.0
    for d in range(4):
        rr, cc = me[0] + deltas[d][0], me[1] + deltas[d][1]
        blocked = not (0 <= rr < rows and 0 <= cc < cols) or grid[rr, cc] != 0
        out.append(1.0 if blocked else 0.0)

    loose = env._counter_items
    onion_cells = [p for p, it in loose.items() if it == "onion"] + list(env._onion_disp)
    dish_cells = [p for p, it in loose.items() if it == "dish"] + list(env._dish_disp)
    soup_cells = [p for p, it in loose.items() if isinstance(it, tuple)]
    soup_cells += [env._pot_cells[j] for j, pot in enumerate(env._pots) if pot.ready]

    out += [0.0, 0.0] if held == "onion" else offset(nearest(onion_cells))
    out += [0.0, 0.0]  # no tomatoes exist in this kitchen
    out += [0.0, 0.0] if held == "dish" else offset(nearest(dish_cells))
    n_onions = 0
    if isinstance(held, tuple):
        out += [0.0, 0.0]
        n_onions = held[1]
    else:
        cell = nearest(soup_cells)
        out += offset(cell)
        if cell is not None:
            if cell in env._pot_cells:
                n_onions = env._pots[env._pot_cells.index(cell)].onions
            else:
                n_onions = loose[cell][1]
    out += offset(nearest(env._serve_cells))
    out += offset(nearest([p for p in env._counter_cells if p not in loose]))
    out += [float(n_onions), 0.0]

    for cell in sorted(env._pot_cells, key=lambda p: (manh(p), p[0], p[1]))[:2]:
        pot = env._pots[env._pot_cells.index(cell)]
        cooking = pot.timer > 0
        out += [
            1.0,
            1.0 if (pot.onions == 0 and not pot.ready) else 0.0,
            1.0 if pot.onions == env.recipe_size else 0.0,
            1.0 if cooking else 0.0,
            1.0 if pot.ready else 0.0,
            float(pot.onions),
            0.0,
            float(pot.timer) if cooking else (0.0 if pot.ready else -1.0),
        ]
        out += offset(cell)
    while len(out) < 46:
        out.append(0.0)
    return np.array(out)


def oracle_obs(env, i):
    mine = oracle_featurize(env, i)
    other = oracle_featurize(env, 1 - i)
    me, them = env._pos[i], env._pos[1 - i]
    tail = [float(them[1] - me[1]), float(them[0] - me[0]), float(me[1]), float(me[0])]
    return np.concatenate([mine, other, tail])


def test_featurization_matches_oracle_along_random_walk():
    env = build(reward_type="shaped")
    rng = RngStream(17, 4)
    for step in range(300):
        if env.step([rng.randint(6), rng.randint(6)]).done:
            env.reset()
        obs = env.get_obs()
        for i in range(2):
            ours = oracle_obs(env, i)
            np.testing.assert_allclose(obs[i], ours, atol=1e-12, err_msg=f"step {step} cook {i}")


def test_observation_dims():
    env = build()
    assert env.obs_dims == [96, 96]
    assert env.state_dim == 192
    assert_vec(env.get_state(), np.concatenate(env.get_obs()))


# ---------------------------------------------------------------------------
# movement


def test_move_into_wall_turns_in_place():
    env = build()
    env.step([NORTH, NOOP])  # (0, 2) is a pot cell
    assert env._pos[0] == (1, 2)
    assert env._orient[0] == NORTH
    env.step([WEST, NOOP])
    assert env._pos[0] == (1, 1)
    assert env._orient[0] == WEST


def test_same_target_blocks_both():
    env = build()
    place(env, [(1, 1), (1, 3)], [NORTH, NORTH], [None, None])
    env.step([EAST, WEST])
    assert env._pos == [(1, 1), (1, 3)]
    assert env._orient == [EAST, WEST]


def test_swap_blocks_both():
    env = build()
    place(env, [(1, 2), (1, 3)], [NORTH, NORTH], [None, None])
    env.step([EAST, WEST])
    assert env._pos == [(1, 2), (1, 3)]


def test_follow_move_is_allowed():
    env = build()
    place(env, [(1, 1), (1, 2)], [NORTH, NORTH], [None, None])
    env.step([EAST, EAST])
    assert env._pos == [(1, 2), (1, 3)]


def test_blocked_leader_blocks_the_follower():
    env = build()
    place(env, [(1, 1), (1, 2)], [NORTH, NORTH], [None, None])
    env.step([EAST, NORTH])  # leader turns into the pot wall and stays
    assert env._pos == [(1, 1), (1, 2)]


# ---------------------------------------------------------------------------
# interact rules


def test_onion_pickup_and_hands_full_noop():
    env = build()
    place(env, [(1, 1), (2, 3)], [WEST, EAST], [None, None])
    env.step([INTERACT, NOOP])
    assert env._held[0] == "onion"
    env.step([INTERACT, NOOP])  # hands already full
    assert env._held[0] == "onion"


def test_dish_pickup_shaping_goes_to_the_actor():
    env = build(reward_type="shaped")
    place(env, [(2, 1), (2, 3)], [SOUTH, EAST], [None, None])
    out = env.step([INTERACT, NOOP])
    assert env._held[0] == "dish"
    assert out.info["agent_rewards"] == [3.0, 0.0]


def test_pot_fill_cook_and_ladle_cycle():
    env = build(reward_type="shaped")
    pot = env._pots[0]
    for n in range(1, 4):
        place(env, [(1, 2), (2, 3)], [NORTH, EAST], ["onion", None])
        out = env.step([INTERACT, NOOP])
        assert pot.onions == n
        assert env._held[0] is None
        assert out.info["agent_rewards"] == [3.0, 0.0]
    # the fill tick already counted: 20 ticks total, so 19 more to go
    assert pot.timer == 19 and not pot.ready

    place(env, [(1, 2), (2, 3)], [NORTH, EAST], ["dish", None])
    out = env.step([INTERACT, NOOP])  # too early, the shove is refused
    assert env._held[0] == "dish" and out.info["agent_rewards"] == [0.0, 0.0]

    for _ in range(18):
        env.step([NOOP, NOOP])
    assert pot.timer == 0 and pot.ready

    out = env.step([INTERACT, NOOP])
    assert env._held[0] == ("soup", 3)
    assert pot.onions == 0 and pot.timer == -1 and not pot.ready
    assert out.info["agent_rewards"] == [5.0, 0.0]


def test_pot_refuses_onions_while_cooking_or_full():
    env = build()
    pot = env._pots[0]
    pot.onions = 3
    pot.timer = 5
    place(env, [(1, 2), (2, 3)], [NORTH, EAST], ["onion", None])
    env.step([INTERACT, NOOP])
    assert env._held[0] == "onion" and pot.onions == 3


def test_delivery_splits_the_team_reward():
    for mode in ("sparse", "shaped"):
        env = build(reward_type=mode)
        place(env, [(2, 3), (1, 1)], [SOUTH, NORTH], [("soup", 3), None])
        out = env.step([INTERACT, NOOP])
        assert out.info["agent_rewards"] == [10.0, 10.0]
        assert out.reward == 20.0
        assert env._held[0] is None


def test_wrong_soup_is_discarded_unpaid():
    env = build()
    place(env, [(2, 3), (1, 1)], [SOUTH, NORTH], [("soup", 2), None])
    out = env.step([INTERACT, NOOP])
    assert out.reward == 0.0
    assert env._held[0] is None


def test_counter_place_and_take():
    env = build()
    place(env, [(1, 1), (2, 3)], [NORTH, EAST], ["onion", None])
    env.step([INTERACT, NOOP])
    assert env._held[0] is None
    assert env._counter_items == {(0, 1): "onion"}
    env.step([INTERACT, NOOP])
    assert env._held[0] == "onion"
    assert env._counter_items == {}


def test_counter_occupied_and_hands_full_noop():
    env = build()
    env._counter_items[(0, 1)] = "dish"
    place(env, [(1, 1), (2, 3)], [NORTH, EAST], ["onion", None])
    env.step([INTERACT, NOOP])
    assert env._held[0] == "onion"
    assert env._counter_items == {(0, 1): "dish"}


def test_recipe_size_two():
    env = build(reward_type="shaped", recipe_size=2)
    pot = env._pots[0]
    for _ in range(2):
        place(env, [(1, 2), (2, 3)], [NORTH, EAST], ["onion", None])
        env.step([INTERACT, NOOP])
    assert pot.onions == 2 and pot.timer == 19
    for _ in range(19):
        env.step([NOOP, NOOP])
    assert pot.ready
    place(env, [(1, 2), (2, 3)], [NORTH, EAST], ["dish", None])
    env.step([INTERACT, NOOP])
    assert env._held[0] == ("soup", 2)
    place(env, [(2, 3), (1, 1)], [SOUTH, NORTH], [env._held[0], None])
    out = env.step([INTERACT, NOOP])
    assert out.reward == 20.0


def test_unknown_kitchen_rejected():
    with pytest.raises(UnknownKeyError):
        make_env(EnvConfig("overcooked", "asymmetric_advantages", seed=0))


# ---------------------------------------------------------------------------
# end-to-end scripted episode

N_, S_, E_, W_, X_, I_ = NORTH, SOUTH, EAST, WEST, NOOP, INTERACT

# cook 0 ferries three onions into the left pot; cook 1 fetches a dish,
# waits out the cook, ladles, and serves
SCRIPT = [
    (W_, W_), (I_, S_), (E_, I_), (N_, E_), (I_, E_),
    (W_, X_), (I_, X_), (E_, X_), (N_, X_), (I_, X_),
    (W_, X_), (I_, X_), (E_, X_), (N_, X_), (I_, X_),
    (W_, X_), (S_, X_),
] + [(X_, X_)] * 17 + [
    (X_, N_), (X_, W_), (X_, N_), (X_, I_), (X_, E_), (X_, S_), (X_, S_), (X_, I_),
]

SHAPED_EVENTS = {
    3: [0.0, 3.0],   # dish pickup
    5: [3.0, 0.0],   # onions into the pot
    10: [3.0, 0.0],
    15: [3.0, 0.0],
    38: [0.0, 5.0],  # ladle the finished soup
    42: [10.0, 10.0],  # delivery
}


def run_script(env):
    per_step = []
    for acts in SCRIPT:
        per_step.append(env.step(list(acts)).info["agent_rewards"])
    return per_step


def test_scripted_delivery_shaped_rewards_exact():
    env = build(reward_type="shaped")
    per_step = run_script(env)
    for t, rewards in enumerate(per_step, start=1):
        assert rewards == SHAPED_EVENTS.get(t, [0.0, 0.0]), f"step {t}"


def test_scripted_delivery_sparse_rewards_exact():
    env = build(reward_type="sparse")
    per_step = run_script(env)
    for t, rewards in enumerate(per_step, start=1):
        expected = [10.0, 10.0] if t == 42 else [0.0, 0.0]
        assert rewards == expected, f"step {t}"


def test_sparse_returns_are_delivery_multiples():
    env = build(reward_type="sparse")
    rng = RngStream(9, 2)
    total = 0.0
    for _ in range(2000):
        out = env.step([rng.randint(6), rng.randint(6)])
        assert out.info["agent_rewards"][0] == out.info["agent_rewards"][1]
        total += out.reward
        if out.done:
            env.reset()
    assert total % 20.0 == 0.0
