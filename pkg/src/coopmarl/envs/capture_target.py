"""Capture Target: two agents chase one fleeing target on a bounded 6x6
grid. The team is rewarded when every agent stands on the target's cell at
the end of the agents' move phase.

Step order within one tick:
  1. every agent moves (its intent is replaced by a uniformly random
     direction with probability agent_trans_noise; off-grid moves clamp),
  2. capture check: all agents on the target cell -> team reward 1.0, done,
  3. if not captured, the target moves: when tgt_avoid_agent it flees the
     nearest agent (distance ties broken by the env stream), stepping away
     along the axis of larger separation, falling back to the other axis at
     a boundary and standing still when neither axis helps; otherwise its
     move is uniform over the five actions. tgt_trans_noise replaces its
     intent the same way agent noise does.

Observations are [own_row, own_col, target_row, target_col] divided by
(grid_size - 1) / 2 (2.5 on the 6x6 board). With probability
target_flick_prob, independently per agent and per tick, the target pair
reads (-1, -1). obs_one_hot swaps the vector for two concatenated one-hot
cell encodings (72 entries; a flickered target block is all zero).

The global state is the concatenation of the per-agent views with the true
(unflickered) target coordinates: flicker is observation noise, not world
state. state_dim is 8 under default settings.
"""
from __future__ import annotations

import numpy as np

from ..config import EnvConfig
from ..errors import UnknownKeyError
from .base import Environment

GRID = 6
N_AGENTS = 2
# action ids: (North, South, West, East, No move)
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))
STAY = 4

KEY = "CaptureTarget-6x6-1t-2a-v0"

# step returns reuse these; the base class copies before exposing them
_ZERO_REWARDS = (0.0, 0.0)
_CAPTURE_REWARDS = (0.5, 0.5)

DEFAULTS = {
    "obs_one_hot": False,
    "target_flick_prob": 0.3,
    "tgt_avoid_agent": True,
    "tgt_trans_noise": 0.0,
    "agent_trans_noise": 0.1,
}


def parse_key(key: str) -> None:
    if key != KEY:
        raise UnknownKeyError(f"unknown capture-target key {key!r}")


class CaptureTargetEnv(Environment):
    def __init__(self, cfg: EnvConfig):
        parse_key(cfg.key)
        super().__init__(cfg, n_agents=N_AGENTS, n_actions=len(MOVES))
        opts = {**DEFAULTS, **cfg.extras}
        self.obs_one_hot: bool = opts["obs_one_hot"]
        self.flick_prob: float = opts["target_flick_prob"]
        self.tgt_avoid: bool = opts["tgt_avoid_agent"]
        self.tgt_noise: float = opts["tgt_trans_noise"]
        self.agent_noise: float = opts["agent_trans_noise"]
        # coordinate scale reproducing e.g. row 1 -> 0.4, col 4 -> 1.6
        self._scale = [i / ((GRID - 1) / 2.0) for i in range(GRID)]
        self._agents: list[tuple[int, int]] = [(0, 0)] * N_AGENTS
        self._target: tuple[int, int] = (0, 0)
        self._captured = False

    def _obs_dims(self) -> list[int]:
        d = 2 * GRID * GRID if self.obs_one_hot else 4
        return [d] * N_AGENTS

    def _do_reset(self) -> None:
        rng = self._rng
        self._agents = [
            (rng.randint(GRID), rng.randint(GRID)) for _ in range(N_AGENTS)
        ]
        self._target = (rng.randint(GRID), rng.randint(GRID))
        self._captured = False

    def _move(self, pos: tuple[int, int], action: int, noise: float) -> tuple[int, int]:
        if noise > 0.0 and self._rng.random() < noise:
            action = self._rng.randint(4)  # uniform over the four directions
        dr, dc = MOVES[action]
        r = pos[0] + dr
        c = pos[1] + dc
        if 0 <= r < GRID and 0 <= c < GRID:
            return (r, c)
        return pos

    def _target_intent(self) -> int:
        if not self.tgt_avoid:
            return self._rng.randint(len(MOVES))
        tr, tc = self._target
        dists = [abs(tr - r) + abs(tc - c) for r, c in self._agents]
        nearest = [i for i, d in enumerate(dists) if d == min(dists)]
        if len(nearest) > 1:
            idx = nearest[self._rng.randint(len(nearest))]
        else:
            idx = nearest[0]
        ar, ac = self._agents[idx]
        dr = tr - ar
        dc = tc - ac
        row_move = None if dr == 0 else (1 if dr > 0 else 0)
        col_move = None if dc == 0 else (3 if dc > 0 else 2)
        if abs(dr) >= abs(dc):
            order = (row_move, col_move)
        else:
            order = (col_move, row_move)
        for mv in order:
            if mv is None:
                continue
            mr, mc = MOVES[mv]
            if 0 <= tr + mr < GRID and 0 <= tc + mc < GRID:
                return mv
        return STAY

    def _do_step(self, actions: list[int]) -> tuple[list[float], bool]:
        move = self._move
        noise = self.agent_noise
        p0 = move(self._agents[0], actions[0], noise)
        p1 = move(self._agents[1], actions[1], noise)
        self._agents = [p0, p1]
        tgt = self._target
        if p0 == tgt and p1 == tgt:
            self._captured = True
            return _CAPTURE_REWARDS, True
        self._target = move(tgt, self._target_intent(), self.tgt_noise)
        return _ZERO_REWARDS, False

    def _observe(self) -> list[np.ndarray]:
        sc = self._scale
        tr, tc = self._target
        out = []
        for r, c in self._agents:
            flick = self.flick_prob > 0.0 and self._rng.random() < self.flick_prob
            if self.obs_one_hot:
                v = np.zeros(2 * GRID * GRID)
                v[r * GRID + c] = 1.0
                if not flick:
                    v[GRID * GRID + tr * GRID + tc] = 1.0
            elif flick:
                v = np.array([sc[r], sc[c], -1.0, -1.0])
            else:
                v = np.array([sc[r], sc[c], sc[tr], sc[tc]])
            out.append(v)
        return out

    def _global_state(self) -> np.ndarray:
        # unflickered concatenation of the per-agent views
        sc = self._scale
        tr, tc = self._target
        if self.obs_one_hot:
            s = np.zeros(2 * GRID * GRID * N_AGENTS)
            block = 2 * GRID * GRID
            for i, (r, c) in enumerate(self._agents):
                s[i * block + r * GRID + c] = 1.0
                s[i * block + GRID * GRID + tr * GRID + tc] = 1.0
            return s
        vals = []
        for r, c in self._agents:
            vals += [sc[r], sc[c], sc[tr], sc[tc]]
        return np.array(vals)

    def render(self) -> str:
        rows = []
        for r in range(GRID):
            row = []
            for c in range(GRID):
                ch = "."
                if (r, c) == self._target:
                    ch = "T"
                for i, p in enumerate(self._agents):
                    if p == (r, c):
                        ch = str(i) if ch == "." else "*"
                row.append(ch)
            rows.append("".join(row))
        return "\n".join(rows)


def build(cfg: EnvConfig) -> CaptureTargetEnv:
    return CaptureTargetEnv(cfg)
