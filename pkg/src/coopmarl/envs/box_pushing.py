"""Box Pushing: two agents shove boxes toward the goal row of a 6x6 grid.

Two small one-cell boxes and one large box spanning two horizontally
adjacent cells sit mid-grid. An agent facing a small box that moves forward
pushes it one cell and follows it. The large box advances only when both
agents stand on the two cells behind its two halves, face it with the same
heading, and move forward on the same tick; a lone push costs -5. Moving
into the boundary also costs -5. Every agent pays -0.1 per tick. A small
box reaching the goal row pays +10 to its pusher, the large box pays +100
to every agent; either event ends the episode.

Per-agent per-tick rewards therefore land in {-0.1, -5.1, 9.9, 99.9}.

Facing is clockwise (north, east, south, west). Blocked pushes (box against
the boundary, another box, or an agent) are plain failed moves with no
penalty; the -5 cases are exactly the two listed above.

The observation is a five-entry one-hot of whatever sits directly ahead:
(small box, large box, empty, wall, teammate). The global state overrides
the concat-of-obs default with a lossless summary: normalized positions and
facing one-hots of both agents plus the three box positions (18 entries).
"""
from __future__ import annotations

import numpy as np

from ..config import EnvConfig
from ..errors import UnknownKeyError
from .base import Environment

GRID = 6
GOAL_ROW = 0
N_AGENTS = 2

# facings, clockwise
HEADINGS = ((-1, 0), (0, 1), (1, 0), (0, -1))  # N, E, S, W
FORWARD, TURN_LEFT, TURN_RIGHT, STAY = range(4)

STEP_COST = -0.1
PENALTY = -5.0
SMALL_GOAL = 10.0
LARGE_GOAL = 100.0

# canonical fixed start; random_init redraws agent cells and facings only
SMALL_STARTS = ((2, 1), (2, 4))
LARGE_START = (2, 2)  # left half; right half one column east
AGENT_STARTS = ((4, 1), (4, 4))

KEY = "BoxPushing-6x6-2a-v0"

# observation categories for the cell straight ahead
OBS_SMALL, OBS_LARGE, OBS_EMPTY, OBS_WALL, OBS_TEAMMATE = range(5)


def parse_key(key: str) -> None:
    if key != KEY:
        raise UnknownKeyError(f"unknown box-pushing key {key!r}")


class BoxPushingEnv(Environment):
    def __init__(self, cfg: EnvConfig):
        parse_key(cfg.key)
        super().__init__(cfg, n_agents=N_AGENTS, n_actions=4)
        self.random_init: bool = cfg.extras.get("random_init", True)
        self._agents: list[tuple[int, int]] = list(AGENT_STARTS)
        self._facing: list[int] = [0, 0]
        self._small: list[tuple[int, int]] = list(SMALL_STARTS)
        self._large: tuple[int, int] = LARGE_START

    def _obs_dims(self) -> list[int]:
        return [5] * N_AGENTS

    @property
    def state_dim(self) -> int:
        return 18

    # ------------------------------------------------------------------

    def _large_cells(self, left: tuple[int, int] | None = None):
        r, c = left if left is not None else self._large
        return ((r, c), (r, c + 1))

    def _do_reset(self) -> None:
        self._small = list(SMALL_STARTS)
        self._large = LARGE_START
        if self.random_init:
            boxes = set(self._small) | set(self._large_cells())
            taken = set(boxes)
            pos = []
            for _ in range(N_AGENTS):
                while True:
                    cell = (self._rng.randint(GRID), self._rng.randint(GRID))
                    if cell not in taken:
                        taken.add(cell)
                        pos.append(cell)
                        break
            self._agents = pos
            self._facing = [self._rng.randint(4) for _ in range(N_AGENTS)]
        else:
            self._agents = list(AGENT_STARTS)
            self._facing = [0, 0]

    # ------------------------------------------------------------------

    def _do_step(self, actions: list[int]) -> tuple[list[float], bool]:
        rewards = [STEP_COST] * N_AGENTS
        facing = self._facing
        for i, a in enumerate(actions):
            if a == TURN_LEFT:
                facing[i] = (facing[i] - 1) % 4
            elif a == TURN_RIGHT:
                facing[i] = (facing[i] + 1) % 4

        movers = [i for i, a in enumerate(actions) if a == FORWARD]
        large_cells = self._large_cells()
        small_pushers: dict[int, int] = {}  # agent -> small box index
        large_pushers: list[int] = []
        plain: list[int] = []

        for i in movers:
            dr, dc = HEADINGS[facing[i]]
            r, c = self._agents[i]
            ahead = (r + dr, c + dc)
            if not (0 <= ahead[0] < GRID and 0 <= ahead[1] < GRID):
                rewards[i] += PENALTY  # boundary hit
            elif ahead in self._small:
                small_pushers[i] = self._small.index(ahead)
            elif ahead in large_cells:
                large_pushers.append(i)
            else:
                plain.append(i)

        terminal = False

        # joint large-box push: both agents, same heading (north or south),
        # covering both halves from directly behind
        large_moved = False
        if len(large_pushers) == 2:
            f0, f1 = facing[large_pushers[0]], facing[large_pushers[1]]
            cells_faced = set()
            for i in large_pushers:
                dr, dc = HEADINGS[facing[i]]
                r, c = self._agents[i]
                cells_faced.add((r + dr, c + dc))
            vertical = f0 == f1 and HEADINGS[f0][0] != 0
            if vertical and cells_faced == set(large_cells):
                dr = HEADINGS[f0][0]
                new_left = (self._large[0] + dr, self._large[1])
                dest = self._large_cells(new_left)
                in_grid = 0 <= new_left[0] < GRID
                clear = in_grid and not any(d in self._small for d in dest)
                if clear:
                    self._large = new_left
                    for i in large_pushers:
                        r, c = self._agents[i]
                        self._agents[i] = (r + dr, c)
                    large_moved = True
                    if new_left[0] == GOAL_ROW:
                        for i in range(N_AGENTS):
                            rewards[i] += LARGE_GOAL
                        terminal = True
        if not large_moved:
            for i in large_pushers:
                rewards[i] += PENALTY  # pushing the large box without help

        # small-box pushes in agent index order; two agents shoving the same
        # box on one tick cancel each other out
        boxes_claimed = list(small_pushers.values())
        for i, b in small_pushers.items():
            if boxes_claimed.count(b) > 1:
                continue
            dr, dc = HEADINGS[facing[i]]
            br, bc = self._small[b]
            dest = (br + dr, bc + dc)
            ok = (
                0 <= dest[0] < GRID
                and 0 <= dest[1] < GRID
                and dest not in self._small
                and dest not in self._large_cells()
                and dest not in self._agents
            )
            if ok:
                self._small[b] = dest
                self._agents[i] = (br, bc)
                if dest[0] == GOAL_ROW:
                    rewards[i] += SMALL_GOAL
                    terminal = True

        # plain moves resolve against pre-move occupancy: same-target, swap,
        # and follow-the-leader chains all block
        if plain:
            proposals = {}
            for i in plain:
                dr, dc = HEADINGS[facing[i]]
                r, c = self._agents[i]
                proposals[i] = (r + dr, c + dc)
            others_pre = list(self._agents)
            large_now = self._large_cells()
            for i in plain:
                dest = proposals[i]
                if any(proposals.get(j) == dest for j in plain if j != i):
                    continue
                if any(others_pre[j] == dest for j in range(N_AGENTS) if j != i):
                    continue
                if dest in self._small or dest in large_now:
                    continue
                self._agents[i] = dest

        return rewards, terminal

    # ------------------------------------------------------------------

    def _ahead_category(self, i: int) -> int:
        dr, dc = HEADINGS[self._facing[i]]
        r, c = self._agents[i]
        cell = (r + dr, c + dc)
        if not (0 <= cell[0] < GRID and 0 <= cell[1] < GRID):
            return OBS_WALL
        if cell in self._small:
            return OBS_SMALL
        if cell in self._large_cells():
            return OBS_LARGE
        if cell == self._agents[1 - i]:
            return OBS_TEAMMATE
        return OBS_EMPTY

    def _observe(self) -> list[np.ndarray]:
        out = []
        for i in range(N_AGENTS):
            v = np.zeros(5)
            v[self._ahead_category(i)] = 1.0
            out.append(v)
        return out

    def _global_state(self) -> np.ndarray:
        s = np.zeros(18)
        n = GRID - 1
        k = 0
        for i in range(N_AGENTS):
            r, c = self._agents[i]
            s[k] = r / n
            s[k + 1] = c / n
            s[k + 2 + self._facing[i]] = 1.0
            k += 6
        for br, bc in self._small:
            s[k] = br / n
            s[k + 1] = bc / n
            k += 2
        s[k] = self._large[0] / n
        s[k + 1] = self._large[1] / n
        return s

    def render(self) -> str:
        arrows = "^>v<"
        rows = []
        large = self._large_cells()
        for r in range(GRID):
            row = []
            for c in range(GRID):
                ch = "." if r != GOAL_ROW else "="
                if (r, c) in self._small:
                    ch = "b"
                elif (r, c) in large:
                    ch = "B"
                for i, p in enumerate(self._agents):
                    if p == (r, c):
                        ch = arrows[self._facing[i]]
                row.append(ch)
            rows.append("".join(row))
        return "\n".join(rows)


def build(cfg: EnvConfig) -> BoxPushingEnv:
    return BoxPushingEnv(cfg)
