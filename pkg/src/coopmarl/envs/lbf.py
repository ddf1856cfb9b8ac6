"""Level-based foraging on an R x C grid.

Task keys follow "Foraging-{s}s-{R}x{C}-{p}p-{f}f[-coop]-v2" (an optional
"lbforaging:" namespace prefix is accepted and stripped). The sight block is
optional; without it agents see the whole board.

Players carry integer levels drawn uniformly from [1, 2]. Food levels are
uniform on [1, min(2, sum of player levels)] in the default mode and
uniform on (max player level, sum of player levels] in coop mode, so no
coop food is collectable alone but every food is collectable by the full
team in either mode.

A pickup succeeds when the levels of all adjacent (4-neighborhood) players
that chose Pickup sum to at least the food level. Each participant gets

    food_level * own_level / (sum of participant levels * total food level spawned)

so one food pays out food_level / total_spawned across the team and a fully
cleared episode returns exactly 1.0.

Moves are blocked by the grid edge, food, and other players' pre-move cells
(no chain-following); when several players want the same empty cell the
lowest index wins. The episode ends when every food is collected.

Observations are (row, col, level) triplets: all foods in spawn order, then
the observing player, then the other players in index order. Anything out
of sight or already collected reads (-1, -1, 0). Sight limits both |dr| and
|dc| (a square window). The global state is the concatenation of the
per-agent observation vectors.
"""
from __future__ import annotations

import re

import numpy as np

from ..config import EnvConfig
from ..errors import UnknownKeyError, UnsatisfiableSpawnError
from .base import Environment

_KEY_RE = re.compile(
    r"^(?:lbforaging:)?Foraging-(?:(\d+)s-)?(\d+)x(\d+)-(\d+)p-(\d+)f(-coop)?-v2$"
)

# action ids
NOOP, NORTH, SOUTH, WEST, EAST, PICKUP = range(6)
MOVES = {NORTH: (-1, 0), SOUTH: (1, 0), WEST: (0, -1), EAST: (0, 1)}

MAX_PLAYER_LEVEL = 2
_SPAWN_TRIES = 1000


def format_key(task: dict) -> str:
    sight = f"{task['sight']}s-" if task["sight"] else ""
    coop = "-coop" if task["coop"] else ""
    return (
        f"Foraging-{sight}{task['rows']}x{task['cols']}-"
        f"{task['players']}p-{task['foods']}f{coop}-v2"
    )


def parse_key(key: str) -> dict:
    m = _KEY_RE.match(key)
    if not m:
        raise UnknownKeyError(f"unknown foraging key {key!r}")
    sight, rows, cols, players, foods, coop = m.groups()
    out = {
        "sight": int(sight) if sight else 0,  # 0 means full view
        "rows": int(rows),
        "cols": int(cols),
        "players": int(players),
        "foods": int(foods),
        "coop": coop is not None,
    }
    if out["players"] < 1 or out["foods"] < 1 or out["rows"] < 3 or out["cols"] < 3:
        raise UnknownKeyError(f"degenerate foraging key {key!r}")
    return out


class ForagingEnv(Environment):
    def __init__(self, cfg: EnvConfig):
        spec = parse_key(cfg.key)
        self.rows: int = spec["rows"]
        self.cols: int = spec["cols"]
        self.n_foods: int = spec["foods"]
        self.sight: int = spec["sight"]
        self.coop: bool = spec["coop"]
        super().__init__(cfg, n_agents=spec["players"], n_actions=6)
        self._player_pos: list[tuple[int, int]] = []
        self._player_lvl: list[int] = []
        self._food_pos: list[tuple[int, int]] = []
        self._food_lvl: list[int] = []
        self._food_alive: list[bool] = []
        self._norm = 1.0  # total food level spawned, fixed per episode

    def _obs_dims(self) -> list[int]:
        return [3 * (self.n_foods + self.n_agents)] * self.n_agents

    # ------------------------------------------------------------------

    def _do_reset(self) -> None:
        rng = self._rng
        self._player_lvl = [1 + rng.randint(MAX_PLAYER_LEVEL) for _ in range(self.n_agents)]
        taken: set[tuple[int, int]] = set()
        self._player_pos = []
        for _ in range(self.n_agents):
            for _try in range(_SPAWN_TRIES):
                cell = (rng.randint(self.rows), rng.randint(self.cols))
                if cell not in taken:
                    break
            else:
                raise UnsatisfiableSpawnError("could not place players")
            taken.add(cell)
            self._player_pos.append(cell)

        self._food_pos = []
        for _ in range(self.n_foods):
            for _try in range(_SPAWN_TRIES):
                cell = (rng.randint(self.rows), rng.randint(self.cols))
                if cell in taken:
                    continue
                # no two foods in adjacent cells (Chebyshev >= 2)
                near = any(
                    max(abs(cell[0] - fr), abs(cell[1] - fc)) <= 1
                    for fr, fc in self._food_pos
                )
                if not near:
                    break
            else:
                raise UnsatisfiableSpawnError("could not place foods")
            taken.add(cell)
            self._food_pos.append(cell)

        if self.coop:
            lo = max(self._player_lvl) + 1
            hi = sum(self._player_lvl)
            self._food_lvl = [lo + rng.randint(hi - lo + 1) for _ in range(self.n_foods)]
        else:
            # capped by the team's combined level so every task is completable
            hi = min(MAX_PLAYER_LEVEL, sum(self._player_lvl))
            self._food_lvl = [1 + rng.randint(hi) for _ in range(self.n_foods)]
        self._food_alive = [True] * self.n_foods
        self._norm = float(sum(self._food_lvl))

    # ------------------------------------------------------------------

    def _do_step(self, actions: list[int]) -> tuple[list[float], bool]:
        rewards = [0.0] * self.n_agents
        pre = list(self._player_pos)
        pre_set = set(pre)
        food_cells = {
            self._food_pos[f] for f in range(self.n_foods) if self._food_alive[f]
        }

        claimed: dict[tuple[int, int], int] = {}
        for i, a in enumerate(actions):
            d = MOVES.get(a)
            if d is None:
                continue
            dest = (pre[i][0] + d[0], pre[i][1] + d[1])
            if not (0 <= dest[0] < self.rows and 0 <= dest[1] < self.cols):
                continue
            if dest in pre_set or dest in food_cells:
                continue
            if dest not in claimed:  # lowest index wins
                claimed[dest] = i
        for dest, i in claimed.items():
            self._player_pos[i] = dest

        terminal = True
        for f in range(self.n_foods):
            if not self._food_alive[f]:
                continue
            fr, fc = self._food_pos[f]
            participants = [
                i
                for i, a in enumerate(actions)
                if a == PICKUP
                and abs(self._player_pos[i][0] - fr) + abs(self._player_pos[i][1] - fc) == 1
            ]
            lvl_sum = sum(self._player_lvl[i] for i in participants)
            if participants and lvl_sum >= self._food_lvl[f]:
                self._food_alive[f] = False
                for i in participants:
                    rewards[i] += (
                        self._food_lvl[f] * self._player_lvl[i] / (lvl_sum * self._norm)
                    )
            else:
                terminal = False
        return rewards, terminal

    # ------------------------------------------------------------------

    def _visible(self, me: tuple[int, int], cell: tuple[int, int]) -> bool:
        if self.sight == 0:
            return True
        return abs(cell[0] - me[0]) <= self.sight and abs(cell[1] - me[1]) <= self.sight

    def _observe(self) -> list[np.ndarray]:
        out = []
        for i in range(self.n_agents):
            me = self._player_pos[i]
            v = np.empty(3 * (self.n_foods + self.n_agents))
            k = 0
            for f in range(self.n_foods):
                if self._food_alive[f] and self._visible(me, self._food_pos[f]):
                    v[k] = self._food_pos[f][0]
                    v[k + 1] = self._food_pos[f][1]
                    v[k + 2] = self._food_lvl[f]
                else:
                    v[k] = -1.0
                    v[k + 1] = -1.0
                    v[k + 2] = 0.0
                k += 3
            order = [i] + [j for j in range(self.n_agents) if j != i]
            for j in order:
                if self._visible(me, self._player_pos[j]):
                    v[k] = self._player_pos[j][0]
                    v[k + 1] = self._player_pos[j][1]
                    v[k + 2] = self._player_lvl[j]
                else:
                    v[k] = -1.0
                    v[k + 1] = -1.0
                    v[k + 2] = 0.0
                k += 3
            out.append(v)
        return out

    def render(self) -> str:
        rows = []
        for r in range(self.rows):
            row = []
            for c in range(self.cols):
                ch = "."
                for f in range(self.n_foods):
                    if self._food_alive[f] and self._food_pos[f] == (r, c):
                        ch = str(self._food_lvl[f])
                for i, p in enumerate(self._player_pos):
                    if p == (r, c):
                        ch = chr(ord("a") + self._player_lvl[i] - 1)
                row.append(ch)
            rows.append("".join(row))
        return "\n".join(rows)


def build(cfg: EnvConfig) -> ForagingEnv:
    return ForagingEnv(cfg)
