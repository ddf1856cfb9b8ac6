"""Multi-robot warehouse: deliver requested shelves to the workstations.

Keys: "rware-{tiny|small}-{n}ag[-easy|-hard]-v1" (optional "rware:" prefix).
tiny is 10x11, small 10x20, both shipped as editable ASCII files next to
this module ('X' rack cell holding one shelf at start, '-' highway floor,
'G' workstation; workstations are highway). The request queue holds R
distinct shelves: R = n_agents by default, 2*n_agents for "-easy",
ceil(n_agents / 2) for "-hard"; the request_queue_size extra overrides all
three.

Robots turn in place, step forward, or toggle Load/Unload. An unloaded
robot may drive under standing shelves; a loaded robot may not enter a cell
with a standing shelf. Unload is refused on highway cells. Simultaneous
moves into one cell cancel every contender, cancellations iterate to a
fixed point so blocked chains re-block their followers, and rotation cycles
(including two-robot swaps) are cancelled outright.

Delivering happens after movement and loading: a robot standing on a
workstation while carrying a requested shelf scores 1.0 for itself, the
shelf leaves the queue, and a replacement is drawn uniformly from shelves
neither queued nor just delivered (carried shelves are eligible).

A robot observes [x, y, carrying, facing one-hot, path_restricted] followed
by the 3x3 neighborhood in row-major order with 7 entries per cell
[robot present, robot facing one-hot, shelf present, shelf requested]:
8 + 9 * 7 = 71 entries. x is the column, y the row; path_restricted flags
standing on highway; off-grid cells read all-zero; carried shelves count as
present in their rider's cell. The global state concatenates the per-agent
observations.
"""
from __future__ import annotations

import math
import re
from importlib import resources

import numpy as np

from ..config import EnvConfig
from ..errors import UnknownKeyError
from .base import Environment

_KEY_RE = re.compile(r"^(?:rware:)?rware-(tiny|small)-(\d+)ag(-easy|-hard)?-v1$")

TURN_LEFT, TURN_RIGHT, FORWARD, TOGGLE_LOAD = range(4)

# facing ids and one-hot order: up, down, left, right
DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))
_LEFT = {0: 2, 2: 1, 1: 3, 3: 0}  # up->left->down->right->up
_RIGHT = {0: 3, 3: 1, 1: 2, 2: 0}

_LAYOUTS = {"tiny": "rware_tiny.txt", "small": "rware_small.txt"}


def parse_key(key: str) -> tuple[str, int, str]:
    m = _KEY_RE.match(key)
    if not m:
        raise UnknownKeyError(f"unknown warehouse key {key!r}")
    size, agents, difficulty = m.group(1), int(m.group(2)), m.group(3) or ""
    if agents < 1:
        raise UnknownKeyError(f"need at least one robot: {key!r}")
    return size, agents, difficulty.lstrip("-")


def default_queue_size(n_agents: int, difficulty: str) -> int:
    if difficulty == "hard":
        return math.ceil(n_agents / 2)
    if difficulty == "easy":
        return 2 * n_agents
    return n_agents


class WarehouseEnv(Environment):
    def __init__(self, cfg: EnvConfig):
        size, n_agents, difficulty = parse_key(cfg.key)
        super().__init__(cfg, n_agents=n_agents, n_actions=4)

        text = resources.files("coopmarl.envs.layouts").joinpath(_LAYOUTS[size]).read_text()
        lines = [ln for ln in text.splitlines() if ln]
        self.rows = len(lines)
        self.cols = len(lines[0])
        self._highway = np.zeros((self.rows, self.cols), dtype=bool)
        self._racks: list[tuple[int, int]] = []
        self._goals: list[tuple[int, int]] = []
        for r, line in enumerate(lines):
            for c, ch in enumerate(line):
                if ch == "X":
                    self._racks.append((r, c))
                else:
                    self._highway[r, c] = True
                    if ch == "G":
                        self._goals.append((r, c))
        self.n_shelves = len(self._racks)
        self.queue_size = int(
            cfg.extras.get("request_queue_size", default_queue_size(n_agents, difficulty))
        )
        if self.queue_size > self.n_shelves:
            raise UnknownKeyError(
                f"request queue {self.queue_size} exceeds {self.n_shelves} shelves"
            )
        self._goal_set = set(self._goals)

        self._shelf_pos: list[tuple[int, int]] = []
        self._robot_pos: list[tuple[int, int]] = []
        self._robot_dir: list[int] = []
        self._carrying: list[int] = []  # shelf id or -1
        self._queue: list[int] = []

    def _obs_dims(self) -> list[int]:
        return [71] * self.n_agents

    # ------------------------------------------------------------------

    def _do_reset(self) -> None:
        rng = self._rng
        self._shelf_pos = list(self._racks)
        taken: set[tuple[int, int]] = set()
        self._robot_pos = []
        self._robot_dir = []
        for _ in range(self.n_agents):
            while True:
                cell = (rng.randint(self.rows), rng.randint(self.cols))
                if cell not in taken:
                    break
            taken.add(cell)
            self._robot_pos.append(cell)
            self._robot_dir.append(rng.randint(4))
        self._carrying = [-1] * self.n_agents
        self._queue = rng.sample_indices(self.n_shelves, self.queue_size)

    # ------------------------------------------------------------------

    def _standing_shelves(self) -> set[tuple[int, int]]:
        carried = set(s for s in self._carrying if s >= 0)
        return {p for i, p in enumerate(self._shelf_pos) if i not in carried}

    def _resolve_moves(self, actions: list[int]) -> None:
        standing = self._standing_shelves()
        target: dict[int, tuple[int, int]] = {}
        for i, a in enumerate(actions):
            if a == TURN_LEFT:
                self._robot_dir[i] = _LEFT[self._robot_dir[i]]
            elif a == TURN_RIGHT:
                self._robot_dir[i] = _RIGHT[self._robot_dir[i]]
            elif a == FORWARD:
                dr, dc = DELTAS[self._robot_dir[i]]
                r = self._robot_pos[i][0] + dr
                c = self._robot_pos[i][1] + dc
                if not (0 <= r < self.rows and 0 <= c < self.cols):
                    continue
                if self._carrying[i] >= 0 and (r, c) in standing:
                    continue
                target[i] = (r, c)

        # iterate cancellation to a fixed point, then break rotation cycles
        pos = self._robot_pos
        while True:
            changed = True
            while changed:
                changed = False
                by_cell: dict[tuple[int, int], list[int]] = {}
                for i, t in target.items():
                    by_cell.setdefault(t, []).append(i)
                for cell, movers in by_cell.items():
                    if len(movers) > 1:
                        for i in movers:
                            del target[i]
                        changed = True
                occupied_still = {
                    pos[i]: i for i in range(self.n_agents) if i not in target
                }
                for i in list(target):
                    if target[i] in occupied_still:
                        del target[i]
                        changed = True
            # remaining movers: distinct targets, each free or another mover's cell
            mover_at = {pos[i]: i for i in target}
            cancelled_cycle = False
            visited: dict[int, int] = {}  # robot -> state: 1 in progress, 2 done
            for start in list(target):
                if visited.get(start):
                    continue
                path = []
                i = start
                while True:
                    if i not in target or visited.get(i) == 2:
                        for p in path:
                            visited[p] = 2
                        break
                    if visited.get(i) == 1:
                        # found a cycle: everything from i onward in path loops
                        k = path.index(i)
                        for p in path[k:]:
                            del target[p]
                        for p in path:
                            visited[p] = 2
                        cancelled_cycle = True
                        break
                    visited[i] = 1
                    path.append(i)
                    nxt = mover_at.get(target[i])
                    if nxt is None:
                        for p in path:
                            visited[p] = 2
                        break
                    i = nxt
            if not cancelled_cycle:
                break
        for i, t in target.items():
            self._robot_pos[i] = t

    def _do_step(self, actions: list[int]) -> tuple[list[float], bool]:
        self._resolve_moves(actions)

        standing = self._standing_shelves()
        for i, a in enumerate(actions):
            if a != TOGGLE_LOAD:
                continue
            pos = self._robot_pos[i]
            if self._carrying[i] < 0:
                if pos in standing:
                    self._carrying[i] = self._shelf_pos.index(pos)
            elif not self._highway[pos[0], pos[1]]:
                self._carrying[i] = -1  # set the shelf down here

        rewards = [0.0] * self.n_agents
        for i in range(self.n_agents):
            s = self._carrying[i]
            if s >= 0:
                self._shelf_pos[s] = self._robot_pos[i]  # shelf rides along
                if self._robot_pos[i] in self._goal_set and s in self._queue:
                    rewards[i] = 1.0
                    self._queue.remove(s)
                    candidates = [
                        k
                        for k in range(self.n_shelves)
                        if k != s and k not in self._queue
                    ]
                    self._queue.append(candidates[self._rng.randint(len(candidates))])
        return rewards, False  # only the time limit ends an episode

    # ------------------------------------------------------------------

    def _observe(self) -> list[np.ndarray]:
        queue = set(self._queue)
        # carried shelf positions track their rider, so this map is current
        shelf_at: dict[tuple[int, int], int] = {}
        for s, p in enumerate(self._shelf_pos):
            shelf_at[p] = s
        robot_at = {p: i for i, p in enumerate(self._robot_pos)}

        out = []
        for i in range(self.n_agents):
            r, c = self._robot_pos[i]
            v = np.zeros(71)
            v[0] = float(c)
            v[1] = float(r)
            v[2] = 1.0 if self._carrying[i] >= 0 else 0.0
            v[3 + self._robot_dir[i]] = 1.0
            v[7] = 1.0 if self._highway[r, c] else 0.0
            k = 8
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < self.rows and 0 <= cc < self.cols:
                        j = robot_at.get((rr, cc))
                        if j is not None:
                            v[k] = 1.0
                            v[k + 1 + self._robot_dir[j]] = 1.0
                        s = shelf_at.get((rr, cc))
                        if s is not None:
                            v[k + 5] = 1.0
                            if s in queue:
                                v[k + 6] = 1.0
                    k += 7
            out.append(v)
        return out

    def render(self) -> str:
        standing = self._standing_shelves()
        queue = set(self._queue)
        arrows = "^v<>"
        rows = []
        for r in range(self.rows):
            row = []
            for c in range(self.cols):
                cell = (r, c)
                if cell in self._goal_set:
                    ch = "G"
                elif cell in standing:
                    s = self._shelf_pos.index(cell)
                    ch = "R" if s in queue else "x"
                else:
                    ch = "." if not self._highway[r, c] else "-"
                i = next((k for k, p in enumerate(self._robot_pos) if p == cell), None)
                if i is not None:
                    ch = arrows[self._robot_dir[i]]
                row.append(ch)
            rows.append("".join(row))
        return "\n".join(rows) + f"\nqueue={sorted(self._queue)}"
    # the queue print keeps render deterministic for logs


def build(cfg: EnvConfig) -> WarehouseEnv:
    return WarehouseEnv(cfg)
