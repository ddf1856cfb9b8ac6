"""Pressure Plate: a chain of rooms where teammates hold doors open.

Keys: "pressureplate-linear-{4|5|6}p-v0". The grids are ASCII files next to
this module ('#' wall, '.' floor, digits plate ids, letters door ids with
'a' = door 0, 'C' chest, 'S' spawn cells claimed in reading order). Door i
stands open exactly while plate i is occupied by any agent; there is no
latch. Agent i is assigned plate i, and the highest-index agent is assigned
the chest. The episode ends when that agent reaches the chest.

Moves (up, down, left, right, noop) resolve sequentially in agent index
order; a move is blocked by walls, closed doors, and the current position
of every other agent. Door state is re-evaluated as each agent moves, so
stepping off a plate closes its door for teammates later in the same tick.

Per-step reward for each agent: if it is in the same room as its plate
(chest for the last agent), -manhattan(agent, plate) / (rows + cols);
otherwise -(number of rooms between it and that room). Rooms are the
horizontal bands between interior wall rows, indexed from the spawn room
northward; a doorway row belongs to the room south of it.

An agent observes five sight x sight binary layers centered on itself, in
the order (other agents, walls, plates, doors, goal), flattened row-major
and concatenated, followed by its own (x, y) = (col, row). Off-grid cells
read as walls; the doors layer shows closed doors only, otherwise door
state would be invisible. Default sight is 5, so a per-agent observation
has 5 * 25 + 2 = 127 entries. The global state concatenates the per-agent
observations.
"""
from __future__ import annotations

import re
from importlib import resources

import numpy as np

from ..config import EnvConfig
from ..errors import BadExtraError, UnknownKeyError
from .base import Environment

_KEY_RE = re.compile(r"^pressureplate-linear-(\d+)p-v0$")

UP, DOWN, LEFT, RIGHT, NOOP = range(5)
MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}

DEFAULT_SIGHT = 5
_LAYOUTS = {4: "pressureplate_linear_4p.txt", 5: "pressureplate_linear_5p.txt", 6: "pressureplate_linear_6p.txt"}


def parse_key(key: str) -> int:
    m = _KEY_RE.match(key)
    if not m:
        raise UnknownKeyError(f"unknown pressure-plate key {key!r}")
    n = int(m.group(1))
    if n not in _LAYOUTS:
        raise UnknownKeyError(f"no layout for {n} agents")
    return n


def load_layout(name: str) -> list[str]:
    text = resources.files("coopmarl.envs.layouts").joinpath(name).read_text()
    lines = [ln for ln in text.splitlines() if ln]
    width = len(lines[0])
    if any(len(ln) != width for ln in lines):
        raise ValueError(f"layout {name} is not rectangular")
    return lines


class PressurePlateEnv(Environment):
    def __init__(self, cfg: EnvConfig):
        n = parse_key(cfg.key)
        self.sight: int = int(cfg.extras.get("sight", DEFAULT_SIGHT))
        if self.sight % 2 != 1:
            raise BadExtraError(f"sight must be odd, got {self.sight}")
        super().__init__(cfg, n_agents=n, n_actions=5)

        lines = load_layout(_LAYOUTS[n])
        self.rows = len(lines)
        self.cols = len(lines[0])
        self._walls = np.zeros((self.rows, self.cols))
        self._spawns: list[tuple[int, int]] = []
        self._plates: dict[int, tuple[int, int]] = {}
        self._door_cells: dict[int, list[tuple[int, int]]] = {}
        self._chest: tuple[int, int] | None = None
        for r, line in enumerate(lines):
            for c, ch in enumerate(line):
                if ch == "#":
                    self._walls[r, c] = 1.0
                elif ch == "S":
                    self._spawns.append((r, c))
                elif ch == "C":
                    self._chest = (r, c)
                elif ch.isdigit():
                    self._plates[int(ch)] = (r, c)
                elif ch.islower():
                    self._door_cells.setdefault(ord(ch) - ord("a"), []).append((r, c))
        assert self._chest is not None and len(self._spawns) >= n
        self.n_plates = len(self._plates)

        # interior wall rows partition the grid into rooms, south to north
        interior = [
            r
            for r in range(1, self.rows - 1)
            if all(lines[r][c] != "." for c in range(self.cols))
            and not any(lines[r][c].isdigit() or lines[r][c] in "CS" for c in range(self.cols))
        ]
        self._wall_rows = interior

        rad = self.sight // 2
        self._pad = rad
        shape = (self.rows + 2 * rad, self.cols + 2 * rad)
        self._wall_pad = np.ones(shape)
        self._wall_pad[rad : rad + self.rows, rad : rad + self.cols] = self._walls
        self._plate_pad = np.zeros(shape)
        for r, c in self._plates.values():
            self._plate_pad[r + rad, c + rad] = 1.0
        self._goal_pad = np.zeros(shape)
        self._goal_pad[self._chest[0] + rad, self._chest[1] + rad] = 1.0
        self._door_zero = np.zeros(shape)

        self._agents: list[tuple[int, int]] = []

    def _obs_dims(self) -> list[int]:
        return [5 * self.sight * self.sight + 2] * self.n_agents

    def _room_index(self, r: int) -> int:
        return sum(1 for w in self._wall_rows if w > r)

    def _goal_of(self, i: int) -> tuple[int, int]:
        if i == self.n_agents - 1:
            assert self._chest is not None
            return self._chest
        return self._plates[i]

    def _door_open(self, door_id: int) -> bool:
        plate = self._plates.get(door_id)
        return plate is not None and plate in self._agents

    def _do_reset(self) -> None:
        self._agents = list(self._spawns[: self.n_agents])

    def _do_step(self, actions: list[int]) -> tuple[list[float], bool]:
        closed: set[tuple[int, int]] = set()
        for d, cells in self._door_cells.items():
            if not self._door_open(d):
                closed.update(cells)
        for i, a in enumerate(actions):
            d = MOVES.get(a)
            if d is None:
                continue
            r = self._agents[i][0] + d[0]
            c = self._agents[i][1] + d[1]
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                continue
            if self._walls[r, c] or (r, c) in closed:
                continue
            if any(self._agents[j] == (r, c) for j in range(self.n_agents) if j != i):
                continue
            was_plate = self._agents[i]
            self._agents[i] = (r, c)
            # agent may have stepped off (or onto) a plate: refresh doors
            if self._plate_pad[was_plate[0] + self._pad, was_plate[1] + self._pad] or self._plate_pad[
                r + self._pad, c + self._pad
            ]:
                closed = set()
                for dd, cells in self._door_cells.items():
                    if not self._door_open(dd):
                        closed.update(cells)

        rewards = []
        norm = self.rows + self.cols
        for i in range(self.n_agents):
            gr, gc = self._goal_of(i)
            ar, ac = self._agents[i]
            if self._room_index(ar) == self._room_index(gr):
                rewards.append(-(abs(ar - gr) + abs(ac - gc)) / norm)
            else:
                rewards.append(-float(abs(self._room_index(ar) - self._room_index(gr))))
        terminal = self._agents[self.n_agents - 1] == self._chest
        return rewards, terminal

    def _observe(self) -> list[np.ndarray]:
        s = self.sight
        rad = self._pad
        doors = self._door_zero.copy()
        for d, cells in self._door_cells.items():
            if not self._door_open(d):
                for r, c in cells:
                    doors[r + rad, c + rad] = 1.0
        out = []
        for i in range(self.n_agents):
            r, c = self._agents[i]
            agents_layer = np.zeros((s, s))
            for j in range(self.n_agents):
                if j == i:
                    continue
                dr = self._agents[j][0] - r
                dc = self._agents[j][1] - c
                if abs(dr) <= rad and abs(dc) <= rad:
                    agents_layer[dr + rad, dc + rad] = 1.0
            v = np.concatenate(
                [
                    agents_layer.ravel(),
                    self._wall_pad[r : r + s, c : c + s].ravel(),
                    self._plate_pad[r : r + s, c : c + s].ravel(),
                    doors[r : r + s, c : c + s].ravel(),
                    self._goal_pad[r : r + s, c : c + s].ravel(),
                    np.array([float(c), float(r)]),
                ]
            )
            out.append(v)
        return out

    def render(self) -> str:
        rows = []
        closed = {cell for d, cells in self._door_cells.items() if not self._door_open(d) for cell in cells}
        for r in range(self.rows):
            row = []
            for c in range(self.cols):
                if self._walls[r, c]:
                    ch = "#"
                elif (r, c) in closed:
                    ch = "+"
                elif (r, c) == self._chest:
                    ch = "C"
                elif self._plate_pad[r + self._pad, c + self._pad]:
                    ch = "_"
                else:
                    ch = "."
                for i, p in enumerate(self._agents):
                    if p == (r, c):
                        ch = str(i)
                row.append(ch)
            rows.append("".join(row))
        return "\n".join(rows)


def build(cfg: EnvConfig) -> PressurePlateEnv:
    return PressurePlateEnv(cfg)
