"""Two-cook kitchen: cooperate to cook and serve onion soup.

The only key is "cramped_room", a 5x4 kitchen shipped as an ASCII file
('X' counter, 'P' pot, 'O' onion dispenser, 'D' dish dispenser, 'S'
serving cell, '.' floor, digits are player starts). It has two pots. Reset
is deterministic: fixed starts, both cooks facing north.

Actions: (north, south, east, west, noop, interact). A move sets the
orientation whether or not the step succeeds; only floor cells are
walkable. Same-target and swap moves both block. Interact applies to the
faced cell and resolves in player index order:

  onion dispenser  empty hand -> hold onion
  dish dispenser   empty hand -> hold dish (+3 shaped)
  pot              holding onion, pot not cooking/ready/full -> drop it in
                   (+3 shaped); the pot starts cooking by itself the moment
                   it holds recipe_size onions (timer 20 ticks, counting
                   the fill tick)
                   holding dish, pot ready -> ladle the soup (+5 shaped)
  serving cell     holding soup -> deliver; a soup of exactly recipe_size
                   onions pays the team 20, split [10, 10]; anything else
                   pays 0
  counter          place the held item, or pick up what lies there

reward_type "sparse" (default) pays only deliveries; "shaped" adds the
listed shaping bonuses to the acting cook's entry in agent_rewards.

The 96-entry featurization is, for each cook (self first):
  orientation one-hot (N,S,E,W), held one-hot (onion, soup, dish, tomato),
  wall bits for the four adjacent cells, (dx, dy) to the closest onion,
  tomato, dish, soup, serving cell, and empty counter, the closest soup's
  (n_onions, n_tomatoes), and two pot blocks
  [exists, is_empty, is_full, is_cooking, is_ready, n_onions, n_tomatoes,
   cook_time, dx, dy]
ordered by distance (ties row-major), 46 entries per cook; then the
relative offset to the other cook and own absolute position. Deltas are
(col_t - col_self, row_t - row_self); closest means smallest Manhattan
distance with row-major tie break; a held item type reads (0, 0); a
category with no instance reads (0, 0). cook_time is the remaining timer
while cooking, 0 once ready, -1 when idle. Sources for "onion"/"dish"
include loose counter items and the matching dispensers; "soup" means loose
soups and ready pots. The global state concatenates both featurizations.
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from ..config import EnvConfig
from ..errors import UnknownKeyError
from .base import Environment

FLOOR, COUNTER, POT, ONION_DISP, DISH_DISP, SERVE = range(6)
_CELL = {".": FLOOR, "X": COUNTER, "P": POT, "O": ONION_DISP, "D": DISH_DISP, "S": SERVE}

NORTH, SOUTH, EAST, WEST, NOOP, INTERACT = range(6)
DELTAS = ((-1, 0), (1, 0), (0, 1), (0, -1))  # N, S, E, W

COOK_TIME = 20
DELIVERY_REWARD = 20.0
SHAPED_ONION_IN_POT = 3.0
SHAPED_DISH_PICKUP = 3.0
SHAPED_SOUP_PICKUP = 5.0

HELD_ORDER = ("onion", "soup", "dish", "tomato")

KEY = "cramped_room"


def parse_key(key: str) -> None:
    if key != KEY:
        raise UnknownKeyError(f"unknown kitchen key {key!r}")


class Pot:
    __slots__ = ("onions", "timer", "ready")

    def __init__(self):
        self.onions = 0
        self.timer = -1  # >0 cooking, otherwise idle
        self.ready = False

    def reset(self):
        self.onions = 0
        self.timer = -1
        self.ready = False


class OvercookedEnv(Environment):
    def __init__(self, cfg: EnvConfig):
        parse_key(cfg.key)
        super().__init__(cfg, n_agents=2, n_actions=6)
        self.reward_type: str = cfg.extras.get("reward_type", "sparse")
        self.recipe_size: int = int(cfg.extras.get("recipe_size", 3))

        text = resources.files("coopmarl.envs.layouts").joinpath("cramped_room.txt").read_text()
        lines = [ln for ln in text.splitlines() if ln]
        self.rows = len(lines)
        self.cols = len(lines[0])
        self._grid = np.zeros((self.rows, self.cols), dtype=np.int64)
        self._starts: list[tuple[int, int]] = [(-1, -1), (-1, -1)]
        self._pot_cells: list[tuple[int, int]] = []
        self._serve_cells: list[tuple[int, int]] = []
        self._onion_disp: list[tuple[int, int]] = []
        self._dish_disp: list[tuple[int, int]] = []
        self._counter_cells: list[tuple[int, int]] = []
        for r, line in enumerate(lines):
            for c, ch in enumerate(line):
                if ch.isdigit():
                    self._starts[int(ch) - 1] = (r, c)
                    ch = "."
                kind = _CELL[ch]
                self._grid[r, c] = kind
                if kind == POT:
                    self._pot_cells.append((r, c))
                elif kind == SERVE:
                    self._serve_cells.append((r, c))
                elif kind == ONION_DISP:
                    self._onion_disp.append((r, c))
                elif kind == DISH_DISP:
                    self._dish_disp.append((r, c))
                elif kind == COUNTER:
                    self._counter_cells.append((r, c))

        self._pots = [Pot() for _ in self._pot_cells]
        self._pos: list[tuple[int, int]] = list(self._starts)
        self._orient = [NORTH, NORTH]
        # held[i]: None | "onion" | "dish" | ("soup", n_onions)
        self._held: list = [None, None]
        self._counter_items: dict[tuple[int, int], object] = {}

    def _obs_dims(self) -> list[int]:
        return [96, 96]

    # ------------------------------------------------------------------

    def _do_reset(self) -> None:
        self._pos = list(self._starts)
        self._orient = [NORTH, NORTH]
        self._held = [None, None]
        self._counter_items.clear()
        for p in self._pots:
            p.reset()

    def _walkable(self, r: int, c: int) -> bool:
        return 0 <= r < self.rows and 0 <= c < self.cols and self._grid[r, c] == FLOOR

    def _faced(self, i: int) -> tuple[int, int]:
        dr, dc = DELTAS[self._orient[i]]
        return (self._pos[i][0] + dr, self._pos[i][1] + dc)

    def _do_step(self, actions: list[int]) -> tuple[list[float], bool]:
        shaped = [0.0, 0.0]
        sparse = 0.0

        # movement: orientation always updates, positions resolve jointly
        prop = list(self._pos)
        for i, a in enumerate(actions):
            if a < 4:
                self._orient[i] = a
                dr, dc = DELTAS[a]
                r, c = self._pos[i]
                if self._walkable(r + dr, c + dc):
                    prop[i] = (r + dr, c + dc)
        if prop[0] == prop[1]:
            prop = list(self._pos)  # same target
        elif prop[0] == self._pos[1] and prop[1] == self._pos[0]:
            prop = list(self._pos)  # swap
        else:
            # moving into a cell the other fails to vacate blocks too
            if prop[0] == self._pos[1] and prop[1] == self._pos[1]:
                prop[0] = self._pos[0]
            if prop[1] == self._pos[0] and prop[0] == self._pos[0]:
                prop[1] = self._pos[1]
        self._pos = prop

        # interacts, player order
        for i, a in enumerate(actions):
            if a != INTERACT:
                continue
            r, c = self._faced(i)
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                continue
            kind = self._grid[r, c]
            held = self._held[i]
            if kind == ONION_DISP:
                if held is None:
                    self._held[i] = "onion"
            elif kind == DISH_DISP:
                if held is None:
                    self._held[i] = "dish"
                    shaped[i] += SHAPED_DISH_PICKUP
            elif kind == POT:
                j = self._pot_cells.index((r, c))
                pot = self._pots[j]
                if held == "onion" and not pot.ready and pot.timer < 0 and pot.onions < self.recipe_size:
                    pot.onions += 1
                    self._held[i] = None
                    shaped[i] += SHAPED_ONION_IN_POT
                    if pot.onions == self.recipe_size:
                        pot.timer = COOK_TIME  # cooking starts by itself
                elif held == "dish" and pot.ready:
                    self._held[i] = ("soup", pot.onions)
                    pot.reset()
                    shaped[i] += SHAPED_SOUP_PICKUP
            elif kind == SERVE:
                if isinstance(held, tuple):
                    if held[1] == self.recipe_size:
                        sparse += DELIVERY_REWARD
                    self._held[i] = None  # an invalid soup is discarded unpaid
            elif kind == COUNTER:
                item = self._counter_items.get((r, c))
                if held is not None and item is None:
                    self._counter_items[(r, c)] = held
                    self._held[i] = None
                elif held is None and item is not None:
                    self._held[i] = item
                    del self._counter_items[(r, c)]

        # pots tick at the end of the step, the fill tick included
        for pot in self._pots:
            if pot.timer > 0:
                pot.timer -= 1
                if pot.timer == 0:
                    pot.ready = True

        share = sparse / 2.0
        if self.reward_type == "shaped":
            rewards = [share + shaped[0], share + shaped[1]]
        else:
            rewards = [share, share]
        return rewards, False  # only the time limit ends an episode

    # ------------------------------------------------------------------
    # featurization

    def _closest(self, me: tuple[int, int], cells: list[tuple[int, int]]):
        """Smallest Manhattan distance, ties by row-major order."""
        best = None
        best_key = None
        for (r, c) in cells:
            key = (abs(r - me[0]) + abs(c - me[1]), r, c)
            if best_key is None or key < best_key:
                best_key = key
                best = (r, c)
        return best

    def _delta(self, me: tuple[int, int], cell: tuple[int, int] | None) -> tuple[float, float]:
        if cell is None:
            return (0.0, 0.0)
        return (float(cell[1] - me[1]), float(cell[0] - me[0]))

    def _player_features(self, i: int) -> np.ndarray:
        v = np.zeros(46)
        me = self._pos[i]
        held = self._held[i]
        v[self._orient[i]] = 1.0
        if held == "onion":
            v[4] = 1.0
        elif isinstance(held, tuple):
            v[5] = 1.0
        elif held == "dish":
            v[6] = 1.0
        # v[7] is the tomato slot, never used in this kitchen
        for d in range(4):
            rr = me[0] + DELTAS[d][0]
            cc = me[1] + DELTAS[d][1]
            wall = not (0 <= rr < self.rows and 0 <= cc < self.cols) or self._grid[rr, cc] != FLOOR
            v[8 + d] = 1.0 if wall else 0.0

        loose = self._counter_items
        onions = [p for p, it in loose.items() if it == "onion"] + self._onion_disp
        dishes = [p for p, it in loose.items() if it == "dish"] + self._dish_disp
        soups = [p for p, it in loose.items() if isinstance(it, tuple)]
        ready_pots = [self._pot_cells[j] for j, pot in enumerate(self._pots) if pot.ready]
        empty_counters = [p for p in self._counter_cells if p not in loose]

        k = 12
        # onion
        v[k : k + 2] = (0.0, 0.0) if held == "onion" else self._delta(me, self._closest(me, onions))
        k += 2
        # tomato: no sources in this kitchen
        k += 2
        # dish
        v[k : k + 2] = (0.0, 0.0) if held == "dish" else self._delta(me, self._closest(me, dishes))
        k += 2
        # soup (loose or ready in a pot) and its ingredient counts
        soup_n = 0
        if isinstance(held, tuple):
            soup_n = held[1]
            k += 2
        else:
            cands = soups + ready_pots
            cell = self._closest(me, cands)
            v[k : k + 2] = self._delta(me, cell)
            if cell is not None:
                if cell in self._pot_cells:
                    soup_n = self._pots[self._pot_cells.index(cell)].onions
                else:
                    soup_n = self._counter_items[cell][1]
            k += 2
        # serving cell
        v[k : k + 2] = self._delta(me, self._closest(me, self._serve_cells))
        k += 2
        # empty counter
        v[k : k + 2] = self._delta(me, self._closest(me, empty_counters))
        k += 2
        v[k] = float(soup_n)
        v[k + 1] = 0.0  # tomatoes
        k += 2

        order = sorted(
            range(len(self._pots)),
            key=lambda j: (
                abs(self._pot_cells[j][0] - me[0]) + abs(self._pot_cells[j][1] - me[1]),
                self._pot_cells[j],
            ),
        )
        for slot in range(2):
            if slot < len(order):
                j = order[slot]
                pot = self._pots[j]
                v[k] = 1.0
                v[k + 1] = 1.0 if (pot.onions == 0 and not pot.ready) else 0.0
                v[k + 2] = 1.0 if pot.onions == self.recipe_size else 0.0
                v[k + 3] = 1.0 if pot.timer > 0 else 0.0
                v[k + 4] = 1.0 if pot.ready else 0.0
                v[k + 5] = float(pot.onions)
                v[k + 6] = 0.0
                v[k + 7] = float(pot.timer) if pot.timer > 0 else (0.0 if pot.ready else -1.0)
                v[k + 8 : k + 10] = self._delta(me, self._pot_cells[j])
            k += 10
        return v

    def _observe(self) -> list[np.ndarray]:
        feats = [self._player_features(0), self._player_features(1)]
        out = []
        for i in range(2):
            other = 1 - i
            me = self._pos[i]
            rel = self._delta(me, self._pos[other])
            tail = np.array([rel[0], rel[1], float(me[1]), float(me[0])])
            out.append(np.concatenate([feats[i], feats[other], tail]))
        return out

    def render(self) -> str:
        glyph = {FLOOR: ".", COUNTER: "X", POT: "P", ONION_DISP: "O", DISH_DISP: "D", SERVE: "S"}
        rows = []
        for r in range(self.rows):
            row = []
            for c in range(self.cols):
                ch = glyph[int(self._grid[r, c])]
                if (r, c) in self._counter_items:
                    it = self._counter_items[(r, c)]
                    ch = "o" if it == "onion" else ("d" if it == "dish" else "s")
                for i, p in enumerate(self._pos):
                    if p == (r, c):
                        ch = str(i + 1)
                row.append(ch)
            rows.append("".join(row))
        pots = ", ".join(
            f"pot{j}@{cell}: onions={p.onions} timer={p.timer} ready={p.ready}"
            for j, (cell, p) in enumerate(zip(self._pot_cells, self._pots))
        )
        return "\n".join(rows) + "\n" + pots


def build(cfg: EnvConfig) -> OvercookedEnv:
    return OvercookedEnv(cfg)
