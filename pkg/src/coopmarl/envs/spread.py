"""Cooperative navigation: N point agents cover N landmarks in the plane.

Keys follow "SimpleSpread-{N}-v0" (optional "mpe:" prefix). Agents and
landmarks spawn uniformly in [-1, 1]^2 with zero initial velocity.

Physics, all float64, one tick:

    force_i  = unit action force * GAIN + soft contact forces
    v_i     <- v_i * (1 - DAMPING) + force_i * DT
    |v_i|   <- clamped to max_speed when one is configured
    p_i     <- p_i + v_i * DT

Actions map to (none, -x, +x, -y, +y). The contact force between two
overlapping agents is the softcore push

    penetration = softplus(-(dist - min_dist) / MARGIN) * MARGIN
    f = CONTACT * (delta / dist) * penetration

applied equal and opposite, with softplus evaluated in its overflow-safe
form (x + log1p(exp(-x)) for positive x). Landmarks are intangible.

Each agent's reward is the shared coverage term (minus the sum over
landmarks of the distance to the nearest agent) minus one per other agent
it overlaps with; the team reward is the sum over agents.

An agent observes [own velocity, own position, every landmark relative to
it (landmark order), every other agent relative to it (index order), a zero
block]. The zero block is two entries per other agent, which lands the
total at 6N: 18, 24, 30 for N = 3, 4, 5. The global state concatenates the
per-agent observations.
"""
from __future__ import annotations

import re

import numpy as np

from ..config import EnvConfig
from ..errors import UnknownKeyError
from .base import Environment

_KEY_RE = re.compile(r"^(?:mpe:)?SimpleSpread-(\d+)-v0$")

DT = 0.1
DAMPING = 0.25
GAIN = 5.0
AGENT_RADIUS = 0.15
LANDMARK_RADIUS = 0.05
CONTACT = 100.0
MARGIN = 1e-3

# action id -> unit force
FORCES = (
    (0.0, 0.0),
    (-1.0, 0.0),
    (1.0, 0.0),
    (0.0, -1.0),
    (0.0, 1.0),
)


def softplus(x: float) -> float:
    if x > 0.0:
        return x + float(np.log1p(np.exp(-x)))
    return float(np.log1p(np.exp(x)))


def parse_key(key: str) -> int:
    m = _KEY_RE.match(key)
    if not m:
        raise UnknownKeyError(f"unknown spread key {key!r}")
    n = int(m.group(1))
    if n < 2:
        raise UnknownKeyError(f"spread needs at least 2 agents, got {n}")
    return n


class SpreadEnv(Environment):
    def __init__(self, cfg: EnvConfig):
        n = parse_key(cfg.key)
        super().__init__(cfg, n_agents=n, n_actions=5)
        self.max_speed: float | None = cfg.extras.get("max_speed")
        self._pos = np.zeros((n, 2))
        self._vel = np.zeros((n, 2))
        self._marks = np.zeros((n, 2))

    def _obs_dims(self) -> list[int]:
        return [6 * self.n_agents] * self.n_agents

    def _do_reset(self) -> None:
        n = self.n_agents
        for arr in (self._pos, self._marks):
            for i in range(n):
                arr[i, 0] = self._rng.uniform(-1.0, 1.0)
                arr[i, 1] = self._rng.uniform(-1.0, 1.0)
        self._vel[:] = 0.0

    def _do_step(self, actions: list[int]) -> tuple[list[float], bool]:
        n = self.n_agents
        force = np.zeros((n, 2))
        for i, a in enumerate(actions):
            fx, fy = FORCES[a]
            force[i, 0] = fx * GAIN
            force[i, 1] = fy * GAIN

        min_dist = 2.0 * AGENT_RADIUS
        for i in range(n):
            for j in range(i + 1, n):
                delta = self._pos[i] - self._pos[j]
                dist = float(np.hypot(delta[0], delta[1]))
                dist = max(dist, 1e-9)
                penetration = softplus(-(dist - min_dist) / MARGIN) * MARGIN
                f = CONTACT * (delta / dist) * penetration
                force[i] += f
                force[j] -= f

        self._vel *= 1.0 - DAMPING
        self._vel += force * DT
        if self.max_speed is not None:
            speed = np.sqrt((self._vel**2).sum(axis=1))
            over = speed > self.max_speed
            if over.any():
                self._vel[over] *= (self.max_speed / speed[over])[:, None]
        self._pos += self._vel * DT

        shared = 0.0
        for k in range(n):
            d = np.sqrt(((self._pos - self._marks[k]) ** 2).sum(axis=1))
            shared -= float(d.min())
        rewards = [shared] * n
        for i in range(n):
            for j in range(i + 1, n):
                delta = self._pos[i] - self._pos[j]
                if float(np.hypot(delta[0], delta[1])) < min_dist:
                    rewards[i] -= 1.0
                    rewards[j] -= 1.0
        return rewards, False  # only the time limit ends an episode

    def _observe(self) -> list[np.ndarray]:
        n = self.n_agents
        out = []
        for i in range(n):
            v = np.zeros(6 * n)
            v[0:2] = self._vel[i]
            v[2:4] = self._pos[i]
            k = 4
            for m in range(n):
                v[k : k + 2] = self._marks[m] - self._pos[i]
                k += 2
            for j in range(n):
                if j == i:
                    continue
                v[k : k + 2] = self._pos[j] - self._pos[i]
                k += 2
            # trailing zeros stay zero
            out.append(v)
        return out

    def render(self) -> str:
        lines = []
        for i in range(self.n_agents):
            lines.append(
                f"agent {i}: pos=({self._pos[i,0]:+.3f},{self._pos[i,1]:+.3f}) "
                f"vel=({self._vel[i,0]:+.3f},{self._vel[i,1]:+.3f})"
            )
        for k in range(self.n_agents):
            lines.append(f"landmark {k}: ({self._marks[k,0]:+.3f},{self._marks[k,1]:+.3f})")
        return "\n".join(lines)


def build(cfg: EnvConfig) -> SpreadEnv:
    return SpreadEnv(cfg)
