"""Episode-granular replay storage with uniform and prioritized sampling.

Episodes are stored whole (recurrent learners replay full trajectories).
Uniform sampling draws without replacement. Prioritized sampling follows
the proportional scheme: an episode's raw priority is its mean absolute
TD error plus a floor epsilon, the sum tree holds raw**alpha, and draws
are stratified over the tree's cumulative mass with importance weights
(K * P(i))**(-beta) normalized by the largest weight over the whole
buffer. New episodes enter at the current maximum raw priority so they
are sampled at least once before their first priority update.

Insertion builds the episode arrays completely before anything is
published to the ring, so a concurrent reader never sees a partial
episode; eviction is FIFO. Ids are monotonically increasing insertion
counters, and priority updates aimed at evicted ids raise BadIdError.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EpisodeRecord
from .errors import BadIdError, UnderfilledError
from .rng import RngStream

DEFAULT_ALPHA = 0.6
DEFAULT_EPS = 1e-6
DEFAULT_BETA_START = 0.4
DEFAULT_BETA_END = 1.0


@dataclass(frozen=True)
class BetaSchedule:
    """Linear anneal of the importance-weight exponent over training steps."""

    start: float = DEFAULT_BETA_START
    end: float = DEFAULT_BETA_END
    horizon: int = 50_000

    def __call__(self, step: int) -> float:
        frac = min(1.0, max(0.0, step / self.horizon))
        return self.start + (self.end - self.start) * frac


@dataclass
class Episode:
    """One stored episode; observation arrays carry the post-step frame too."""

    obs: np.ndarray  # [T+1, N, obs_dim]
    state: np.ndarray  # [T+1, state_dim]
    actions: np.ndarray  # [T, N] int64
    rewards: np.ndarray  # [T]
    terminated: bool

    @property
    def length(self) -> int:
        return self.actions.shape[0]

    @classmethod
    def from_record(cls, rec: EpisodeRecord) -> "Episode":
        return cls(
            obs=np.array(rec.observations, dtype=np.float64),
            state=np.array(rec.states, dtype=np.float64),
            actions=np.array(rec.actions, dtype=np.int64),
            rewards=np.array(rec.rewards, dtype=np.float64),
            terminated=bool(rec.terminated),
        )


@dataclass
class EpisodeBatch:
    """B episodes padded to the longest one in the batch.

    Step-indexed arrays have time length T = max episode length; obs and
    state carry T + 1 frames so the step after every valid step is
    addressable for bootstrapped targets. mask is 1.0 on valid steps and
    forms a prefix per row; terminated is 1.0 only on a row's last valid
    step and only when the episode ended on a true terminal.
    """

    obs: np.ndarray  # [B, T+1, N, obs_dim]
    state: np.ndarray  # [B, T+1, state_dim]
    actions: np.ndarray  # [B, T, N]
    rewards: np.ndarray  # [B, T]
    terminated: np.ndarray  # [B, T]
    mask: np.ndarray  # [B, T]

    @property
    def batch_size(self) -> int:
        return self.obs.shape[0]

    @property
    def max_length(self) -> int:
        return self.actions.shape[1]


def collate(episodes: list[Episode]) -> EpisodeBatch:
    b = len(episodes)
    t_max = max(ep.length for ep in episodes)
    n, obs_dim = episodes[0].obs.shape[1], episodes[0].obs.shape[2]
    state_dim = episodes[0].state.shape[1]

    obs = np.zeros((b, t_max + 1, n, obs_dim))
    state = np.zeros((b, t_max + 1, state_dim))
    actions = np.zeros((b, t_max, n), dtype=np.int64)
    rewards = np.zeros((b, t_max))
    terminated = np.zeros((b, t_max))
    mask = np.zeros((b, t_max))
    for i, ep in enumerate(episodes):
        t = ep.length
        obs[i, : t + 1] = ep.obs
        state[i, : t + 1] = ep.state
        actions[i, :t] = ep.actions
        rewards[i, :t] = ep.rewards
        mask[i, :t] = 1.0
        if ep.terminated:
            terminated[i, t - 1] = 1.0
    return EpisodeBatch(obs, state, actions, rewards, terminated, mask)


class SumTree:
    """Binary sum tree over a fixed number of leaves.

    Internal nodes are recomputed as the exact sum of their two children on
    every write, so parent == left + right holds bit-for-bit at all times.
    """

    def __init__(self, capacity: int):
        size = 1
        while size < capacity:
            size *= 2
        self._leaves = size
        self._tree = np.zeros(2 * size)

    @property
    def total(self) -> float:
        return float(self._tree[1])

    def get(self, slot: int) -> float:
        return float(self._tree[self._leaves + slot])

    def set(self, slot: int, value: float) -> None:
        i = self._leaves + slot
        self._tree[i] = value
        i //= 2
        while i >= 1:
            self._tree[i] = self._tree[2 * i] + self._tree[2 * i + 1]
            i //= 2

    def find(self, prefix: float) -> int:
        """Largest slot whose cumulative sum exceeds the prefix mass."""
        i = 1
        while i < self._leaves:
            left = self._tree[2 * i]
            if prefix < left:
                i = 2 * i
            else:
                prefix -= left
                i = 2 * i + 1
        return i - self._leaves


class ReplayBuffer:
    """FIFO ring of episodes with a parallel priority index."""

    def __init__(self, capacity: int, alpha: float = DEFAULT_ALPHA, eps: float = DEFAULT_EPS):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.alpha = float(alpha)
        self.eps = float(eps)
        self._slots: list[Episode | None] = [None] * capacity
        self._ids = np.full(capacity, -1, dtype=np.int64)
        self._raw = np.zeros(capacity)
        self._tree = SumTree(capacity)
        self._next_id = 0
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def can_sample(self, batch_size: int) -> bool:
        return self._count >= batch_size

    def insert(self, episode: Episode | EpisodeRecord) -> int:
        """Store one episode, evicting the oldest beyond capacity.

        Returns the episode's id (usable with update_priorities).
        """
        if isinstance(episode, EpisodeRecord):
            episode = Episode.from_record(episode)
        raw = self._raw[: self._count].max() if self._count else 1.0
        slot = self._next_id % self.capacity
        eid = self._next_id
        self._slots[slot] = episode
        self._ids[slot] = eid
        self._raw[slot] = raw
        self._tree.set(slot, raw ** self.alpha)
        self._next_id += 1
        self._count = min(self._count + 1, self.capacity)
        return eid

    def episode_by_id(self, eid: int) -> Episode:
        return self._slots[self._slot_of(eid)]

    def _slot_of(self, eid: int) -> int:
        slot = eid % self.capacity
        if eid < 0 or self._ids[slot] != eid:
            raise BadIdError(f"episode id {eid} is not stored")
        return slot

    def _require(self, batch_size: int) -> None:
        if not self.can_sample(batch_size):
            raise UnderfilledError(
                f"buffer holds {self._count} episodes, need {batch_size}"
            )

    def sample_uniform(self, batch_size: int, rng: RngStream) -> EpisodeBatch:
        """Uniform without replacement."""
        self._require(batch_size)
        picks = rng.sample_indices(self._count, batch_size)
        return collate([self._slots[i] for i in picks])

    def sample_prioritized(self, batch_size: int, rng: RngStream,
                           beta: float) -> tuple[EpisodeBatch, np.ndarray, list[int]]:
        """Stratified proportional draws; returns (batch, weights, ids)."""
        self._require(batch_size)
        total = self._tree.total
        slots = []
        for j in range(batch_size):
            u = (j + rng.random()) / batch_size * total
            slot = self._tree.find(u)
            # zero-mass padding leaves are unreachable for u < total, but
            # guard against landing one past the live region on u == total
            slots.append(min(slot, self._count - 1))
        probs = np.array([self._tree.get(s) / total for s in slots])
        k = self._count
        weights = (k * probs) ** (-beta)
        leaf_min = self._raw[:k].min() ** self.alpha
        w_max = (k * leaf_min / total) ** (-beta)
        weights = weights / w_max
        ids = [int(self._ids[s]) for s in slots]
        return collate([self._slots[s] for s in slots]), weights, ids

    def update_priorities(self, ids: list[int], td_errors) -> None:
        """Set each episode's raw priority to |mean TD error| + eps."""
        for eid, delta in zip(ids, np.asarray(td_errors, dtype=np.float64)):
            slot = self._slot_of(int(eid))
            raw = abs(float(delta)) + self.eps
            self._raw[slot] = raw
            self._tree.set(slot, raw ** self.alpha)

    def max_raw_priority(self) -> float:
        return float(self._raw[: self._count].max()) if self._count else 1.0
