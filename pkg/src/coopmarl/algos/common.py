"""Shared learner plumbing.

Configs, the exploration schedule, action selection, observation stacking,
per-agent networks with optional parameter sharing, and running reward
statistics. Training batches use agent-major rows throughout: the flat row
index for agent a and episode b is a * batch + b.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatchError
from ..nn import autodiff as ad
from ..nn import FEEDFORWARD, RECURRENT, NetSpec, Network, Tape, Var
from ..replay import EpisodeBatch
from ..rng import RngStream

EPS_START = 1.0
EPS_END = 0.05
EPS_ANNEAL_STEPS = 50_000


@dataclass(frozen=True)
class QmixConfig:
    """Off-policy value-factorization learner settings."""

    gamma: float = 0.99
    lr: float = 5e-4
    hidden_dim: int = 64
    recurrent: bool = True
    share_parameters: bool = True
    obs_agent_id: bool = True
    obs_last_action: bool = True
    batch_size: int = 32
    buffer_size: int = 5000
    eps_start: float = EPS_START
    eps_end: float = EPS_END
    eps_anneal_steps: int = EPS_ANNEAL_STEPS
    eval_eps: float = 0.0
    target_update_interval: int = 200
    mixing_dim: int = 32
    hypernet_dim: int = 64
    hypernet_layers: int = 2
    standardize_rewards: bool = True
    double_q: bool = False
    prioritized_replay: bool = False
    per_alpha: float = 0.6
    per_beta_start: float = 0.4
    per_beta_end: float = 1.0
    per_beta_horizon: int = 50_000
    per_eps: float = 1e-6

    def validated(self) -> "QmixConfig":
        if self.hypernet_layers not in (1, 2):
            raise DimMismatchError(f"hypernet_layers must be 1 or 2, got {self.hypernet_layers}")
        if self.batch_size < 1 or self.buffer_size < self.batch_size:
            raise DimMismatchError("need buffer_size >= batch_size >= 1")
        return self


@dataclass(frozen=True)
class ActorCriticConfig:
    """On-policy advantage actor-critic settings (synchronous runners)."""

    gamma: float = 0.99
    lr: float = 5e-4
    hidden_dim: int = 64
    recurrent: bool = True
    share_parameters: bool = True
    obs_agent_id: bool = True
    obs_last_action: bool = True
    n_runners: int = 10
    batch_size: int = 10
    n_step: int = 5
    entropy_coef: float = 0.01
    target_update_interval: int = 200
    standardize_rewards: bool = True

    def validated(self) -> "ActorCriticConfig":
        if self.n_step < 1:
            raise DimMismatchError(f"n_step must be >= 1, got {self.n_step}")
        return self


@dataclass(frozen=True)
class PPOConfig(ActorCriticConfig):
    """Adds proximal clipping and epoch reuse on top of the actor-critic."""

    epochs: int = 4
    clip_ratio: float = 0.2

    def validated(self) -> "PPOConfig":
        super().validated()
        if self.epochs < 1 or not 0.0 < self.clip_ratio < 1.0:
            raise DimMismatchError("need epochs >= 1 and 0 < clip_ratio < 1")
        return self


def epsilon(step: int, start: float = EPS_START, end: float = EPS_END,
            anneal_steps: int = EPS_ANNEAL_STEPS) -> float:
    """Linear exploration schedule, clamped at the final value."""
    frac = min(max(step, 0), anneal_steps) / anneal_steps
    return start + (end - start) * frac


def one_hot(indices: np.ndarray, n: int) -> np.ndarray:
    return np.eye(n)[np.asarray(indices, dtype=np.int64)]


def select_actions(values: np.ndarray, rng: RngStream, eps: float = 0.0) -> np.ndarray:
    """Epsilon-greedy over per-agent action values, shape (n_agents, n_actions)."""
    values = np.asarray(values)
    out = np.empty(values.shape[0], dtype=np.int64)
    for i, row in enumerate(values):
        if eps > 0.0 and rng.random() < eps:
            out[i] = rng.randint(row.shape[0])
        else:
            out[i] = int(np.argmax(row))
    return out


def sample_actions(logits: np.ndarray, rng: RngStream,
                   greedy: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Categorical draw (or argmax) per agent over (n_agents, n_actions) logits.

    Returns (actions, log-probabilities of the chosen actions).
    """
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    probs = np.exp(log_probs)
    acts = np.empty(logits.shape[0], dtype=np.int64)
    for i, p in enumerate(probs):
        if greedy:
            acts[i] = int(np.argmax(p))
        else:
            acts[i] = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
            acts[i] = min(acts[i], p.shape[0] - 1)
    return acts, log_probs[np.arange(logits.shape[0]), acts]


def stack_agent_inputs(obs: np.ndarray, last_actions: np.ndarray | None, n_actions: int,
                       agent_id: bool = True, last_action: bool = True) -> np.ndarray:
    """Stack per-agent decision inputs for acting.

    obs is (n_agents, n_envs, obs_dim); last_actions is (n_agents, n_envs)
    or None for the first step of an episode (encoded as all-zero one-hots).
    """
    n_agents, n_envs, _ = obs.shape
    parts = [obs]
    if last_action:
        if last_actions is None:
            parts.append(np.zeros((n_agents, n_envs, n_actions)))
        else:
            parts.append(one_hot(last_actions, n_actions))
    if agent_id:
        ids = np.eye(n_agents)[:, None, :]
        parts.append(np.broadcast_to(ids, (n_agents, n_envs, n_agents)))
    return np.concatenate(parts, axis=-1)


def episode_inputs(batch: EpisodeBatch, n_actions: int,
                   agent_id: bool = True, last_action: bool = True) -> np.ndarray:
    """Stack training inputs for a padded episode batch.

    Returns (T+1, n_agents, batch, in_dim) so that reshaping any time slice
    keeps rows agent-major. Slot t pairs obs[t] with the one-hot of the
    action taken at t-1 (zeros at t = 0; padded tail slots are masked out of
    every loss, so their content is irrelevant).
    """
    b, tp1, n_agents, _ = batch.obs.shape
    parts = [batch.obs.transpose(1, 2, 0, 3)]
    if last_action:
        oh = np.zeros((tp1, n_agents, b, n_actions))
        taken = one_hot(batch.actions, n_actions)  # (B, T, N, A)
        oh[1:] = taken.transpose(1, 2, 0, 3)
        parts.append(oh)
    if agent_id:
        ids = np.eye(n_agents)[None, :, None, :]
        parts.append(np.broadcast_to(ids, (tp1, n_agents, b, n_agents)))
    return np.concatenate(parts, axis=-1)


class MultiAgentNet:
    """One decision network per agent, optionally a single shared one.

    Acting works on (n_agents, n_envs, ...) stacks; training unrolls work on
    (T, n_agents, batch, in_dim) stacks and yield agent-major row blocks of
    shape (n_agents * batch, out_dim) per step.
    """

    def __init__(self, in_dim: int, out_dim: int, n_agents: int, hidden_dim: int = 64,
                 share: bool = True, recurrent: bool = True, rng: RngStream | None = None):
        cell = RECURRENT if recurrent else FEEDFORWARD
        self.spec = NetSpec(in_dim, out_dim, hidden_dim, cell)
        self.n_agents = n_agents
        self.share = share
        self.nets = [Network(self.spec, rng) for _ in range(1 if share else n_agents)]

    @property
    def recurrent(self) -> bool:
        return self.spec.cell == RECURRENT

    def zero_hidden(self, n_envs: int) -> np.ndarray | None:
        if not self.recurrent:
            return None
        return np.zeros((self.n_agents, n_envs, self.spec.hidden_dim))

    def act_values(self, inputs: np.ndarray,
                   hidden: np.ndarray | None) -> tuple[np.ndarray, np.ndarray | None]:
        """Gradient-free forward over an (n_agents, n_envs, in_dim) stack."""
        n_agents, n_envs, in_dim = inputs.shape
        if self.share:
            h = None if hidden is None else hidden.reshape(n_agents * n_envs, -1)
            out, h2, _ = self.nets[0].forward(inputs.reshape(-1, in_dim), h, frozen=True)
            vals = out.data.reshape(n_agents, n_envs, -1)
            return vals, None if h2 is None else h2.reshape(n_agents, n_envs, -1)
        vals = np.empty((n_agents, n_envs, self.spec.out_dim))
        new_hidden = None if hidden is None else np.empty_like(hidden)
        for i, net in enumerate(self.nets):
            out, h2, _ = net.forward(inputs[i], None if hidden is None else hidden[i],
                                     frozen=True)
            vals[i] = out.data
            if new_hidden is not None:
                new_hidden[i] = h2
        return vals, new_hidden

    def unroll(self, inputs: np.ndarray, tape: Tape | None = None,
               frozen: bool = False) -> tuple[list[Var], Tape]:
        """Full-sequence forward over a (T, n_agents, batch, in_dim) stack."""
        t_len, n_agents, b, in_dim = inputs.shape
        tape = tape or Tape()
        if self.share:
            outs, tape = self.nets[0].forward_sequence(
                inputs.reshape(t_len, n_agents * b, in_dim), tape=tape, frozen=frozen)
            return outs, tape
        per_agent = [self.nets[i].forward_sequence(inputs[:, i], tape=tape, frozen=frozen)[0]
                     for i in range(n_agents)]
        return [ad.concat([per_agent[i][t] for i in range(n_agents)], axis=0)
                for t in range(t_len)], tape

    def stores(self) -> list:
        return [net.store for net in self.nets]

    def copy_from(self, other: "MultiAgentNet") -> None:
        for mine, theirs in zip(self.nets, other.nets):
            mine.store.copy_from(theirs.store)

    def checkpoint_entries(self, prefix: str) -> dict[str, Network]:
        return {f"{prefix}.{i}": net for i, net in enumerate(self.nets)}


class RunningMeanStd:
    """Streaming mean and variance over scalars (batch-merged Welford)."""

    def __init__(self) -> None:
        self.mean = 0.0
        self.var = 1.0
        self.count = 0.0

    def update(self, xs: np.ndarray) -> None:
        xs = np.asarray(xs, dtype=np.float64).ravel()
        if xs.size == 0:
            return
        n = float(xs.size)
        delta = float(xs.mean()) - self.mean
        tot = self.count + n
        m2 = self.var * self.count + float(xs.var()) * n + delta * delta * self.count * n / tot
        self.mean += delta * n / tot
        self.var = m2 / tot
        self.count = tot

    def normalize(self, xs: np.ndarray) -> np.ndarray:
        return (np.asarray(xs, dtype=np.float64) - self.mean) / np.sqrt(self.var + 1e-8)


def masked_mean_var(terms: list[Var], masks: list[np.ndarray]) -> Var:
    """Mean of per-step Vars weighted by 0/1 masks, as a live Var.

    terms[t] and masks[t] must share a flat shape; the denominator is the
    total mask weight across all steps.
    """
    denom = float(sum(m.sum() for m in masks))
    if denom <= 0.0:
        raise DimMismatchError("all-zero mask")
    acc = None
    for term, m in zip(terms, masks):
        piece = ad.total(ad.mul(term, term._tape.const(m)))
        acc = piece if acc is None else acc + piece
    return acc * (1.0 / denom)
