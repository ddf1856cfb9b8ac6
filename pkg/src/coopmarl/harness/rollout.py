"""Episode collection and policy evaluation.

Training rollouts drive a learner's `act` through live environments and
package the result as replay `Episode`s (plus behavior log-probs when the
learner emits them, which on-policy updates need). Evaluation builds a
fresh environment and a fresh action stream from a seed offset of the
training seed, so measuring a policy can never perturb training state:
greedy action selection draws nothing from the training RNG, and no
learner or replay structure is touched.

The vector runner keeps `n_envs` environments in lockstep so recurrent
policies batch their forward passes across envs; finished envs keep
their final frame in the stack (their action draws are discarded) until
the whole batch completes, which keeps the RNG consumption pattern
independent of which env happens to finish first.
"""
from __future__ import annotations

import dataclasses
from multiprocessing import Pool

import numpy as np

from ..config import EnvConfig
from ..envs import make_env
from ..envs.base import random_policy, run_episode
from ..replay import Episode, EpisodeBatch, collate
from ..rng import EXPLORE_STREAM, RngStream
from .metrics import MetricsRow

# Golden-ratio constant; XOR keeps evaluation streams disjoint from the
# training streams of every seed without colliding across nearby seeds.
EVAL_SEED_OFFSET = 0x9E3779B9


def eval_seed(train_seed: int) -> int:
    return train_seed ^ EVAL_SEED_OFFSET


def spawn_seed(base_seed: int, index: int) -> int:
    """Derived child seed for worker/env `index`, stable across runs."""
    seq = np.random.SeedSequence([base_seed, index])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def collect_episode(env, learner, rng: RngStream, *, explore: bool,
                    env_step: int = 0) -> tuple[Episode, np.ndarray | None]:
    """Roll one full episode under the learner's policy.

    env_step anchors exploration schedules; it advances by one per step
    inside the episode. Returns the stored episode and, when the learner
    reports them, the (T, n_agents) behavior log-probs.
    """
    obs, state = env.reset()
    obs_frames = [np.stack(obs)]
    state_frames = [np.asarray(state, dtype=float)]
    actions: list[list[int]] = []
    rewards: list[float] = []
    logps: list[np.ndarray] = []
    hidden = learner.zero_hidden(1)
    last: np.ndarray | None = None
    truncated = False
    done = False
    t = 0
    while not done:
        out = learner.act(obs_frames[-1][:, None, :], last, hidden, rng,
                          explore=explore, env_step=env_step + t)
        acts, hidden = out[0], out[1]
        if len(out) > 2:
            logps.append(out[2][0])
        joint = [int(a) for a in acts[0]]
        result = env.step(joint)
        obs_frames.append(np.stack(env.get_obs()))
        state_frames.append(np.asarray(env.get_state(), dtype=float))
        actions.append(joint)
        rewards.append(result.reward)
        last = acts.T
        done = result.done
        truncated = bool(result.info["truncated"])
        t += 1
    episode = Episode(
        obs=np.stack(obs_frames),
        state=np.stack(state_frames),
        actions=np.asarray(actions, dtype=np.int64),
        rewards=np.asarray(rewards, dtype=float),
        terminated=not truncated,
    )
    return episode, (np.stack(logps) if logps else None)


def evaluation_returns(learner, env_cfg: EnvConfig, n_episodes: int,
                       seed: int) -> np.ndarray:
    """Episode returns of the greedy policy over exactly n_episodes.

    Uses a private environment and RNG derived from eval_seed(seed);
    nothing owned by training is read or written.
    """
    offset = eval_seed(seed)
    env = make_env(dataclasses.replace(env_cfg, seed=offset))
    rng = RngStream(offset, EXPLORE_STREAM)
    returns = np.empty(n_episodes)
    for i in range(n_episodes):
        episode, _ = collect_episode(env, learner, rng, explore=False)
        returns[i] = float(episode.rewards.sum())
    env.close()
    return returns


def evaluate(learner, env_cfg: EnvConfig, n_episodes: int, seed: int, *,
             step: int = 0, wall_seconds: float = 0.0) -> MetricsRow:
    returns = evaluation_returns(learner, env_cfg, n_episodes, seed)
    return MetricsRow.from_returns(step, returns, wall_seconds)


def collate_rollout(pairs: list[tuple[Episode, np.ndarray | None]],
                    n_agents: int) -> tuple[EpisodeBatch, np.ndarray]:
    """Pad per-episode behavior log-probs alongside the episode batch.

    Padded slots hold zeros; the batch mask already excludes them from
    every loss term.
    """
    batch = collate([ep for ep, _ in pairs])
    logp = np.zeros((batch.batch_size, batch.max_length, n_agents))
    for i, (ep, lp) in enumerate(pairs):
        if lp is not None:
            logp[i, : ep.length] = lp
    return batch, logp


class SyncVectorRunner:
    """Lockstep batch of environments sharing one policy forward pass."""

    def __init__(self, env_cfg: EnvConfig, n_envs: int, base_seed: int):
        if n_envs < 1:
            raise ValueError("n_envs must be at least 1")
        self.envs = [
            make_env(dataclasses.replace(env_cfg, seed=spawn_seed(base_seed, i)))
            for i in range(n_envs)
        ]
        self.n_envs = n_envs
        self.n_agents = self.envs[0].n_agents

    def collect(self, learner, rng: RngStream, *, env_step: int = 0,
                ) -> tuple[list[tuple[Episode, np.ndarray | None]], int]:
        """One finished episode per env; returns pairs plus steps consumed."""
        n = self.n_envs
        obs_frames: list[list[np.ndarray]] = []
        state_frames: list[list[np.ndarray]] = []
        for env in self.envs:
            obs, state = env.reset()
            obs_frames.append([np.stack(obs)])
            state_frames.append([np.asarray(state, dtype=float)])
        actions: list[list[list[int]]] = [[] for _ in range(n)]
        rewards: list[list[float]] = [[] for _ in range(n)]
        logps: list[list[np.ndarray]] = [[] for _ in range(n)]
        terminated = [False] * n
        active = [True] * n
        hidden = learner.zero_hidden(n)
        last: np.ndarray | None = None
        consumed = 0
        while any(active):
            stack = np.stack([frames[-1] for frames in obs_frames], axis=1)
            out = learner.act(stack, last, hidden, rng, explore=True,
                              env_step=env_step + consumed)
            acts, hidden = out[0], out[1]
            step_logp = out[2] if len(out) > 2 else None
            next_last = (last.copy() if last is not None
                         else np.zeros((self.n_agents, n), dtype=np.int64))
            for e in range(n):
                if not active[e]:
                    continue
                joint = [int(a) for a in acts[e]]
                result = self.envs[e].step(joint)
                obs_frames[e].append(np.stack(self.envs[e].get_obs()))
                state_frames[e].append(np.asarray(self.envs[e].get_state(), dtype=float))
                actions[e].append(joint)
                rewards[e].append(result.reward)
                if step_logp is not None:
                    logps[e].append(step_logp[e])
                next_last[:, e] = acts[e]
                consumed += 1
                if result.done:
                    active[e] = False
                    terminated[e] = not result.info["truncated"]
            last = next_last
        pairs = []
        for e in range(n):
            episode = Episode(
                obs=np.stack(obs_frames[e]),
                state=np.stack(state_frames[e]),
                actions=np.asarray(actions[e], dtype=np.int64),
                rewards=np.asarray(rewards[e], dtype=float),
                terminated=terminated[e],
            )
            pairs.append((episode, np.stack(logps[e]) if logps[e] else None))
        return pairs, consumed

    def close(self) -> None:
        for env in self.envs:
            env.close()


def random_episode_returns(env_cfg: EnvConfig, n_episodes: int,
                           seed: int) -> tuple[int, np.ndarray]:
    """Serial uniform-random rollouts: (total env steps, episode returns)."""
    env = make_env(dataclasses.replace(env_cfg, seed=seed))
    policy = random_policy(RngStream(seed, EXPLORE_STREAM))
    steps = 0
    returns = np.empty(n_episodes)
    for i in range(n_episodes):
        record = run_episode(env, policy, record=False)
        steps += record.length
        returns[i] = record.episode_return
    env.close()
    return steps, returns


def _random_chunk(args: tuple[EnvConfig, int, int]) -> tuple[int, np.ndarray]:
    env_cfg, n_episodes, seed = args
    return random_episode_returns(env_cfg, n_episodes, seed)


def parallel_random_returns(env_cfg: EnvConfig, n_episodes: int, seed: int,
                            n_workers: int) -> tuple[int, np.ndarray]:
    """Random rollouts split over a process pool.

    Episode counts are split as evenly as possible; each worker gets its
    own derived seed, and results concatenate in worker order so the
    output is independent of scheduling.
    """
    if n_workers < 1:
        raise ValueError("n_workers must be at least 1")
    base, extra = divmod(n_episodes, n_workers)
    jobs = []
    for w in range(n_workers):
        count = base + (1 if w < extra else 0)
        if count:
            jobs.append((env_cfg, count, spawn_seed(seed, w)))
    if n_workers == 1:
        parts = [_random_chunk(jobs[0])]
    else:
        with Pool(processes=n_workers) as pool:
            parts = pool.map(_random_chunk, jobs)
    steps = sum(p[0] for p in parts)
    returns = np.concatenate([p[1] for p in parts])
    return steps, returns
