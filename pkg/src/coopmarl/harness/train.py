"""Seed-level training runs with periodic evaluation and checkpoints.

A run trains one learner per seed under its own directory
`{out_dir}/{algo}_{env_key}_s{seed}/` holding `metrics.csv` and a
`checkpoints/` tree. Evaluation fires once per crossed multiple of
`eval_interval` (rows are labelled with the multiple, not the exact env
step count, so cadence is stable however episode lengths land), plus an
initial row at step 0; a checkpoint is written at every evaluation.

All stochastic state is split into fixed streams of the seed: parameter
init, exploration, and replay sampling never share draws, and evaluation
derives its own seed offset, so two runs with the same config and seed
produce byte-identical metrics apart from wall-clock columns. `clock`
is injectable precisely so tests can pin those too.

Value-based training alternates one collected episode with one gradient
step once the buffer holds a batch. On-policy training collects
`batch_size` fresh episodes through the lockstep vector runner per
update and discards them afterwards.
"""
from __future__ import annotations

import dataclasses
import json
import time
from pathlib import Path

from ..algos import QmixConfig, build_learner, env_info
from ..algos.actor_critic import Rollout
from ..envs import make_env
from ..nn.checkpoint import save_checkpoint
from ..replay import BetaSchedule, ReplayBuffer
from ..rng import EXPLORE_STREAM, PARAM_INIT_STREAM, REPLAY_STREAM, RngStream
from .config import RunConfig
from .metrics import MetricsRow, MetricsWriter
from .rollout import (SyncVectorRunner, collate_rollout, collect_episode,
                      evaluation_returns)


@dataclasses.dataclass(frozen=True)
class SeedResult:
    """Artifacts of one seed's training run."""

    seed: int
    run_dir: Path
    metrics_path: Path
    rows: tuple[MetricsRow, ...]


def run_dir_for(run: RunConfig, seed: int) -> Path:
    return Path(run.out_dir) / f"{run.algo}_{run.env.key}_s{seed}"


def write_manifest(run: RunConfig, seed: int, run_dir: Path) -> Path:
    """Record what produced this run dir, so checkpoints self-describe.

    `eval --checkpoint` rebuilds the learner and environment from this
    file instead of asking the caller to repeat every flag.
    """
    payload = {
        "algo": run.algo,
        "seed": seed,
        "env": {
            "family": run.env.env_family,
            "key": run.env.key,
            "seed": seed,
            "time_limit": run.env.time_limit,
            "extras": dict(run.env.extras),
        },
        "learner_overrides": dict(run.learner_overrides),
        "total_steps": run.total_steps,
        "eval_interval": run.eval_interval,
        "n_test_episodes": run.n_test_episodes,
    }
    path = run_dir / "run.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def load_manifest(run_dir: Path) -> dict:
    return json.loads((run_dir / "run.json").read_text(encoding="utf-8"))


def train(run: RunConfig, clock=time.monotonic) -> list[SeedResult]:
    """Train every seed of the run config; returns one result per seed."""
    run = run.validated()
    return [_train_seed(run, seed, clock) for seed in run.seeds]


class _EvalTracker:
    """Fires evaluation at step 0 and at each crossed interval multiple."""

    def __init__(self, run: RunConfig, seed: int, learner, run_dir: Path, clock):
        self.run = run
        self.seed = seed
        self.learner = learner
        self.clock = clock
        self.start = clock()
        self.rows: list[MetricsRow] = []
        self.next_eval = run.eval_interval
        self.ckpt_dir = run_dir / "checkpoints"
        self.ckpt_dir.mkdir(parents=True, exist_ok=True)
        self.writer = MetricsWriter(run_dir / "metrics.csv")
        self._emit(0)

    def _emit(self, label: int) -> None:
        returns = evaluation_returns(self.learner, self.run.env,
                                     self.run.n_test_episodes, self.seed)
        row = MetricsRow.from_returns(label, returns, self.clock() - self.start)
        self.writer.append(row)
        self.rows.append(row)
        save_checkpoint(self.ckpt_dir / f"step_{label:012d}.ckpt",
                        self.learner.checkpoint_entries())

    def advance(self, env_steps: int) -> None:
        while self.next_eval <= min(env_steps, self.run.total_steps):
            self._emit(self.next_eval)
            self.next_eval += self.run.eval_interval


def _train_seed(run: RunConfig, seed: int, clock) -> SeedResult:
    lcfg = run.learner_config()
    run_dir = run_dir_for(run, seed)
    run_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(run, seed, run_dir)
    env_cfg = dataclasses.replace(run.env, seed=seed)
    probe = make_env(env_cfg)
    info = env_info(probe)
    learner = build_learner(run.algo, info, lcfg, RngStream(seed, PARAM_INIT_STREAM))
    explore_rng = RngStream(seed, EXPLORE_STREAM)
    tracker = _EvalTracker(run, seed, learner, run_dir, clock)
    if isinstance(lcfg, QmixConfig):
        _replay_loop(run, lcfg, probe, learner, explore_rng,
                     RngStream(seed, REPLAY_STREAM), tracker)
        probe.close()
    else:
        probe.close()
        runner = SyncVectorRunner(env_cfg, lcfg.n_runners, seed)
        try:
            _on_policy_loop(run, lcfg, runner, learner, explore_rng, tracker)
        finally:
            runner.close()
    return SeedResult(seed=seed, run_dir=run_dir,
                      metrics_path=run_dir / "metrics.csv",
                      rows=tuple(tracker.rows))


def _replay_loop(run: RunConfig, cfg: QmixConfig, env, learner,
                 explore_rng: RngStream, replay_rng: RngStream,
                 tracker: _EvalTracker) -> None:
    buffer = ReplayBuffer(cfg.buffer_size,
                          alpha=cfg.per_alpha if cfg.prioritized_replay else 0.0,
                          eps=cfg.per_eps)
    beta = BetaSchedule(cfg.per_beta_start, cfg.per_beta_end, cfg.per_beta_horizon)
    env_steps = 0
    while env_steps < run.total_steps:
        episode, _ = collect_episode(env, learner, explore_rng,
                                     explore=True, env_step=env_steps)
        env_steps += episode.length
        buffer.insert(episode)
        if buffer.can_sample(cfg.batch_size):
            if cfg.prioritized_replay:
                batch, weights, ids = buffer.sample_prioritized(
                    cfg.batch_size, replay_rng, beta(env_steps))
                report = learner.update(batch, weights)
                buffer.update_priorities(ids, report["td_errors"])
            else:
                batch = buffer.sample_uniform(cfg.batch_size, replay_rng)
                learner.update(batch)
        tracker.advance(env_steps)


def _on_policy_loop(run: RunConfig, cfg, runner: SyncVectorRunner, learner,
                    explore_rng: RngStream, tracker: _EvalTracker) -> None:
    env_steps = 0
    while env_steps < run.total_steps:
        pairs: list = []
        while len(pairs) < cfg.batch_size:
            batch_pairs, consumed = runner.collect(learner, explore_rng,
                                                   env_step=env_steps)
            env_steps += consumed
            pairs.extend(batch_pairs)
        batch, logp = collate_rollout(pairs[: cfg.batch_size], runner.n_agents)
        learner.update(Rollout(batch=batch, behavior_logp=logp))
        tracker.advance(env_steps)
