"""Experiment harness: run configs, training loops, metrics, evaluation."""
from .config import (RunConfig, apply_set_overrides, build_run_config,
                     load_layers)
from .metrics import (CSV_HEADER, MetricsRow, MetricsWriter,
                      aggregate_normalized, best_policy_metric, read_metrics)
from .rollout import (EVAL_SEED_OFFSET, SyncVectorRunner, collate_rollout,
                      collect_episode, eval_seed, evaluate, evaluation_returns,
                      parallel_random_returns, random_episode_returns,
                      spawn_seed)
from .train import SeedResult, load_manifest, run_dir_for, train, write_manifest

__all__ = [
    "RunConfig",
    "apply_set_overrides",
    "build_run_config",
    "load_layers",
    "CSV_HEADER",
    "MetricsRow",
    "MetricsWriter",
    "aggregate_normalized",
    "best_policy_metric",
    "read_metrics",
    "EVAL_SEED_OFFSET",
    "SyncVectorRunner",
    "collate_rollout",
    "collect_episode",
    "eval_seed",
    "evaluate",
    "evaluation_returns",
    "parallel_random_returns",
    "random_episode_returns",
    "spawn_seed",
    "SeedResult",
    "load_manifest",
    "run_dir_for",
    "train",
    "write_manifest",
]
