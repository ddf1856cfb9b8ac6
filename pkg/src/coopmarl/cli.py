"""Command-line front end: train, eval, aggregate, serve.

Configuration is layered: `--config FILE` arguments merge in order,
`--set section.field=value` overrides come next, and the dedicated flags
(--algo, --key, --seed, ...) win last, so anything a file sets can be
pinned down or overridden at the shell without editing files.

`eval` rebuilds the learner from the run manifest written next to the
checkpoint, so a checkpoint path plus an episode count is a complete
evaluation request. `aggregate` scans a directory of run dirs, reduces
each (algorithm, task) group to the seed-mean of its best evaluation,
and reports min-max normalized scores per algorithm.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from collections import defaultdict
from pathlib import Path

import numpy as np

from .algos import build_learner, env_info
from .config import EnvConfig
from .envs import FAMILY_BUILDERS, make_env
from .errors import HarnessError
from .harness import (RunConfig, aggregate_normalized, apply_set_overrides,
                      best_policy_metric, build_run_config, evaluate,
                      load_layers, load_manifest, read_metrics)
from .harness import train as run_training
from .harness.metrics import CSV_HEADER
from .nn.checkpoint import load_checkpoint
from .rng import PARAM_INIT_STREAM, RngStream
from .server import DEFAULT_PORT, PORT_ENV_VAR, EnvServer, resolve_port


def _add_train(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("train", help="run a training job")
    p.add_argument("--config", action="append", default=[], metavar="FILE",
                   help="layered INI config file; later files override earlier")
    p.add_argument("--set", action="append", default=[], metavar="SEC.FIELD=VAL",
                   dest="sets", help="override one config field")
    p.add_argument("--algo", help="algorithm id")
    p.add_argument("--env", help="environment family", choices=sorted(FAMILY_BUILDERS))
    p.add_argument("--key", help="task key within the family")
    p.add_argument("--seed", help="training seed(s), comma separated")
    p.add_argument("--steps", type=int, help="total environment steps")
    p.add_argument("--out", help="output directory")
    p.add_argument("--eval-interval", type=int, help="env steps between evaluations")
    p.add_argument("--episodes", type=int, help="test episodes per evaluation")
    p.add_argument("--time-limit", type=int, help="episode step cap override")


def _add_eval(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True, metavar="PATH")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, help="evaluation seed (default: run seed)")


def _add_aggregate(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("aggregate", help="normalized scores over a runs directory")
    p.add_argument("--runs", required=True, metavar="DIR")


def _add_serve(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("serve", help="serve environments over TCP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None,
                   help=f"TCP port (default: ${PORT_ENV_VAR} or {DEFAULT_PORT})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopmarl")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_train(sub)
    _add_eval(sub)
    _add_aggregate(sub)
    _add_serve(sub)
    return parser


def _flag_overrides(args: argparse.Namespace) -> list[str]:
    """Dedicated flags expressed as --set items (applied after them)."""
    pairs = (
        ("run.algo", args.algo),
        ("env.family", args.env),
        ("env.key", args.key),
        ("run.seeds", args.seed),
        ("run.total_steps", args.steps),
        ("run.out_dir", args.out),
        ("run.eval_interval", args.eval_interval),
        ("run.n_test_episodes", args.episodes),
        ("env.time_limit", args.time_limit),
    )
    return [f"{field}={value}" for field, value in pairs if value is not None]


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    layers = load_layers(args.config)
    apply_set_overrides(layers, args.sets)
    apply_set_overrides(layers, _flag_overrides(args))
    return build_run_config(layers)


def _cmd_train(args: argparse.Namespace) -> int:
    run = run_config_from_args(args)
    for result in run_training(run):
        best = best_policy_metric(list(result.rows))
        print(f"seed {result.seed}: {result.metrics_path} best_mean_return {best!r}")
    return 0


def _checkpoint_step(path: Path) -> int:
    stem = path.stem
    tail = stem.rsplit("_", 1)[-1]
    return int(tail) if tail.isdigit() else 0


def _cmd_eval(args: argparse.Namespace) -> int:
    ckpt = Path(args.checkpoint)
    run_dir = ckpt.parent.parent
    manifest = load_manifest(run_dir)
    env_cfg = EnvConfig(
        env_family=manifest["env"]["family"],
        key=manifest["env"]["key"],
        seed=manifest["env"]["seed"],
        time_limit=manifest["env"]["time_limit"],
        extras=manifest["env"]["extras"],
    )
    run = RunConfig(
        algo=manifest["algo"],
        env=env_cfg,
        total_steps=manifest["total_steps"],
        eval_interval=manifest["eval_interval"],
        n_test_episodes=manifest["n_test_episodes"],
        seeds=(manifest["seed"],),
        learner_overrides=manifest["learner_overrides"],
    ).validated()
    probe = make_env(env_cfg)
    info = env_info(probe)
    probe.close()
    learner = build_learner(run.algo, info, run.learner_config(),
                            RngStream(manifest["seed"], PARAM_INIT_STREAM))
    learner.load_entries(load_checkpoint(ckpt))
    seed = args.seed if args.seed is not None else manifest["seed"]
    started = time.monotonic()
    row = evaluate(learner, env_cfg, args.episodes, seed,
                   step=_checkpoint_step(ckpt))
    row = dataclasses.replace(row, wall_seconds=time.monotonic() - started)
    print(",".join(CSV_HEADER))
    print(",".join(row.as_csv_fields()))
    return 0


def _cmd_aggregate(args: argparse.Namespace) -> int:
    root = Path(args.runs)
    groups: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for metrics_path in sorted(root.glob("*/metrics.csv")):
        run_dir = metrics_path.parent
        try:
            manifest = load_manifest(run_dir)
        except FileNotFoundError:
            print(f"skipping {run_dir}: no run manifest", file=sys.stderr)
            continue
        best = best_policy_metric(read_metrics(metrics_path))
        groups[manifest["algo"]][manifest["env"]["key"]].append(best)
    if not groups:
        print(f"no runs found under {root}", file=sys.stderr)
        return 2
    table = {
        algo: {task: float(np.mean(vals)) for task, vals in tasks.items()}
        for algo, tasks in groups.items()
    }
    for algo in sorted(table):
        for task in sorted(table[algo]):
            print(f"best,{algo},{task},{table[algo][task]!r}")
    scores = aggregate_normalized(table)
    for algo in sorted(scores):
        print(f"normalized,{algo},{scores[algo]!r}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    server = EnvServer(args.host, resolve_port(args.port))
    host, port = server.address
    print(f"serving environments on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "aggregate": _cmd_aggregate,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (HarnessError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
