"""Random-rollout throughput per environment family.

Usage: python3 scripts/bench_throughput.py [--episodes N] [--family NAME ...]
"""
from __future__ import annotations

import argparse
import time

from coopmarl.config import EnvConfig
from coopmarl.envs import CANONICAL_KEYS
from coopmarl.harness import random_episode_returns


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--family", action="append", choices=sorted(CANONICAL_KEYS),
                    help="repeatable; default: all families")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    families = args.family or sorted(CANONICAL_KEYS)
    print(f"{'family':15s} {'key':32s} {'steps':>9s} {'steps/s':>10s}")
    for family in families:
        cfg = EnvConfig(env_family=family, key=CANONICAL_KEYS[family],
                        seed=args.seed)
        t0 = time.perf_counter()
        steps, _ = random_episode_returns(cfg, args.episodes, seed=args.seed)
        dt = time.perf_counter() - t0
        print(f"{family:15s} {cfg.key:32s} {steps:9d} {steps / dt:10.0f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
