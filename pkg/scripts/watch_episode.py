"""Print a random episode as rendered text frames.

Usage: python3 scripts/watch_episode.py --family boxpushing [--key KEY]
       [--seed N] [--steps N] [--delay SECONDS]
"""
from __future__ import annotations

import argparse
import time

from coopmarl.config import EnvConfig
from coopmarl.envs import CANONICAL_KEYS, make_env
from coopmarl.rng import EXPLORE_STREAM, RngStream


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", required=True, choices=sorted(CANONICAL_KEYS))
    ap.add_argument("--key", default=None, help="default: the family's canonical key")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--steps", type=int, default=0, help="0 means one full episode")
    ap.add_argument("--delay", type=float, default=0.0)
    args = ap.parse_args()

    cfg = EnvConfig(env_family=args.family,
                    key=args.key or CANONICAL_KEYS[args.family], seed=args.seed)
    env = make_env(cfg)
    rng = RngStream(args.seed, EXPLORE_STREAM)
    env.reset()
    print(env.render())
    total = 0.0
    t = 0
    while True:
        actions = [rng.randint(env.n_actions) for _ in range(env.n_agents)]
        out = env.step(actions)
        total += out.reward
        t += 1
        print(f"\nstep {t}  actions {actions}  reward {out.reward:+.3f}  "
              f"return {total:+.3f}")
        print(env.render())
        if args.delay:
            time.sleep(args.delay)
        if out.done or (args.steps and t >= args.steps):
            break
    print(f"\nepisode over after {t} steps, return {total:+.3f}, "
          f"truncated={out.info['truncated']}")
    env.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
