"""Run configuration: dataclass, layered config files, and overrides.

Config files are plain INI with three sections: [run] (orchestration),
[env] (environment family/key/seed/time_limit plus family extras), and
[algo] (learner hyperparameter overrides by field name). Later files
override earlier ones, and command-line --set overrides win over files.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..algos import ALGO_IDS, default_config
from ..config import EnvConfig
from ..errors import RunConfigError

SECTIONS = ("run", "env", "algo")
_ENV_FIELDS = ("family", "key", "seed", "time_limit")


def _coerce(text: Any, like: Any):
    """Parse a string override to the type of an existing default value."""
    if not isinstance(text, str):
        return text
    if isinstance(like, bool):
        lowered = text.strip().lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise RunConfigError(f"expected a boolean, got {text!r}")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


@dataclass(frozen=True)
class RunConfig:
    """Everything one training run needs."""

    algo: str
    env: EnvConfig
    total_steps: int
    eval_interval: int = 50_000
    n_test_episodes: int = 100
    seeds: tuple[int, ...] = (1,)
    out_dir: str = "runs"
    learner_overrides: Mapping[str, Any] = field(default_factory=dict)

    def validated(self) -> "RunConfig":
        if self.algo not in ALGO_IDS:
            raise RunConfigError(f"unknown algorithm {self.algo!r}; known: {ALGO_IDS}")
        if self.total_steps < 1:
            raise RunConfigError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 1 <= self.eval_interval <= self.total_steps:
            raise RunConfigError(
                f"eval_interval must lie in [1, total_steps], got {self.eval_interval}")
        if self.n_test_episodes < 1:
            raise RunConfigError("n_test_episodes must be >= 1")
        if not self.seeds:
            raise RunConfigError("need at least one seed")
        env = self.env.validated()
        cfg = dataclasses.replace(self, env=env, seeds=tuple(int(s) for s in self.seeds))
        cfg.learner_config()  # surfaces bad override names/values pre-flight
        return cfg

    def learner_config(self):
        """Algorithm config with typed overrides applied."""
        base = default_config(self.algo)
        known = {f.name: getattr(base, f.name) for f in dataclasses.fields(base)}
        patch = {}
        for name, value in dict(self.learner_overrides).items():
            if name not in known:
                raise RunConfigError(
                    f"learner field {name!r} not recognized for {self.algo!r}")
            try:
                patch[name] = _coerce(value, known[name])
            except (TypeError, ValueError) as exc:
                raise RunConfigError(f"learner field {name!r}: {exc}") from exc
        return dataclasses.replace(base, **patch).validated()


def load_layers(paths: list[str | Path]) -> dict[str, dict[str, str]]:
    """Merge INI files front to back; later files override earlier ones."""
    merged: dict[str, dict[str, str]] = {name: {} for name in SECTIONS}
    for path in paths:
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keep field names case-sensitive
        if not parser.read(path):
            raise RunConfigError(f"config file not readable: {path}")
        for section in parser.sections():
            if section not in merged:
                raise RunConfigError(f"{path}: unknown section [{section}]")
            merged[section].update(dict(parser[section]))
    return merged


def apply_set_overrides(layers: dict[str, dict[str, str]], sets: list[str]) -> None:
    """Apply `section.field=value` strings on top of file layers, in order."""
    for item in sets:
        head, eq, value = item.partition("=")
        if not eq:
            raise RunConfigError(f"--set needs section.field=value, got {item!r}")
        section, dot, fieldname = head.partition(".")
        if not dot or section not in layers or not fieldname:
            raise RunConfigError(f"--set target must be one of {SECTIONS}, got {item!r}")
        layers[section][fieldname] = value


def build_run_config(layers: dict[str, dict[str, str]]) -> RunConfig:
    """Assemble and validate a RunConfig from merged string layers."""
    run, env, algo = (dict(layers[name]) for name in SECTIONS)
    missing = [name for name, src in (("run.algo", run.get("algo")),
                                      ("run.total_steps", run.get("total_steps")),
                                      ("env.family", env.get("family")),
                                      ("env.key", env.get("key"))) if not src]
    if missing:
        raise RunConfigError(f"missing required config fields: {', '.join(missing)}")
    extras = {k: v for k, v in env.items() if k not in _ENV_FIELDS}
    env_cfg = EnvConfig(
        env_family=env["family"],
        key=env["key"],
        seed=int(env.get("seed", 1)),
        time_limit=int(env["time_limit"]) if "time_limit" in env else None,
        extras=extras,
    )
    seeds = tuple(int(s) for s in str(run.get("seeds", "1")).replace(",", " ").split())
    return RunConfig(
        algo=run["algo"],
        env=env_cfg,
        total_steps=int(run["total_steps"]),
        eval_interval=int(run.get("eval_interval", 50_000)),
        n_test_episodes=int(run.get("n_test_episodes", 100)),
        seeds=seeds,
        out_dir=run.get("out_dir", "runs"),
        learner_overrides=algo,
    ).validated()
