"""Run configuration: defaults, TOML file loading, and flag overrides."""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BACKEND_MODES = ("live", "replay", "record")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    data_dir: Path = Path("data")
    corpus_path: Path = Path("corpus.jsonl")
    mode: str = "replay"
    transcript_path: Path | None = None
    output_dir: Path = Path("runs")
    base_url: str = ""
    model: str = ""
    plan_temperature: float = 0.7
    k_candidates: int = 3
    route_retries: int = 3
    min_pop: int = 5
    step_limit: int = 45
    tool_context_steps: int = 3
    parallelism: int = 1
    strict_replay: bool = False

    def validate(self) -> None:
        if self.mode not in BACKEND_MODES:
            raise ConfigError(f"mode must be one of {BACKEND_MODES}, got {self.mode!r}")
        if self.mode in ("replay", "record") and self.transcript_path is None:
            raise ConfigError(f"{self.mode} mode requires transcript_path")
        if self.mode in ("live", "record") and not (self.base_url and self.model):
            raise ConfigError(f"{self.mode} mode requires base_url and model")
        for name in ("k_candidates", "route_retries", "min_pop", "step_limit", "parallelism"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not 0.0 <= self.plan_temperature <= 2.0:
            raise ConfigError(f"plan_temperature out of range: {self.plan_temperature}")


_PATH_FIELDS = {"data_dir", "corpus_path", "transcript_path", "output_dir"}


def config_from_mapping(mapping: dict) -> RunConfig:
    known = {f.name: f.type for f in fields(RunConfig)}
    unknown = sorted(set(mapping) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    kwargs = {}
    for key, value in mapping.items():
        if key in _PATH_FIELDS and value is not None:
            value = Path(value)
        kwargs[key] = value
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: Path | str) -> RunConfig:
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"config file not found: {file_path}")
    try:
        with file_path.open("rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{file_path}: {exc}") from None
    return config_from_mapping(data)


def apply_overrides(config: RunConfig, overrides: dict) -> RunConfig:
    """New config with non-None override values applied."""
    known = {field.name for field in fields(RunConfig)}
    changes = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in known:
            raise ConfigError(f"unknown config key: {key!r}")
        changes[key] = Path(value) if key in _PATH_FIELDS else value
    return replace(config, **changes)
