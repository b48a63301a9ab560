"""Run configuration: nested dataclasses, JSON round-trip, and ``key=value`` overrides."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .evaluation import SyntheticOracleParams
from .moea import MoeaConfig
from .search_space import ChannelTable, SearchSpaceConfig
from .surrogate import SurrogateConfig


class ConfigError(ValueError):
    pass


@dataclass
class EvaluatorConfig:
    kind: str = "synthetic"  # synthetic | tabular
    path: str | None = None
    synthetic: SyntheticOracleParams = field(default_factory=SyntheticOracleParams)

    def __post_init__(self):
        if self.kind not in ("synthetic", "tabular"):
            raise ConfigError(f"unknown evaluator kind {self.kind!r}")
        if self.kind == "tabular" and not self.path:
            raise ConfigError("tabular evaluator needs a path")


@dataclass
class SearchConfig:
    N: int = 100
    T: int = 25
    K_elite: int = 8
    seed: int = 0
    threads: int = 1
    hv_ref_error: float = 1.0
    hv_ref_madds_factor: float = 1.05
    moea: MoeaConfig = field(default_factory=MoeaConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    evaluator: EvaluatorConfig = field(default_factory=EvaluatorConfig)
    space: SearchSpaceConfig = field(default_factory=SearchSpaceConfig)
    channels: ChannelTable = field(default_factory=ChannelTable)

    def __post_init__(self):
        if self.N < 2:
            raise ConfigError("N must be >= 2")
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.K_elite < 1:
            raise ConfigError("K_elite must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if len(self.evaluator.synthetic.block_weights) != self.space.num_blocks:
            raise ConfigError("synthetic block_weights must have one entry per block")
        self.channels.check(self.space)

    def to_dict(self) -> dict:
        return _to_plain(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        """Hash of the resolved config, excluding the thread count (it never changes results)."""
        d = self.to_dict()
        d.pop("threads", None)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        return _from_plain(cls, d, "")

    @classmethod
    def load(cls, path: str | Path | None, overrides: list[str] | None = None) -> "SearchConfig":
        d = {} if path is None else json.loads(Path(path).read_text())
        if not isinstance(d, dict):
            raise ConfigError("config file must contain a JSON object")
        for item in overrides or []:
            apply_override(d, item)
        try:
            return cls.from_dict(d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def _to_plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _from_plain(cls, d: dict, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where or 'config'} must be an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(d) - set(known)
    if unknown:
        raise ConfigError(f"unknown config key(s) in {where or 'top level'}: {sorted(unknown)}")
    kwargs = {}
    for name, value in d.items():
        sub = _NESTED.get((cls, name))
        kwargs[name] = _from_plain(sub, value, f"{where}{name}.") if sub else value
    return cls(**kwargs)


_NESTED = {
    (SearchConfig, "moea"): MoeaConfig,
    (SearchConfig, "surrogate"): SurrogateConfig,
    (SearchConfig, "evaluator"): EvaluatorConfig,
    (SearchConfig, "space"): SearchSpaceConfig,
    (SearchConfig, "channels"): ChannelTable,
    (EvaluatorConfig, "synthetic"): SyntheticOracleParams,
}


def _paths(cls, prefix=()) -> list[tuple[str, ...]]:
    out = []
    for f in dataclasses.fields(cls):
        sub = _NESTED.get((cls, f.name))
        out += _paths(sub, prefix + (f.name,)) if sub else [prefix + (f.name,)]
    return out


KEY_PATHS = _paths(SearchConfig)


def resolve_key(key: str) -> tuple[str, ...]:
    """Map ``moea.G`` or a bare unique leaf name like ``G`` to its full path."""
    parts = tuple(key.split("."))
    if parts in KEY_PATHS:
        return parts
    matches = [p for p in KEY_PATHS if p[-len(parts):] == parts]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise ConfigError(f"unknown config key {key!r}")
    raise ConfigError(f"ambiguous config key {key!r}: {['.'.join(m) for m in matches]}")


def apply_override(d: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    key, raw = item.split("=", 1)
    path = resolve_key(key.strip())
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = d
    for p in path[:-1]:
        node = node.setdefault(p, {})
    node[path[-1]] = value
