"""Ground-truth accuracy sources.

Training candidate networks is replaced by evaluators mapping a genotype to an
accuracy in [0, 1]. Every evaluator keys on the canonical genotype and is
deterministic, so repeated or concurrent calls agree.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .search_space import (
    DEFAULT_SPACE,
    Genotype,
    GenotypeError,
    SearchSpaceConfig,
    canonicalize,
    ensure_valid,
    parse_genotype,
    to_features,
)


class EvaluationError(RuntimeError):
    pass


class MissingGenotypeError(EvaluationError, KeyError):
    def __init__(self, genotype: Genotype):
        super().__init__(f"genotype {genotype} not present in table")
        self.genotype = genotype

    def __str__(self) -> str:
        return self.args[0]


class TableFormatError(EvaluationError):
    pass


class Evaluator(Protocol):
    space: SearchSpaceConfig

    def evaluate(self, g: Genotype) -> float: ...


@dataclass(frozen=True)
class EvaluatedArch:
    genotype: Genotype
    accuracy: float
    madds: float
    origin: str
    eval_order: int

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")
        if not self.madds > 0:
            raise ValueError("madds must be positive")

    def to_dict(self) -> dict:
        return {
            "eval_order": self.eval_order,
            "genotype": self.genotype.to_text(),
            "accuracy": self.accuracy,
            "madds": self.madds,
            "origin": self.origin,
        }

    @classmethod
    def from_dict(cls, d: dict, space: SearchSpaceConfig = DEFAULT_SPACE) -> "EvaluatedArch":
        return cls(
            genotype=parse_genotype(str(d["genotype"]), space),
            accuracy=float(d["accuracy"]),
            madds=float(d["madds"]),
            origin=str(d["origin"]),
            eval_order=int(d["eval_order"]),
        )


@dataclass(frozen=True)
class SyntheticOracleParams:
    base: float = 0.70
    gain: float = 0.28
    tau: float = 3.0
    block_weights: tuple[float, ...] = (0.6, 0.8, 1.0, 1.2, 1.4)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "block_weights", tuple(float(w) for w in self.block_weights))
        if self.base + self.gain > 1.0 + 1e-12:
            raise ValueError("base + gain must not exceed 1")
        if self.base < 0 or self.gain < 0:
            raise ValueError("base and gain must be non-negative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if any(w <= 0 for w in self.block_weights):
            raise ValueError("block weights must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "gain": self.gain,
            "tau": self.tau,
            "block_weights": list(self.block_weights),
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }


def capacity(g: Genotype, space: SearchSpaceConfig = DEFAULT_SPACE, weights: tuple[float, ...] | None = None) -> float:
    """Weighted sum of scaled genes over active positions."""
    if weights is None:
        weights = SyntheticOracleParams().block_weights
    if len(weights) != space.num_blocks:
        raise ValueError("need one block weight per block")
    canon = canonicalize(g, space)
    f = to_features(canon, space)
    L = space.max_layers_per_block
    c = f[0]
    for b, w in enumerate(weights):
        o = space.block_offset(b)
        depth = space.depth_options[canon.genes[o]]
        layers = sum((f[o + 1 + i] + f[o + 1 + L + i]) / 2 for i in range(depth))
        c += w * (f[o] + layers / L)
    return float(c)


class SyntheticOracle:
    """Saturating accuracy curve over a genotype capacity score.

    ``acc = base + gain * (1 - exp(-capacity / tau))`` plus optional noise that
    is a fixed function of ``(seed, canonical genotype)``.
    """

    def __init__(self, params: SyntheticOracleParams | None = None, space: SearchSpaceConfig = DEFAULT_SPACE):
        self.params = params or SyntheticOracleParams()
        self.space = space
        if len(self.params.block_weights) != space.num_blocks:
            raise ValueError("need one block weight per block")

    def noiseless(self, g: Genotype) -> float:
        p = self.params
        return p.base + p.gain * (1.0 - math.exp(-capacity(g, self.space, p.block_weights) / p.tau))

    def evaluate(self, g: Genotype) -> float:
        ensure_valid(g, self.space)
        acc = self.noiseless(g)
        if self.params.noise_sigma > 0:
            acc += self.params.noise_sigma * _keyed_normal(self.params.seed, canonicalize(g, self.space))
            acc = min(1.0, max(0.0, acc))
        return acc


def _keyed_normal(seed: int, g: Genotype) -> float:
    digest = hashlib.blake2b(f"{seed}:{g.to_json()}".encode(), digest_size=8).digest()
    return float(np.random.default_rng(int.from_bytes(digest, "little")).standard_normal())


def synthetic_oracle(g: Genotype, params: SyntheticOracleParams | None = None, space: SearchSpaceConfig = DEFAULT_SPACE) -> float:
    return SyntheticOracle(params, space).evaluate(g)


@dataclass
class TabularEvaluator:
    table: dict[Genotype, float]
    space: SearchSpaceConfig = DEFAULT_SPACE
    source: str = field(default="<memory>")

    def evaluate(self, g: Genotype) -> float:
        key = canonicalize(g, self.space)
        try:
            return self.table[key]
        except KeyError:
            raise MissingGenotypeError(key) from None

    def __len__(self) -> int:
        return len(self.table)

    def items(self):
        return self.table.items()


def tabular_evaluator_load(path: str | Path, space: SearchSpaceConfig = DEFAULT_SPACE) -> TabularEvaluator:
    """Load ``genotype_text,accuracy`` lines; ``#`` starts a comment."""
    path = Path(path)
    table: dict[Genotype, float] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise TableFormatError(f"{path}:{lineno}: expected 'genotype,accuracy', got {line!r}")
            try:
                g = canonicalize(parse_genotype(parts[0], space), space)
                acc = float(parts[1])
            except (GenotypeError, ValueError) as exc:
                raise TableFormatError(f"{path}:{lineno}: {exc}") from None
            if not (0.0 <= acc <= 1.0):
                raise TableFormatError(f"{path}:{lineno}: accuracy {acc} outside [0, 1]")
            if g in table and table[g] != acc:
                raise TableFormatError(
                    f"{path}:{lineno}: conflicting accuracy for {g}: {table[g]} vs {acc}"
                )
            table[g] = acc
    return TabularEvaluator(table, space, str(path))
