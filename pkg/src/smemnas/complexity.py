"""Multiply-add counts for decoded architectures.

Only convolution and fully-connected multiplies are counted; squeeze-excite,
activations, and batch-norm are ignored. Spatial sizes shrink by ceiling
division (same padding).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .search_space import (
    DEFAULT_CHANNELS,
    DEFAULT_SPACE,
    ChannelTable,
    DecodedArchitecture,
    Genotype,
    LayerSpec,
    SearchSpaceConfig,
    canonicalize,
    decode,
    maximal_genotype,
)

__all__ = [
    "ChannelTable",
    "MAddsReport",
    "layer_madds",
    "total_madds",
    "genotype_madds",
    "max_madds",
]


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class MAddsReport:
    per_layer: tuple[tuple[str, int], ...]

    @property
    def total_exact(self) -> int:
        return sum(c for _, c in self.per_layer)

    @property
    def total(self) -> float:
        """Total in millions of multiply-adds."""
        return self.total_exact / 1e6

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "total_exact": self.total_exact,
            "per_layer": [{"label": label, "count": count} for label, count in self.per_layer],
        }


def layer_madds(layer: LayerSpec, h_in: int, w_in: int) -> tuple[int, tuple[int, int]]:
    """Cost of one inverted-bottleneck layer and its output spatial size.

    expand 1x1 at input resolution, depthwise kxk at output resolution,
    project 1x1 at output resolution.
    """
    C = layer.in_channels
    E = layer.expansion * C
    O = layer.out_channels
    k = layer.kernel
    h_out, w_out = _ceil_div(h_in, layer.stride), _ceil_div(w_in, layer.stride)
    count = h_in * w_in * C * E + h_out * w_out * E * k * k + h_out * w_out * E * O
    return count, (h_out, w_out)


def total_madds(arch: DecodedArchitecture, chan: ChannelTable = DEFAULT_CHANNELS) -> MAddsReport:
    rows: list[tuple[str, int]] = []
    h = w = _ceil_div(arch.resolution, 2)
    rows.append(("stem", h * w * 3 * chan.stem_channels * 9))
    last = chan.stem_channels
    for b, block in enumerate(arch.blocks):
        for i, layer in enumerate(block):
            count, (h, w) = layer_madds(layer, h, w)
            rows.append((f"block{b}.layer{i}", count))
            last = layer.out_channels
    rows.append(("head", h * w * last * chan.head_channels))
    rows.append(("feature", chan.head_channels * chan.feature_channels))
    rows.append(("classifier", chan.feature_channels * chan.num_classes))
    return MAddsReport(tuple(rows))


@lru_cache(maxsize=200_000)
def _cached_madds(genes: tuple[int, ...], space: SearchSpaceConfig, chan: ChannelTable) -> int:
    return total_madds(decode(Genotype(genes), space, chan), chan).total_exact


def genotype_madds(
    g: Genotype,
    space: SearchSpaceConfig = DEFAULT_SPACE,
    chan: ChannelTable = DEFAULT_CHANNELS,
) -> float:
    """MAdds in millions for a genotype (memoized on the canonical form)."""
    return _cached_madds(canonicalize(g, space).genes, space, chan) / 1e6


def canonical_madds(
    genes: tuple[int, ...],
    space: SearchSpaceConfig = DEFAULT_SPACE,
    chan: ChannelTable = DEFAULT_CHANNELS,
) -> float:
    """Like :func:`genotype_madds` for a gene tuple already in canonical form."""
    return _cached_madds(genes, space, chan) / 1e6


def madds_batch(
    genes: np.ndarray,
    space: SearchSpaceConfig = DEFAULT_SPACE,
    chan: ChannelTable = DEFAULT_CHANNELS,
) -> np.ndarray:
    return np.array([genotype_madds(Genotype(tuple(row)), space, chan) for row in np.asarray(genes).tolist()])


def max_madds(space: SearchSpaceConfig = DEFAULT_SPACE, chan: ChannelTable = DEFAULT_CHANNELS) -> float:
    """Largest MAdds in the space; the all-maximal genotype attains it by monotonicity."""
    return genotype_madds(maximal_genotype(space), space, chan)
