"""MobileNetV3-style search space and its fixed-length integer encoding.

Gene layout (46 genes with the defaults)::

    [resolution] + 5 x [depth, k0, k1, k2, k3, e0, e1, e2, e3]

Every gene is an index into an option list. Kernel/expansion genes at layer
positions beyond a block's depth are inactive; they are kept during evolution
and zeroed by :func:`canonicalize`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class GenotypeError(ValueError):
    """Raised when a genotype is malformed or has out-of-range genes."""

    def __init__(self, message: str, errors: list[tuple[int, int, tuple[int, int]]] | None = None):
        super().__init__(message)
        self.errors = errors or []


@dataclass(frozen=True)
class SearchSpaceConfig:
    resolutions: tuple[int, ...] = tuple(range(192, 257, 4))
    depth_options: tuple[int, ...] = (2, 3, 4)
    kernel_options: tuple[int, ...] = (3, 5, 7)
    expansion_options: tuple[int, ...] = (3, 4, 6)
    num_blocks: int = 5
    max_layers_per_block: int = 4

    def __post_init__(self):
        for name in ("resolutions", "depth_options", "kernel_options", "expansion_options"):
            opts = tuple(getattr(self, name))
            object.__setattr__(self, name, opts)
            if not opts:
                raise ValueError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(opts, opts[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if self.num_blocks < 1 or self.max_layers_per_block < 1:
            raise ValueError("num_blocks and max_layers_per_block must be >= 1")
        if max(self.depth_options) > self.max_layers_per_block:
            raise ValueError("depth option exceeds max_layers_per_block")

    @property
    def block_width(self) -> int:
        return 1 + 2 * self.max_layers_per_block

    @property
    def gene_count(self) -> int:
        return 1 + self.num_blocks * self.block_width

    def block_offset(self, b: int) -> int:
        return 1 + b * self.block_width

    @property
    def upper_bounds(self) -> np.ndarray:
        """Largest legal index of every gene position."""
        L = self.max_layers_per_block
        block = [len(self.depth_options) - 1]
        block += [len(self.kernel_options) - 1] * L
        block += [len(self.expansion_options) - 1] * L
        return np.array([len(self.resolutions) - 1] + block * self.num_blocks, dtype=np.int64)

    def gene_label(self, pos: int) -> str:
        if pos == 0:
            return "resolution"
        b, r = divmod(pos - 1, self.block_width)
        L = self.max_layers_per_block
        if r == 0:
            return f"block{b}.depth"
        if r <= L:
            return f"block{b}.kernel{r - 1}"
        return f"block{b}.expansion{r - 1 - L}"

    def to_dict(self) -> dict:
        return {
            "resolutions": list(self.resolutions),
            "depth_options": list(self.depth_options),
            "kernel_options": list(self.kernel_options),
            "expansion_options": list(self.expansion_options),
            "num_blocks": self.num_blocks,
            "max_layers_per_block": self.max_layers_per_block,
        }


DEFAULT_SPACE = SearchSpaceConfig()

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class ChannelTable:
    """Fixed (non-searched) widths and strides of the backbone."""

    stem_channels: int = 16
    block_out_channels: tuple[int, ...] = (24, 40, 80, 112, 160)
    block_strides: tuple[int, ...] = (2, 2, 2, 1, 2)
    head_channels: int = 960
    feature_channels: int = 1280
    num_classes: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "block_out_channels", tuple(self.block_out_channels))
        object.__setattr__(self, "block_strides", tuple(self.block_strides))
        if len(self.block_out_channels) != len(self.block_strides):
            raise ValueError("block_out_channels and block_strides lengths differ")
        if any(s not in (1, 2) for s in self.block_strides):
            raise ValueError("block strides must be 1 or 2")

    def check(self, space: SearchSpaceConfig) -> None:
        if len(self.block_out_channels) != space.num_blocks:
            raise ValueError(
                f"channel table has {len(self.block_out_channels)} blocks, "
                f"search space has {space.num_blocks}"
            )

    def to_dict(self) -> dict:
        return {
            "stem_channels": self.stem_channels,
            "block_out_channels": list(self.block_out_channels),
            "block_strides": list(self.block_strides),
            "head_channels": self.head_channels,
            "feature_channels": self.feature_channels,
            "num_classes": self.num_classes,
        }


DEFAULT_CHANNELS = ChannelTable()


@dataclass(frozen=True, order=True)
class Genotype:
    """Immutable integer gene string; hashable so it can key dicts and sets."""

    genes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(int(v) for v in self.genes))

    def __len__(self) -> int:
        return len(self.genes)

    @property
    def resolution_idx(self) -> int:
        return self.genes[0]

    def block(self, b: int, space: SearchSpaceConfig = DEFAULT_SPACE) -> tuple[int, tuple[int, ...], tuple[int, ...]]:
        """Return ``(depth_idx, kernel_idx, expansion_idx)`` of block ``b``."""
        o = space.block_offset(b)
        L = space.max_layers_per_block
        g = self.genes
        return g[o], g[o + 1:o + 1 + L], g[o + 1 + L:o + 1 + 2 * L]

    def to_text(self) -> str:
        """One character per gene: ``0-9`` then ``a-z`` for indices 10..35."""
        if any(not 0 <= v < 36 for v in self.genes):
            raise GenotypeError("text form needs gene indices in [0, 35]; use JSON instead")
        return "".join(_DIGITS[v] for v in self.genes)

    def to_json(self) -> str:
        return json.dumps(list(self.genes))

    def as_array(self) -> np.ndarray:
        return np.array(self.genes, dtype=np.int64)

    @classmethod
    def from_blocks(cls, resolution_idx: int, blocks: Sequence[tuple[int, Sequence[int], Sequence[int]]]) -> "Genotype":
        genes = [resolution_idx]
        for depth_idx, kernels, expansions in blocks:
            genes += [depth_idx, *kernels, *expansions]
        return cls(tuple(genes))

    def __str__(self) -> str:
        try:
            return self.to_text()
        except GenotypeError:
            return self.to_json()


def parse_genotype(text: str, space: SearchSpaceConfig = DEFAULT_SPACE) -> Genotype:
    """Parse either the digit-string form or a JSON integer array; validates."""
    s = text.strip()
    if s.startswith("["):
        try:
            values = json.loads(s)
        except json.JSONDecodeError as exc:
            raise GenotypeError(f"bad genotype JSON: {exc}") from None
        if not isinstance(values, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in values):
            raise GenotypeError("genotype JSON must be an array of integers")
    else:
        s = s.lower()
        bad = [c for c in s if c not in _DIGITS]
        if bad:
            raise GenotypeError(f"genotype text may only contain 0-9 and a-z, got {bad[0]!r} in {text.strip()!r}")
        values = [_DIGITS.index(c) for c in s]
    if len(values) != space.gene_count:
        raise GenotypeError(f"genotype has {len(values)} genes, expected length {space.gene_count}")
    g = Genotype(tuple(values))
    ensure_valid(g, space)
    return g


def validate(g: Genotype, space: SearchSpaceConfig = DEFAULT_SPACE) -> list[tuple[int, int, tuple[int, int]]]:
    """List of ``(position, value, (lo, hi))`` for every out-of-range gene.

    An empty list means the genotype is valid. A length mismatch raises.
    """
    if len(g) != space.gene_count:
        raise GenotypeError(f"genotype has {len(g)} genes, expected length {space.gene_count}")
    ub = space.upper_bounds
    return [(i, v, (0, int(ub[i]))) for i, v in enumerate(g.genes) if not 0 <= v <= ub[i]]


def ensure_valid(g: Genotype, space: SearchSpaceConfig = DEFAULT_SPACE) -> None:
    errors = validate(g, space)
    if errors:
        detail = "; ".join(
            f"gene {pos} ({space.gene_label(pos)}) = {val} not in [{lo}, {hi}]" for pos, val, (lo, hi) in errors
        )
        raise GenotypeError(f"invalid genotype: {detail}", errors)


def active_mask(genes: np.ndarray, space: SearchSpaceConfig = DEFAULT_SPACE) -> np.ndarray:
    """Boolean mask of active genes; works on one genotype or a batch (rows)."""
    genes = np.asarray(genes)
    squeeze = genes.ndim == 1
    G = np.atleast_2d(genes)
    L = space.max_layers_per_block
    depths = np.asarray(space.depth_options)
    mask = np.ones(G.shape, dtype=bool)
    layer = np.arange(L)
    for b in range(space.num_blocks):
        o = space.block_offset(b)
        n_layers = depths[G[:, o]]
        inactive = layer[None, :] >= n_layers[:, None]
        mask[:, o + 1:o + 1 + L] = ~inactive
        mask[:, o + 1 + L:o + 1 + 2 * L] = ~inactive
    return mask[0] if squeeze else mask


def canonicalize(g: Genotype, space: SearchSpaceConfig = DEFAULT_SPACE) -> Genotype:
    """Zero every kernel/expansion gene sitting past its block's depth."""
    arr = g.as_array()
    arr[~active_mask(arr, space)] = 0
    return Genotype(tuple(arr.tolist()))


def canonicalize_array(genes: np.ndarray, space: SearchSpaceConfig = DEFAULT_SPACE) -> np.ndarray:
    out = np.array(genes, dtype=np.int64, copy=True)
    out[~active_mask(out, space)] = 0
    return out


def random_genotype(rng: np.random.Generator, space: SearchSpaceConfig = DEFAULT_SPACE) -> Genotype:
    """Uniform draw per gene, then canonicalized.

    Sampling is uniform over genotypes, not over decoded architectures: shallow
    blocks absorb several raw genotypes each.
    """
    ub = space.upper_bounds
    genes = rng.integers(0, ub + 1)
    return canonicalize(Genotype(tuple(genes.tolist())), space)


def to_features(g: Genotype | np.ndarray, space: SearchSpaceConfig = DEFAULT_SPACE) -> np.ndarray:
    """Scale each gene index into [0, 1] by its option count.

    Accepts a single genotype or a 2-D batch of gene rows.
    """
    arr = g.as_array() if isinstance(g, Genotype) else np.asarray(g)
    ub = space.upper_bounds.astype(float)
    scale = np.where(ub > 0, ub, 1.0)
    feats = arr / scale
    return np.where(ub > 0, feats, 0.0)


@dataclass(frozen=True)
class LayerSpec:
    kernel: int
    expansion: int
    stride: int
    in_channels: int
    out_channels: int


@dataclass(frozen=True)
class DecodedArchitecture:
    resolution: int
    blocks: tuple[tuple[LayerSpec, ...], ...] = field(default_factory=tuple)

    @property
    def depths(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)


def decode(
    g: Genotype,
    space: SearchSpaceConfig = DEFAULT_SPACE,
    chan: ChannelTable = DEFAULT_CHANNELS,
) -> DecodedArchitecture:
    ensure_valid(g, space)
    chan.check(space)
    blocks = []
    in_ch = chan.stem_channels
    for b in range(space.num_blocks):
        depth_idx, kernels, expansions = g.block(b, space)
        out_ch = chan.block_out_channels[b]
        layers = []
        for layer in range(space.depth_options[depth_idx]):
            layers.append(
                LayerSpec(
                    kernel=space.kernel_options[kernels[layer]],
                    expansion=space.expansion_options[expansions[layer]],
                    stride=chan.block_strides[b] if layer == 0 else 1,
                    in_channels=in_ch,
                    out_channels=out_ch,
                )
            )
            in_ch = out_ch
        blocks.append(tuple(layers))
    return DecodedArchitecture(resolution=space.resolutions[g.resolution_idx], blocks=tuple(blocks))


def minimal_genotype(space: SearchSpaceConfig = DEFAULT_SPACE) -> Genotype:
    return Genotype((0,) * space.gene_count)


def maximal_genotype(space: SearchSpaceConfig = DEFAULT_SPACE) -> Genotype:
    return Genotype(tuple(space.upper_bounds.tolist()))
