import math

import numpy as np
import pytest
from hypothesis import given

from conftest import genotypes
from smemnas.complexity import genotype_madds, layer_madds, max_madds, total_madds
from smemnas.search_space import (
    DEFAULT_CHANNELS,
    DEFAULT_SPACE,
    Genotype,
    LayerSpec,
    decode,
    maximal_genotype,
    minimal_genotype,
)

GOLDEN_MINIMAL_MADDS = 85_879_616


def spreadsheet_madds(g: Genotype) -> int:
    """Independent oracle: walk the network layer by layer with plain arithmetic."""
    space, chan = DEFAULT_SPACE, DEFAULT_CHANNELS
    res = space.resolutions[g.genes[0]]
    h = math.ceil(res / 2)
    total = h * h * 3 * chan.stem_channels * 9
    cin = chan.stem_channels
    for b in range(5):
        o = 1 + 9 * b
        depth = space.depth_options[g.genes[o]]
        for layer in range(depth):
            k = space.kernel_options[g.genes[o + 1 + layer]]
            e = space.expansion_options[g.genes[o + 5 + layer]] * cin
            s = chan.block_strides[b] if layer == 0 else 1
            ho = math.ceil(h / s)
            cout = chan.block_out_channels[b]
            total += h * h * cin * e  # expand
            total += ho * ho * e * k * k  # depthwise
            total += ho * ho * e * cout  # project
            h, cin = ho, cout
    total += h * h * cin * chan.head_channels
    total += chan.head_channels * chan.feature_channels
    total += chan.feature_channels * chan.num_classes
    return total


def test_layer_example():
    layer = LayerSpec(kernel=3, expansion=3, stride=1, in_channels=16, out_channels=16)
    count, hw = layer_madds(layer, 8, 8)
    assert count == 8 * 8 * 16 * 48 + 8 * 8 * 48 * 9 + 8 * 8 * 48 * 16 == 125_952
    assert hw == (8, 8)


def test_expansion_is_linear():
    base = dict(kernel=5, stride=2, in_channels=24, out_channels=40)
    c3, _ = layer_madds(LayerSpec(expansion=3, **base), 15, 15)
    c6, _ = layer_madds(LayerSpec(expansion=6, **base), 15, 15)
    assert c6 == 2 * c3


def test_stride_two_uses_ceiling():
    layer = LayerSpec(kernel=3, expansion=4, stride=2, in_channels=8, out_channels=8)
    count, hw = layer_madds(layer, 7, 7)
    assert hw == (4, 4)
    E = 32
    assert count == 7 * 7 * 8 * E + 16 * E * 9 + 16 * E * 8


def test_golden_minimal():
    report = total_madds(decode(minimal_genotype()))
    assert report.total_exact == GOLDEN_MINIMAL_MADDS == spreadsheet_madds(minimal_genotype())
    assert report.total == pytest.approx(85.879616)


@given(genotypes())
def test_matches_spreadsheet_oracle(g):
    report = total_madds(decode(g))
    assert report.total_exact == spreadsheet_madds(g)
    assert report.total_exact == sum(c for _, c in report.per_layer)


def test_report_labels():
    labels = [l for l, _ in total_madds(decode(minimal_genotype())).per_layer]
    assert labels[0] == "stem" and labels[-3:] == ["head", "feature", "classifier"]
    assert len(labels) == 3 + 1 + 10


@given(genotypes(canonical=True))
def test_single_gene_increase_monotone(g):
    base = genotype_madds(g)
    ub = DEFAULT_SPACE.upper_bounds
    for pos in range(46):
        if g.genes[pos] < ub[pos]:
            genes = list(g.genes)
            genes[pos] += 1
            assert genotype_madds(Genotype(tuple(genes))) >= base


def test_kernel_and_resolution_strictly_increase():
    g = minimal_genotype()
    base = genotype_madds(g)
    for pos in [0, 2, 6]:  # resolution, block0.kernel0, block0.expansion0
        genes = list(g.genes)
        genes[pos] = 1
        assert genotype_madds(Genotype(tuple(genes))) > base


def test_pure_and_max():
    g = maximal_genotype()
    assert total_madds(decode(g)) == total_madds(decode(g))
    assert max_madds() == genotype_madds(g) == spreadsheet_madds(g) / 1e6
