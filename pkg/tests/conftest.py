import numpy as np
import pytest
from hypothesis import strategies as st

from smemnas.config import SearchConfig
from smemnas.moea import MoeaConfig
from smemnas.search_space import DEFAULT_SPACE, Genotype, canonicalize


@pytest.fixture(params=range(5))
def rng(request):
    return np.random.default_rng(request.param)


@st.composite
def genotypes(draw, canonical=False, space=DEFAULT_SPACE):
    ub = space.upper_bounds.tolist()
    g = Genotype(tuple(draw(st.integers(0, u)) for u in ub))
    return canonicalize(g, space) if canonical else g


def small_config(**kw) -> SearchConfig:
    """A search small enough for unit tests (a few seconds)."""
    moea = kw.pop("moea", MoeaConfig(G=4, m=20, K_vice=5))
    base = dict(N=20, T=3, K_elite=4, seed=0, moea=moea)
    base.update(kw)
    return SearchConfig(**base)
