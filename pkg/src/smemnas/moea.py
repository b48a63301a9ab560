"""Multi-population multi-objective evolutionary search.

Both objectives are minimized: the negated round-robin score from the
pairwise surrogate and MAdds. The population only grows; every generation adds
up to ``m`` offspring that are new in canonical form.

Parents come from the main population E (front 0) and the vice population F
(high-crowding dominated solutions). A per-generation threshold decides the
mix: below ``theta`` both parents come from E, otherwise the second comes
from F.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .complexity import ChannelTable, canonical_madds
from .search_space import (
    DEFAULT_CHANNELS,
    DEFAULT_SPACE,
    Genotype,
    SearchSpaceConfig,
    canonicalize_array,
    to_features,
)
from .surrogate import PairwiseModel, RoundRobinRanker

log = logging.getLogger(__name__)


@dataclass
class MoeaConfig:
    G: int = 20
    K_vice: int = 20
    m: int = 100
    theta: float = 0.5
    crossover_prob: float = 0.9
    mutation_prob: float = 1.0 / 46
    eta_m: float = 20.0
    multipop: bool = True
    # True flips the comparison: theta < threshold -> both parents from E
    invert_threshold: bool = False

    def __post_init__(self):
        if self.G < 0:
            raise ValueError("G must be >= 0")
        if self.K_vice < 1:
            raise ValueError("K_vice must be >= 1")
        if self.m < 2 or self.m % 2:
            raise ValueError("m must be an even number >= 2")
        for name in ("theta", "crossover_prob", "mutation_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.eta_m < 0:
            raise ValueError("eta_m must be >= 0")


@dataclass
class Individual:
    genotype: Genotype
    obj_acc: float
    obj_madds: float
    front: int = -1
    crowding: float = 0.0

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.obj_acc, self.obj_madds)


# ---------------------------------------------------------------------------
# sorting


def dominates(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def fast_nondominated_sort(points) -> list[list[int]]:
    """Partition points into non-dominated fronts (each front sorted by index).

    Two-objective sweep: visit points in lexicographic order; a point joins
    the first front whose latest member does not dominate it. Within a front
    the latest member has the smallest second objective, so one check per
    front suffices.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 2) if len(points) else np.zeros((0, 2))
    if len(P) == 0:
        return []
    if not np.all(np.isfinite(P)):
        raise ValueError("objectives must be finite")
    order = np.lexsort((P[:, 1], P[:, 0]))
    last: list[tuple[float, float]] = []
    members: list[list[int]] = []
    for i in order.tolist():
        x, y = P[i, 0], P[i, 1]
        k = 0
        while k < len(last):
            lx, ly = last[k]
            if not (ly <= y and (lx, ly) != (x, y)):
                break
            k += 1
        if k == len(last):
            last.append((x, y))
            members.append([i])
        else:
            last[k] = (x, y)
            members[k].append(i)
    return [sorted(f) for f in members]


def crowding_distance(points) -> np.ndarray:
    P = np.asarray(points, dtype=float).reshape(-1, 2) if len(points) else np.zeros((0, 2))
    n = len(P)
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(P.shape[1]):
        order = np.argsort(P[:, k], kind="stable")
        v = P[order, k]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = v[-1] - v[0]
        if span > 0:
            dist[order[1:-1]] += (v[2:] - v[:-2]) / span
    return dist


def front_ranks(fronts: Sequence[Sequence[int]], n: int) -> np.ndarray:
    rank = np.full(n, -1, dtype=np.int64)
    for f, members in enumerate(fronts):
        rank[list(members)] = f
    return rank


def crowding_by_front(points, fronts) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    out = np.zeros(len(P))
    for members in fronts:
        out[members] = crowding_distance(P[members])
    return out


def split_populations(points, K_vice: int, fronts=None) -> tuple[list[int], list[int]]:
    """Main population = front 0; vice = top-``K_vice`` of the rest by crowding.

    Crowding is computed within each front. Ties go to the lower front, then
    the lower index.
    """
    P = np.asarray(points, dtype=float)
    if len(P) == 0:
        raise ValueError("cannot split an empty population")
    if fronts is None:
        fronts = fast_nondominated_sort(P)
    main = sorted(fronts[0])
    rest = [i for f in fronts[1:] for i in f]
    if not rest:
        return main, []
    crowd = crowding_by_front(P, fronts)
    rank = front_ranks(fronts, len(P))
    rest = np.array(rest)
    order = np.lexsort((rest, rank[rest], -crowd[rest]))
    return main, rest[order][:K_vice].tolist()


# ---------------------------------------------------------------------------
# variation


def threshold(g: int, G: int, delta: float, rng: np.random.Generator) -> float:
    """Generation-dependent threshold; endpoints are ordered before sampling."""
    if g < G / 4:
        lo, hi = delta, 0.7
    elif g <= 3 * G / 4:
        lo, hi = 0.0, delta
    else:
        lo, hi = delta, 1.0
    lo, hi = min(lo, hi), max(lo, hi)
    return float(rng.uniform(lo, hi))


def select_parents(
    E: Sequence[int],
    F: Sequence[int],
    theta: float,
    threshold_value: float,
    rng: np.random.Generator,
    multipop: bool = True,
    invert: bool = False,
) -> tuple[int, int]:
    if len(E) == 0:
        raise ValueError("main population is empty")
    both_from_main = (theta < threshold_value) if invert else (threshold_value < theta)
    if not multipop or both_from_main or len(F) == 0:
        if len(E) == 1:
            return E[0], E[0]
        a, b = rng.choice(len(E), size=2, replace=False)
        return E[a], E[b]
    return E[rng.integers(len(E))], F[rng.integers(len(F))]


def two_point_crossover(p1: np.ndarray, p2: np.ndarray, crossover_prob: float, rng: np.random.Generator):
    p1 = np.asarray(p1)
    p2 = np.asarray(p2)
    if p1.shape != p2.shape:
        raise ValueError("parents differ in length")
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() < crossover_prob:
        a, b = np.sort(rng.integers(0, p1.size + 1, size=2))
        c1[a:b], c2[a:b] = p2[a:b], p1[a:b]
    return c1, c2


def int_polynomial_mutation(
    genes: np.ndarray,
    upper: np.ndarray,
    mutation_prob: float,
    eta_m: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Polynomial mutation on ``[0, U]`` per gene, rounded back to integers.

    If rounding lands on the original value the gene moves one step in the
    perturbation's direction (away from a bound when the step is zero), so a
    selected gene with ``U >= 1`` always changes.
    """
    x = np.array(genes, dtype=np.int64, copy=True)
    upper = np.asarray(upper)
    selected = rng.random(x.size) < mutation_prob
    for i in np.flatnonzero(selected):
        U = int(upper[i])
        if U < 1:
            continue
        xi = int(x[i])
        d1, d2 = xi / U, (U - xi) / U
        r = rng.random()
        mut_pow = 1.0 / (eta_m + 1.0)
        if r < 0.5:
            val = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1) ** (eta_m + 1.0)
            dq = val ** mut_pow - 1.0
        else:
            val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2) ** (eta_m + 1.0)
            dq = 1.0 - val ** mut_pow
        y = min(max(int(np.rint(xi + dq * U)), 0), U)
        if y == xi:
            step = 1 if dq > 0 else -1 if dq < 0 else (1 if xi < U else -1)
            if not 0 <= xi + step <= U:
                step = -step
            y = xi + step
        x[i] = y
    return x


# ---------------------------------------------------------------------------
# main loop


@dataclass
class Population:
    """Growing population stored column-wise; row order is insertion order."""

    genes: np.ndarray
    canonical: np.ndarray
    madds: np.ndarray
    scores: np.ndarray
    fronts: list[list[int]] = field(default_factory=list)
    crowding: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return len(self.genes)

    @property
    def objectives(self) -> np.ndarray:
        return np.column_stack([-self.scores.astype(float), self.madds])

    def individuals(self) -> list[Individual]:
        rank = front_ranks(self.fronts, len(self))
        obj = self.objectives
        return [
            Individual(Genotype(tuple(self.genes[i].tolist())), float(obj[i, 0]), float(obj[i, 1]), int(rank[i]), float(self.crowding[i]))
            for i in range(len(self))
        ]

    def genotypes(self) -> list[Genotype]:
        return [Genotype(tuple(r)) for r in self.genes.tolist()]


def mp_moea(
    P0: Sequence[Genotype],
    model: PairwiseModel,
    cfg: MoeaConfig,
    rng: np.random.Generator,
    space: SearchSpaceConfig = DEFAULT_SPACE,
    chan: ChannelTable = DEFAULT_CHANNELS,
    on_generation: Callable[[int, Population, list[int]], None] | None = None,
) -> Population:
    """Evolve ``P0`` for ``cfg.G`` generations and return the whole population.

    The population never exceeds ``len(P0) + cfg.m * cfg.G`` members.
    ``on_generation(g, population, main)`` fires after the initial sort
    (``g = 0``) and after each generation (``g = 1..G``).
    """
    if len(P0) == 0:
        raise ValueError("initial population is empty")
    upper = space.upper_bounds
    genes = np.array([g.genes for g in P0], dtype=np.int64)
    canon = canonicalize_array(genes, space)
    seen = {tuple(r) for r in canon.tolist()}
    if len(seen) != len(P0):
        raise ValueError("initial population contains canonical duplicates")
    madds = np.array([canonical_madds(tuple(r), space, chan) for r in canon.tolist()])
    ranker = RoundRobinRanker(model)
    ranker.extend(to_features(canon, space))
    pop = Population(genes, canon, madds, ranker.scores.copy())

    def resort():
        obj = pop.objectives
        pop.fronts = fast_nondominated_sort(obj)
        pop.crowding = crowding_by_front(obj, pop.fronts)
        return split_populations(obj, cfg.K_vice, pop.fronts)

    E, F = resort()
    if on_generation:
        on_generation(0, pop, E)

    for g in range(cfg.G):
        delta = float(rng.random())
        thr = threshold(g, cfg.G, delta, rng)
        new_genes, new_canon = [], []
        attempts = 0
        while len(new_genes) < cfg.m and attempts < 10 * cfg.m:
            i1, i2 = select_parents(E, F, cfg.theta, thr, rng, cfg.multipop, cfg.invert_threshold)
            c1, c2 = two_point_crossover(pop.genes[i1], pop.genes[i2], cfg.crossover_prob, rng)
            for child in (c1, c2):
                child = int_polynomial_mutation(child, upper, cfg.mutation_prob, cfg.eta_m, rng)
                attempts += 1
                key_arr = canonicalize_array(child, space)
                key = tuple(key_arr.tolist())
                if key in seen or len(new_genes) >= cfg.m:
                    continue
                seen.add(key)
                new_genes.append(child)
                new_canon.append(key_arr)
        if len(new_genes) < cfg.m:
            log.info("generation %d: only %d unique offspring after %d attempts", g, len(new_genes), attempts)
        if new_genes:
            ng = np.array(new_genes)
            nc = np.array(new_canon)
            pop.genes = np.vstack([pop.genes, ng])
            pop.canonical = np.vstack([pop.canonical, nc])
            pop.madds = np.concatenate(
                [pop.madds, [canonical_madds(tuple(r), space, chan) for r in nc.tolist()]]
            )
            # scores are population-relative: every member's score updates
            ranker.extend(to_features(nc, space))
            pop.scores = ranker.scores.copy()
        E, F = resort()
        if on_generation:
            on_generation(g + 1, pop, E)
    return pop
