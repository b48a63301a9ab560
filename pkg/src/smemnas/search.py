"""Outer surrogate-assisted search loop.

Each iteration retrains the pairwise surrogate on every evaluated
architecture, evolves the archive with :func:`mp_moea`, and truly evaluates
``K_elite`` novel elites. The archive grows by exactly ``K_elite`` per
iteration and the result is its true-objective first front.
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .complexity import genotype_madds, max_madds
from .config import SearchConfig
from .evaluation import EvaluatedArch, Evaluator, SyntheticOracle, tabular_evaluator_load
from .metrics import hypervolume_2d, kendall_tau
from .moea import Population, crowding_distance, fast_nondominated_sort, mp_moea
from .search_space import Genotype, SearchSpaceConfig, canonicalize, canonicalize_array, random_genotype
from .surrogate import PairwiseModel, build_pair_dataset, rank, train

log = logging.getLogger(__name__)


class SearchError(RuntimeError):
    pass


class Archive:
    """Evaluated architectures in evaluation order, unique by canonical genotype."""

    def __init__(self, space: SearchSpaceConfig):
        self.space = space
        self.entries: list[EvaluatedArch] = []
        self._keys: set[Genotype] = set()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, g: Genotype) -> bool:
        return canonicalize(g, self.space) in self._keys

    @property
    def keys(self) -> set[Genotype]:
        return self._keys

    def add(self, g: Genotype, accuracy: float, madds: float, origin: str) -> EvaluatedArch:
        key = canonicalize(g, self.space)
        if key in self._keys:
            raise SearchError(f"genotype {key} already archived")
        entry = EvaluatedArch(key, float(accuracy), float(madds), origin, len(self.entries))
        self.entries.append(entry)
        self._keys.add(key)
        return entry

    def objectives(self) -> np.ndarray:
        """``(error, madds)`` rows, both minimized."""
        return np.array([[1.0 - a.accuracy, a.madds] for a in self.entries]).reshape(-1, 2)

    def front(self) -> list[EvaluatedArch]:
        if not self.entries:
            return []
        first = fast_nondominated_sort(self.objectives())[0]
        return sorted((self.entries[i] for i in first), key=lambda a: (a.madds, -a.accuracy, a.eval_order))


def make_evaluator(cfg: SearchConfig) -> Evaluator:
    if cfg.evaluator.kind == "tabular":
        return tabular_evaluator_load(cfg.evaluator.path, cfg.space)
    return SyntheticOracle(cfg.evaluator.synthetic, cfg.space)


def _evaluate_batch(evaluator: Evaluator, genotypes: Sequence[Genotype], threads: int) -> list[float]:
    def one(g):
        try:
            return evaluator.evaluate(g)
        except Exception as exc:
            raise SearchError(f"evaluation failed for genotype {g}: {exc}") from exc

    if threads > 1 and len(genotypes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, genotypes))  # map keeps input order
    return [one(g) for g in genotypes]


def sample_unique(
    rng: np.random.Generator,
    count: int,
    space: SearchSpaceConfig,
    exclude: set[Genotype] = frozenset(),
    max_tries: int | None = None,
) -> list[Genotype]:
    out: list[Genotype] = []
    seen = set(exclude)
    tries = 0
    max_tries = max_tries or 1000 * max(count, 1)
    while len(out) < count:
        if tries >= max_tries:
            raise SearchError(f"could not sample {count} unique genotypes")
        tries += 1
        g = random_genotype(rng, space)
        if g not in seen:
            seen.add(g)
            out.append(g)
    return out


def initialize_archive(cfg: SearchConfig, evaluator: Evaluator, rng: np.random.Generator) -> Archive:
    archive = Archive(cfg.space)
    genotypes = sample_unique(rng, cfg.N, cfg.space)
    accs = _evaluate_batch(evaluator, genotypes, cfg.threads)
    for g, acc in zip(genotypes, accs):
        archive.add(g, acc, genotype_madds(g, cfg.space, cfg.channels), "initial")
    return archive


def select_elites(
    genotypes: Sequence[Genotype],
    objectives: np.ndarray,
    archived: set[Genotype],
    K_elite: int,
    rng: np.random.Generator,
    space: SearchSpaceConfig,
) -> list[Genotype]:
    """Pick ``K_elite`` novel genotypes front by front, splitting the last front by crowding.

    Falls back to fresh random genotypes when too few novel solutions exist.
    """
    obj = np.asarray(objectives, dtype=float).reshape(-1, 2)
    novel: list[int] = []
    keys: list[Genotype] = []
    seen = set(archived)
    canon = canonicalize_array(np.array([g.genes for g in genotypes], dtype=np.int64).reshape(len(genotypes), -1), space)
    for i, row in enumerate(canon.tolist()):
        key = Genotype(tuple(row))
        if key not in seen:
            seen.add(key)
            novel.append(i)
            keys.append(key)
    chosen: list[Genotype] = []
    if novel:
        sub = obj[novel]
        for front in fast_nondominated_sort(sub):
            room = K_elite - len(chosen)
            if room <= 0:
                break
            if len(front) <= room:
                chosen += [keys[i] for i in front]
            else:
                crowd = crowding_distance(sub[front])
                order = np.lexsort((np.array(front), -crowd))
                chosen += [keys[front[k]] for k in order[:room]]
    if len(chosen) < K_elite:
        chosen += sample_unique(rng, K_elite - len(chosen), space, exclude=seen)
    return chosen


def hv_reference(cfg: SearchConfig) -> tuple[float, float, float]:
    """(error ref, normalized madds ref, madds scale)."""
    return cfg.hv_ref_error, cfg.hv_ref_madds_factor, max_madds(cfg.space, cfg.channels)


def archive_hypervolume(entries: Sequence[EvaluatedArch], cfg: SearchConfig) -> float:
    ref_e, ref_m, scale = hv_reference(cfg)
    pts = [(1.0 - a.accuracy, a.madds / scale) for a in entries]
    return hypervolume_2d(pts, (ref_e, ref_m))


@dataclass
class SearchResult:
    archive: Archive
    front: list[EvaluatedArch]
    metrics: dict
    snapshots: list[dict] = field(default_factory=list)


class RunWriter:
    """Streams run artifacts into a directory."""

    def __init__(self, out_dir: str | Path, cfg: SearchConfig, extra: dict | None = None):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.paths = {
            name: str(self.dir / name)
            for name in ("config.json", "archive.jsonl", "gen_snapshots.jsonl", "front.json", "metrics.json", "manifest.json")
        }
        self.manifest = {
            "config_hash": cfg.digest(),
            "seed": cfg.seed,
            "tool_version": __version__,
            "multipop": cfg.moea.multipop,
            "start": datetime.now(timezone.utc).isoformat(),
            "end": None,
            "outputs": self.paths,
            **(extra or {}),
        }
        self._write("manifest.json", json.dumps(self.manifest, indent=2))
        self._write("config.json", cfg.to_json())
        self._write("archive.jsonl", "")
        self._write("gen_snapshots.jsonl", "")

    def _write(self, name, text):
        (self.dir / name).write_text(text)

    def _append(self, name, lines):
        with (self.dir / name).open("a") as fh:
            for line in lines:
                fh.write(json.dumps(line) + "\n")

    def archive_entries(self, entries):
        self._append("archive.jsonl", [e.to_dict() for e in entries])

    def snapshot(self, record):
        self._append("gen_snapshots.jsonl", [record])

    def finish(self, front, metrics):
        self._write("front.json", json.dumps([a.to_dict() for a in front], indent=2))
        self._write("metrics.json", json.dumps(metrics, indent=2))
        self.manifest["end"] = datetime.now(timezone.utc).isoformat()
        self._write("manifest.json", json.dumps(self.manifest, indent=2))


def _elite_ktau(model: PairwiseModel, elites: Sequence[Genotype], accs: Sequence[float], space) -> float | None:
    if len(elites) < 2:
        return None
    tau = kendall_tau(rank(model, elites, space), accs)
    return None if np.isnan(tau) else float(tau)


def smem_nas(
    cfg: SearchConfig,
    out_dir: str | Path | None = None,
    evaluator: Evaluator | None = None,
    manifest_extra: dict | None = None,
) -> SearchResult:
    t_start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    evaluator = evaluator or make_evaluator(cfg)
    space = cfg.space
    writer = RunWriter(out_dir, cfg, manifest_extra) if out_dir is not None else None

    archive = initialize_archive(cfg, evaluator, rng)
    if writer:
        writer.archive_entries(archive.entries)
    iterations = []
    snapshots: list[dict] = []
    hv_initial = archive_hypervolume(archive.front(), cfg)

    for t in range(cfg.T):
        t_iter = time.perf_counter()
        try:
            pairs = build_pair_dataset(archive.entries, space)
            model = train(pairs, cfg.surrogate, rng)

            def record(g, pop: Population, main, _t=t):
                obj = pop.objectives
                snap = {
                    "iteration": _t,
                    "generation": g,
                    "population": len(pop),
                    "front0": obj[main].tolist(),
                }
                snapshots.append(snap)
                if writer:
                    writer.snapshot(snap)

            pop = mp_moea(
                [a.genotype for a in archive], model, cfg.moea, rng, space, cfg.channels, on_generation=record
            )
            elites = select_elites(pop.genotypes(), pop.objectives, archive.keys, cfg.K_elite, rng, space)
            accs = _evaluate_batch(evaluator, elites, cfg.threads)
        except SearchError as exc:
            raise SearchError(f"iteration {t}: {exc}") from exc
        except Exception as exc:
            raise SearchError(f"iteration {t}: {type(exc).__name__}: {exc}") from exc
        added = [
            archive.add(g, acc, genotype_madds(g, space, cfg.channels), f"elite {t}") for g, acc in zip(elites, accs)
        ]
        if writer:
            writer.archive_entries(added)
        front = archive.front()
        iterations.append({
            "iteration": t,
            "archive_size": len(archive),
            "pair_count": len(pairs),
            "train_size": model.training_size,
            "model_kind": model.kind,
            "population": len(pop),
            "ktau_elites": _elite_ktau(model, elites, accs, space),
            "hv": archive_hypervolume(front, cfg),
            "front_size": len(front),
            "seconds": time.perf_counter() - t_iter,
        })
        log.info(
            "iteration %d: archive %d, population %d, hv %.5f",
            t, len(archive), len(pop), iterations[-1]["hv"],
        )

    front = archive.front()
    ref_e, ref_m, scale = hv_reference(cfg)
    metrics = {
        "hv_initial": hv_initial,
        "hv_final": archive_hypervolume(front, cfg),
        "hv_reference": {"error": ref_e, "madds_normalized": ref_m, "madds_scale": scale},
        "iterations": iterations,
        "wall_time": time.perf_counter() - t_start,
    }
    if writer:
        writer.finish(front, metrics)
    return SearchResult(archive, front, metrics, snapshots)
