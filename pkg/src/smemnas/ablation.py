"""Ablation experiments: classifier choice, multi-population mechanism, initial sample size."""
from __future__ import annotations

import dataclasses
import time
from typing import Iterable, Sequence

import numpy as np

from .config import SearchConfig
from .metrics import kendall_tau, spearman_rho
from .search import make_evaluator, sample_unique, smem_nas
from .search_space import to_features
from .surrogate import KINDS, pairs_from_scores, rank_features, train

N_TEST = 50


def _sample_eval(cfg: SearchConfig, seed: int, count: int):
    rng = np.random.default_rng(seed)
    evaluator = make_evaluator(cfg)
    genotypes = sample_unique(rng, count, cfg.space)
    acc = np.array([evaluator.evaluate(g) for g in genotypes])
    F = to_features(np.array([g.genes for g in genotypes]), cfg.space)
    return F, acc


def surrogate_correlation(cfg: SearchConfig, kind: str, F_train, acc_train, F_test, acc_test, seed: int) -> dict:
    scfg = dataclasses.replace(cfg.surrogate, kind=kind)
    t0 = time.perf_counter()
    model = train(pairs_from_scores(F_train, acc_train), scfg, np.random.default_rng(seed))
    t1 = time.perf_counter()
    scores = rank_features(model, F_test)
    t2 = time.perf_counter()
    return {
        "ktau": kendall_tau(scores, acc_test),
        "spearman": spearman_rho(scores, acc_test),
        "train_seconds": t1 - t0,
        "predict_seconds": t2 - t1,
    }


def classifier_ablation(
    cfg: SearchConfig,
    seeds: Iterable[int],
    kinds: Sequence[str] = KINDS,
    n_train: int = 100,
    n_test: int = N_TEST,
) -> tuple[list[dict], list[dict]]:
    """Per-seed rows and per-kind median summary of held-out rank correlation."""
    rows = []
    for seed in seeds:
        F, acc = _sample_eval(cfg, seed, n_train + n_test)
        for kind in kinds:
            r = surrogate_correlation(cfg, kind, F[:n_train], acc[:n_train], F[n_train:], acc[n_train:], seed)
            rows.append({"kind": kind, "seed": seed, **r})
    summary = []
    for kind in kinds:
        sel = [r for r in rows if r["kind"] == kind]
        summary.append({
            "kind": kind,
            "ktau_median": float(np.median([r["ktau"] for r in sel])),
            "spearman_median": float(np.median([r["spearman"] for r in sel])),
            "train_seconds_median": float(np.median([r["train_seconds"] for r in sel])),
            "predict_seconds_median": float(np.median([r["predict_seconds"] for r in sel])),
            "n_seeds": len(sel),
        })
    return rows, summary


def initsize_ablation(
    cfg: SearchConfig,
    seeds: Iterable[int],
    sizes: Sequence[int] = (25, 50, 100, 150),
    with_hv: bool = True,
    n_test: int = N_TEST,
) -> tuple[list[dict], list[dict]]:
    """Initial-surrogate correlation (and optionally final HV) per initial size.

    For each seed the held-out set is fixed and training sets are nested
    prefixes of one pool, so sizes differ only in how much data they see.
    """
    seeds = list(seeds)
    rows = []
    for seed in seeds:
        F, acc = _sample_eval(cfg, seed, n_test + max(sizes))
        F_test, acc_test = F[:n_test], acc[:n_test]
        for n in sizes:
            r = surrogate_correlation(
                cfg, cfg.surrogate.kind, F[n_test:n_test + n], acc[n_test:n_test + n], F_test, acc_test, seed
            )
            row = {"N": n, "seed": seed, "ktau": r["ktau"], "spearman": r["spearman"]}
            if with_hv:
                row["hv"] = smem_nas(dataclasses.replace(cfg, N=n, seed=seed)).metrics["hv_final"]
            rows.append(row)
    summary = []
    for n in sizes:
        sel = [r for r in rows if r["N"] == n]
        s = {
            "N": n,
            "ktau_median": float(np.median([r["ktau"] for r in sel])),
            "spearman_median": float(np.median([r["spearman"] for r in sel])),
        }
        if with_hv:
            s["hv_median"] = float(np.median([r["hv"] for r in sel]))
        s["n_seeds"] = len(sel)
        summary.append(s)
    return rows, summary


def multipop_ablation(cfg: SearchConfig, seeds: Iterable[int]) -> list[dict]:
    """Paired final-front hypervolume with and without the vice population."""
    rows = []
    for seed in seeds:
        with_mp = dataclasses.replace(cfg, seed=seed, moea=dataclasses.replace(cfg.moea, multipop=True))
        without = dataclasses.replace(cfg, seed=seed, moea=dataclasses.replace(cfg.moea, multipop=False))
        rows.append({
            "seed": seed,
            "hv_multipop": smem_nas(with_mp).metrics["hv_final"],
            "hv_single": smem_nas(without).metrics["hv_final"],
        })
    return rows
