"""Pairwise-comparison surrogate: pair datasets, classifiers, and round-robin ranking.

A classifier sees the scaled genes of two architectures side by side and
predicts whether the first one is more accurate. Ranking ``n`` candidates
plays every unordered pair ``i < j`` once, orientation ``(i, j)``; the winner
gets a point, so scores lie in ``[0, n - 1]`` and sum to ``n (n - 1) / 2``.
"""
from __future__ import annotations

import enum
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import EvaluatedArch
from .search_space import (
    DEFAULT_SPACE,
    Genotype,
    SearchSpaceConfig,
    canonicalize,
    to_features,
)

log = logging.getLogger(__name__)

KINDS = ("svm", "knn", "rf", "mlp")


class InsufficientDataError(ValueError):
    pass


class DegenerateModelWarning(UserWarning):
    pass


class Verdict(enum.Enum):
    FIRST_BETTER = "first_better"
    SECOND_BETTER = "second_better"


@dataclass
class SurrogateConfig:
    kind: str = "svm"
    C: float = 1.0
    gamma: float | None = None  # None -> 1 / n_features of the concatenated pair
    tol: float = 1e-3
    max_iter: int = 2_000_000
    k: int = 5
    n_estimators: int = 100
    hidden: int = 64
    mlp_max_iter: int = 300
    augment: bool = False  # add the swapped orientation of every pair

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown surrogate kind {self.kind!r}; expected one of {KINDS}")
        if self.C <= 0 or self.tol <= 0 or self.max_iter < 1 or self.k < 1:
            raise ValueError("C, tol, max_iter and k must be positive")


# ---------------------------------------------------------------------------
# pair datasets


@dataclass
class PairDataset:
    """Pairs over a shared pool of points.

    Row ``t`` is the pair ``(points[left[t]], points[right[t]])`` with label 1
    when the left member is better. ``tie`` marks pairs with exactly equal
    accuracies (their label is 0 but neither orientation is right).
    """

    points: np.ndarray
    left: np.ndarray
    right: np.ndarray
    labels: np.ndarray
    tie: np.ndarray

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def features(self) -> np.ndarray:
        """Concatenated ``(M, 2 d)`` feature matrix."""
        return np.hstack([self.points[self.left], self.points[self.right]])

    def without_ties(self) -> "PairDataset":
        keep = ~self.tie
        return PairDataset(self.points, self.left[keep], self.right[keep], self.labels[keep], self.tie[keep])

    def augmented(self) -> "PairDataset":
        return PairDataset(
            self.points,
            np.concatenate([self.left, self.right]),
            np.concatenate([self.right, self.left]),
            np.concatenate([self.labels, np.where(self.tie, 0, 1 - self.labels)]),
            np.concatenate([self.tie, self.tie]),
        )

    @classmethod
    def from_arrays(cls, X: np.ndarray, y: np.ndarray) -> "PairDataset":
        """Wrap raw concatenated pair rows; halves are pooled by exact equality."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y).astype(np.int64)
        if X.ndim != 2 or X.shape[1] % 2:
            raise ValueError("pair rows must have an even number of columns")
        d = X.shape[1] // 2
        halves = np.vstack([X[:, :d], X[:, d:]])
        points, inverse = np.unique(halves, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        M = X.shape[0]
        return cls(points, inverse[:M], inverse[M:], y, np.zeros(M, dtype=bool))


def pairs_from_scores(features: np.ndarray, accuracies: Sequence[float]) -> PairDataset:
    features = np.asarray(features, dtype=float)
    acc = np.asarray(accuracies, dtype=float)
    n = acc.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 evaluated architectures for pairs, got {n}")
    i, j = np.triu_indices(n, k=1)  # row-major: (0,1), (0,2), ..., (1,2), ...
    labels = (acc[i] > acc[j]).astype(np.int64)
    return PairDataset(features, i.astype(np.int64), j.astype(np.int64), labels, acc[i] == acc[j])


def build_pair_dataset(archive: Sequence[EvaluatedArch], space: SearchSpaceConfig = DEFAULT_SPACE) -> PairDataset:
    """All ``n (n - 1) / 2`` ordered pairs ``(i, j), i < j`` of the archive."""
    if len(archive) < 2:
        raise InsufficientDataError(f"need at least 2 evaluated architectures for pairs, got {len(archive)}")
    genes = np.array([canonicalize(a.genotype, space).genes for a in archive])
    return pairs_from_scores(to_features(genes, space), [a.accuracy for a in archive])


# ---------------------------------------------------------------------------
# models


def _sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


class PairwiseModel:
    """Base class. ``decision > 0`` means the first architecture is better."""

    kind = "base"

    def __init__(self, training_size: int = 0):
        self.training_size = training_size

    def decision(self, X: np.ndarray) -> np.ndarray:
        """Decision values for concatenated pair rows."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = X.shape[1] // 2
        return np.array([self.cross_decision(x[None, :d], x[None, d:])[0, 0] for x in X])

    def cross_decision(self, FA: np.ndarray, FB: np.ndarray) -> np.ndarray:
        """``D[p, q]`` = decision for the pair (``FA[p]`` first, ``FB[q]`` second)."""
        FA = np.atleast_2d(FA)
        FB = np.atleast_2d(FB)
        out = np.empty((len(FA), len(FB)))
        for p in range(len(FA)):
            X = np.hstack([np.repeat(FA[p:p + 1], len(FB), axis=0), FB])
            out[p] = self.decision(X)
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision(X) > 0).astype(np.int64)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))


class ConstantModel(PairwiseModel):
    kind = "constant"

    def __init__(self, label: int, training_size: int = 0):
        super().__init__(training_size)
        self.label = int(label)

    def cross_decision(self, FA, FB):
        return np.full((len(np.atleast_2d(FA)), len(np.atleast_2d(FB))), 1.0 if self.label else -1.0)

    def decision(self, X):
        return np.full(len(np.atleast_2d(X)), 1.0 if self.label else -1.0)

    def to_dict(self):
        return {"kind": self.kind, "label": self.label, "training_size": self.training_size}


class SVMModel(PairwiseModel):
    """RBF-kernel SVM over pair rows, stored in factored form.

    With support pairs ``(u_t, v_t)`` and coefficients ``c_t = y_t alpha_t``::

        f(a, b) = sum_t c_t k(a, u_t) k(b, v_t) - rho = k(a, U) W k(b, U)^T - rho

    where ``W`` accumulates coefficients by point index. Ranking a population
    therefore costs two small kernel blocks and a matrix product.
    """

    kind = "svm"

    def __init__(self, points, sv_left, sv_right, coef, rho, gamma, training_size=0, n_iter=0, converged=True):
        super().__init__(training_size)
        self.points = np.asarray(points, dtype=float)
        self.sv_left = np.asarray(sv_left, dtype=np.int64)
        self.sv_right = np.asarray(sv_right, dtype=np.int64)
        self.coef = np.asarray(coef, dtype=float)
        self.rho = float(rho)
        self.gamma = float(gamma)
        self.n_iter = int(n_iter)
        self.converged = bool(converged)
        n = len(self.points)
        self.W = np.zeros((n, n))
        np.add.at(self.W, (self.sv_left, self.sv_right), self.coef)

    @property
    def n_support(self) -> int:
        return int(self.coef.size)

    def _k(self, F: np.ndarray) -> np.ndarray:
        return np.exp(-self.gamma * _sqdist(np.atleast_2d(F), self.points))

    def cross_decision(self, FA, FB):
        return (self._k(FA) @ self.W) @ self._k(FB).T - self.rho

    def decision(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = X.shape[1] // 2
        return np.einsum("pu,uv,pv->p", self._k(X[:, :d]), self.W, self._k(X[:, d:])) - self.rho

    def to_dict(self):
        return {
            "kind": self.kind,
            "gamma": self.gamma,
            "rho": self.rho,
            "points": self.points.tolist(),
            "sv_left": self.sv_left.tolist(),
            "sv_right": self.sv_right.tolist(),
            "coef": self.coef.tolist(),
            "training_size": self.training_size,
            "n_iter": self.n_iter,
            "converged": self.converged,
        }


class KNNModel(PairwiseModel):
    """k nearest training pairs by Euclidean distance on the concatenated row.

    Squared distance splits over the halves, so each query needs two small
    distance blocks. Distance ties resolve toward the earlier training pair.
    """

    kind = "knn"

    def __init__(self, points, left, right, labels, k=5, training_size=0):
        super().__init__(training_size)
        self.points = np.asarray(points, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.labels = np.asarray(labels, dtype=float)
        self.k = min(int(k), len(self.labels))

    def cross_decision(self, FA, FB):
        dA = _sqdist(np.atleast_2d(FA), self.points)[:, self.left]
        dB = _sqdist(np.atleast_2d(FB), self.points)[:, self.right]
        out = np.empty((len(dA), len(dB)))
        for p in range(len(dA)):
            dist = dA[p][None, :] + dB
            nearest = np.argsort(dist, axis=1, kind="stable")[:, :self.k]
            out[p] = self.labels[nearest].mean(axis=1) - 0.5
        return out

    def decision(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = X.shape[1] // 2
        dist = _sqdist(X[:, :d], self.points)[:, self.left] + _sqdist(X[:, d:], self.points)[:, self.right]
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :self.k]
        return self.labels[nearest].mean(axis=1) - 0.5

    def to_dict(self):
        return {
            "kind": self.kind,
            "k": self.k,
            "points": self.points.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "labels": self.labels.astype(int).tolist(),
            "training_size": self.training_size,
        }


class ForestModel(PairwiseModel):
    """Averaged class-1 leaf probabilities of axis-aligned trees."""

    kind = "rf"

    def __init__(self, trees: list[dict], training_size=0):
        super().__init__(training_size)
        self.trees = [{k: np.asarray(v) for k, v in t.items()} for t in trees]

    def decision(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        prob = np.zeros(len(X))
        for t in self.trees:
            node = np.zeros(len(X), dtype=np.int64)
            while True:
                left = t["left"][node]
                inner = left >= 0
                if not inner.any():
                    break
                go_left = X[np.arange(len(X)), np.where(inner, t["feature"][node], 0)] <= t["threshold"][node]
                node = np.where(inner, np.where(go_left, left, t["right"][node]), node)
            prob += t["value"][node]
        return prob / len(self.trees) - 0.5

    def cross_decision(self, FA, FB):
        FA, FB = np.atleast_2d(FA), np.atleast_2d(FB)
        X = np.hstack([np.repeat(FA, len(FB), axis=0), np.tile(FB, (len(FA), 1))])
        return self.decision(X).reshape(len(FA), len(FB))

    def to_dict(self):
        return {
            "kind": self.kind,
            "trees": [{k: v.tolist() for k, v in t.items()} for t in self.trees],
            "training_size": self.training_size,
        }


class MLPModel(PairwiseModel):
    """ReLU multi-layer perceptron with a logistic output; decision is the logit."""

    kind = "mlp"

    def __init__(self, weights, biases, training_size=0):
        super().__init__(training_size)
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]

    def decision(self, X):
        h = np.atleast_2d(np.asarray(X, dtype=float))
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0.0)
        return (h @ self.weights[-1] + self.biases[-1]).reshape(-1)

    def cross_decision(self, FA, FB):
        FA, FB = np.atleast_2d(FA), np.atleast_2d(FB)
        X = np.hstack([np.repeat(FA, len(FB), axis=0), np.tile(FB, (len(FA), 1))])
        return self.decision(X).reshape(len(FA), len(FB))

    def to_dict(self):
        return {
            "kind": self.kind,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "training_size": self.training_size,
        }


class OracleComparator(PairwiseModel):
    """A perfect comparator: maps scaled features back to genes and asks ``evaluate``."""

    kind = "oracle"

    def __init__(self, evaluate, space: SearchSpaceConfig = DEFAULT_SPACE):
        super().__init__(0)
        self.evaluate = evaluate
        self.space = space

    def _acc(self, F):
        ub = self.space.upper_bounds
        genes = np.rint(np.atleast_2d(F) * ub).astype(np.int64)
        return np.array([self.evaluate(Genotype(tuple(row))) for row in genes.tolist()])

    def cross_decision(self, FA, FB):
        return self._acc(FA)[:, None] - self._acc(FB)[None, :]

    def decision(self, X):
        X = np.atleast_2d(X)
        d = X.shape[1] // 2
        return self._acc(X[:, :d]) - self._acc(X[:, d:])


def model_from_dict(d: dict) -> PairwiseModel:
    kind = d.get("kind")
    size = int(d.get("training_size", 0))
    if kind == "svm":
        return SVMModel(
            d["points"], d["sv_left"], d["sv_right"], d["coef"], d["rho"], d["gamma"],
            size, d.get("n_iter", 0), d.get("converged", True),
        )
    if kind == "knn":
        return KNNModel(d["points"], d["left"], d["right"], d["labels"], d["k"], size)
    if kind == "rf":
        return ForestModel(d["trees"], size)
    if kind == "mlp":
        return MLPModel(d["weights"], d["biases"], size)
    if kind == "constant":
        return ConstantModel(d["label"], size)
    raise ValueError(f"unknown model kind {kind!r}")


def load_model(path: str | Path) -> PairwiseModel:
    return model_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# training


def _train_svm(data: PairDataset, cfg: SurrogateConfig) -> SVMModel:
    from ._smo import smo_pairs

    d2 = 2 * data.points.shape[1]
    gamma = cfg.gamma if cfg.gamma is not None else 1.0 / d2
    Kb = np.exp(-gamma * _sqdist(data.points, data.points))
    y = np.where(data.labels == 1, 1.0, -1.0)
    alpha, rho, n_iter, converged = smo_pairs(
        Kb, data.left, data.right, y, float(cfg.C), float(cfg.tol), int(cfg.max_iter)
    )
    if not converged:
        warnings.warn(f"SMO stopped at max_iter={cfg.max_iter} before reaching tol={cfg.tol}", RuntimeWarning)
    sv = alpha > 0
    # keep only the points referenced by support pairs
    used, inv = np.unique(np.concatenate([data.left[sv], data.right[sv]]), return_inverse=True)
    n_sv = int(sv.sum())
    log.debug("svm: %d pairs, %d support vectors, %d iterations", len(data), n_sv, n_iter)
    return SVMModel(
        data.points[used], inv[:n_sv], inv[n_sv:], (y * alpha)[sv], rho, gamma,
        training_size=len(data), n_iter=n_iter, converged=converged,
    )


def _train_rf(data: PairDataset, cfg: SurrogateConfig, rng: np.random.Generator) -> ForestModel:
    from sklearn.ensemble import RandomForestClassifier

    clf = RandomForestClassifier(n_estimators=cfg.n_estimators, random_state=int(rng.integers(2**31 - 1)))
    clf.fit(data.features, data.labels)
    trees = []
    pos = list(clf.classes_).index(1)
    for est in clf.estimators_:
        t = est.tree_
        value = t.value[:, 0, :]
        value = value / value.sum(axis=1, keepdims=True)
        trees.append({
            "left": t.children_left.astype(np.int64),
            "right": t.children_right.astype(np.int64),
            "feature": np.maximum(t.feature, 0).astype(np.int64),
            "threshold": t.threshold.astype(float),
            "value": value[:, pos].astype(float),
        })
    return ForestModel(trees, len(data))


def _train_mlp(data: PairDataset, cfg: SurrogateConfig, rng: np.random.Generator) -> MLPModel:
    from sklearn.exceptions import ConvergenceWarning
    from sklearn.neural_network import MLPClassifier

    clf = MLPClassifier(
        hidden_layer_sizes=(cfg.hidden,),
        max_iter=cfg.mlp_max_iter,
        random_state=int(rng.integers(2**31 - 1)),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        clf.fit(data.features, data.labels)
    return MLPModel(clf.coefs_, clf.intercepts_, len(data))


def train(
    pairs: PairDataset,
    cfg: SurrogateConfig | None = None,
    rng: np.random.Generator | None = None,
) -> PairwiseModel:
    """Fit a pairwise classifier.

    Exact-tie pairs are dropped. If only one label remains a
    :class:`ConstantModel` is returned with a :class:`DegenerateModelWarning`.
    """
    cfg = cfg or SurrogateConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    if len(pairs) == 0:
        raise InsufficientDataError("empty pair dataset")
    data = pairs.without_ties()
    if cfg.augment:
        data = data.augmented()
    if len(data) == 0:
        raise InsufficientDataError("every pair is an exact tie")
    labels = np.unique(data.labels)
    if labels.size < 2:
        warnings.warn(
            f"all {len(data)} training pairs carry label {int(labels[0])}; using a constant model",
            DegenerateModelWarning,
        )
        return ConstantModel(int(labels[0]), len(data))
    if cfg.kind == "svm":
        return _train_svm(data, cfg)
    if cfg.kind == "knn":
        return KNNModel(data.points, data.left, data.right, data.labels, cfg.k, len(data))
    if cfg.kind == "rf":
        return _train_rf(data, cfg, rng)
    if cfg.kind == "mlp":
        return _train_mlp(data, cfg, rng)
    raise ValueError(f"unknown surrogate kind {cfg.kind!r}")


# ---------------------------------------------------------------------------
# comparison and ranking


def _features(genotypes: Sequence[Genotype], space: SearchSpaceConfig) -> np.ndarray:
    genes = np.array([canonicalize(g, space).genes for g in genotypes], dtype=np.int64)
    return to_features(genes.reshape(len(genotypes), space.gene_count), space)


def compare(model: PairwiseModel, g1: Genotype, g2: Genotype, space: SearchSpaceConfig = DEFAULT_SPACE) -> Verdict:
    """Classifier verdict; a decision of exactly 0 counts as ``SECOND_BETTER``."""
    F = _features([g1, g2], space)
    d = model.cross_decision(F[:1], F[1:])[0, 0]
    return Verdict.FIRST_BETTER if d > 0 else Verdict.SECOND_BETTER


class RoundRobinRanker:
    """Incremental round-robin scores for a population that only grows.

    Appending members keeps earlier indices, so every existing pair keeps its
    orientation and verdict; only pairs touching new members are evaluated.
    Scores are always equal to a full recomputation over the current members.
    """

    def __init__(self, model: PairwiseModel):
        self.model = model
        self.features = np.zeros((0, 0))
        self.scores = np.zeros(0, dtype=np.int64)
        self.comparisons = 0

    def __len__(self) -> int:
        return int(self.scores.size)

    def extend(self, F: np.ndarray) -> np.ndarray:
        F = np.atleast_2d(np.asarray(F, dtype=float))
        if F.shape[0] == 0:
            return self.scores
        n_old = len(self)
        scores = np.concatenate([self.scores, np.zeros(len(F), dtype=np.int64)])
        if n_old:
            # old members are first in every (old, new) pair
            wins = self.model.cross_decision(self.features, F) > 0
            scores[:n_old] += wins.sum(axis=1)
            scores[n_old:] += (~wins).sum(axis=0)
            self.comparisons += wins.size
        wins = self.model.cross_decision(F, F) > 0
        upper = np.triu(np.ones_like(wins), k=1)
        scores[n_old:] += (wins & upper).sum(axis=1) + (~wins & upper).sum(axis=0)
        self.comparisons += len(F) * (len(F) - 1) // 2
        self.features = F if n_old == 0 else np.vstack([self.features, F])
        self.scores = scores
        return self.scores


def rank_features(model: PairwiseModel, F: np.ndarray) -> np.ndarray:
    return RoundRobinRanker(model).extend(F).copy()


def rank(model: PairwiseModel, candidates: Sequence[Genotype], space: SearchSpaceConfig = DEFAULT_SPACE) -> np.ndarray:
    """Round-robin win counts; higher means predicted more accurate."""
    if len(candidates) == 0:
        return np.zeros(0, dtype=np.int64)
    return rank_features(model, _features(candidates, space))
