"""Probabilistic classifiers used as label-quality model and as task classifier.

Every model maps a feature matrix to an ``(n, K)`` matrix of class
probabilities. Classes that were absent from the training data always get
exactly zero probability.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .datastream import Dataset

FORMAT_VERSION = 1
KINDS = ("knn", "nearest_centroid", "mlp")


class EmptyTrainingSet(ValueError):
    """Raised by :func:`fit` on an empty training set; callers keep their previous model."""


def argmax_lowest(probs: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index (numpy's convention)."""
    return np.argmax(probs, axis=1)


def _sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    np.maximum(d, 0.0, out=d)
    return d


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _mask_absent(probs: np.ndarray, present: np.ndarray) -> np.ndarray:
    if present.all():
        return probs
    probs = np.where(present[None, :], probs, 0.0)
    return probs / probs.sum(axis=1, keepdims=True)


def _k_smallest(d: np.ndarray, labels: np.ndarray, order: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k best entries per row of ``d``.

    Rows are ranked by distance, then class label, then ``order`` (the global
    training index), so ties at the k-th distance are resolved the same way
    whether all columns are present or only a merged candidate set.
    ``labels`` and ``order`` may be per-column (1-D) or per-entry (2-D).
    """
    n_rows, n_cols = d.shape
    k = min(k, n_cols)
    if k == n_cols:
        nn = np.broadcast_to(np.arange(n_cols), (n_rows, n_cols)).copy()
    else:
        nn = np.argpartition(d, k - 1, axis=1)[:, :k]
    kth = np.take_along_axis(d, nn, axis=1).max(axis=1)
    for i in np.flatnonzero((d <= kth[:, None]).sum(axis=1) > k):
        lab = labels[i] if labels.ndim == 2 else labels
        pos = order[i] if order.ndim == 2 else order
        inside = np.flatnonzero(d[i] < kth[i])
        tied = np.flatnonzero(d[i] == kth[i])
        tied = tied[np.lexsort((pos[tied], lab[tied]))]
        nn[i] = np.concatenate([inside, tied[: k - len(inside)]])
    return nn


def _vote_fractions(neighbour_labels: np.ndarray, k_classes: int) -> np.ndarray:
    counts = np.stack([(neighbour_labels == c).sum(axis=1) for c in range(k_classes)], axis=1)
    return counts / counts.sum(axis=1, keepdims=True)


class NeighbourCache:
    """Running k nearest training points of a fixed query set.

    For a training set that only ever grows by appending, ``extend`` keeps the
    same neighbours that a full k-NN search over all data so far would return,
    at the cost of the new rows only.
    """

    def __init__(self, queries: np.ndarray, k: int, k_classes: int):
        self.queries = np.asarray(queries, dtype=np.float64)
        self.k = k
        self.k_classes = k_classes
        n = len(self.queries)
        self.dist = np.empty((n, 0))
        self.labels = np.empty((n, 0), dtype=np.int64)
        self.index = np.empty((n, 0), dtype=np.int64)
        self.n_seen = 0

    def extend(self, X: np.ndarray, y: np.ndarray) -> None:
        y = np.asarray(y, dtype=np.int64)
        if len(y) == 0:
            return
        n = len(self.queries)
        dist = np.hstack([self.dist, _sq_distances(self.queries, np.asarray(X, dtype=np.float64))])
        labels = np.hstack([self.labels, np.broadcast_to(y, (n, len(y)))])
        index = np.hstack([self.index, np.broadcast_to(self.n_seen + np.arange(len(y)), (n, len(y)))])
        keep = _k_smallest(dist, labels, index, self.k)
        self.dist = np.take_along_axis(dist, keep, axis=1)
        self.labels = np.take_along_axis(labels, keep, axis=1)
        self.index = np.take_along_axis(index, keep, axis=1)
        self.n_seen += len(y)

    def predict_proba(self) -> np.ndarray:
        return _vote_fractions(self.labels, self.k_classes)


class KNearestNeighbors:
    """Plain k-NN vote; probabilities are neighbour class fractions.

    At the k-th distance, equidistant training points are taken lowest class
    index first. Vote ties resolve through :func:`argmax_lowest`.
    """

    kind = "knn"

    def __init__(self, k: int = 5, chunk: int = 1024):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.chunk = chunk

    def fit(self, X: np.ndarray, y: np.ndarray, k_classes: int) -> "KNearestNeighbors":
        self.X_ = np.array(X, dtype=np.float64)
        self.y_ = np.array(y, dtype=np.int64)
        self.k_classes_ = k_classes
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty((X.shape[0], self.k_classes_))
        for s in range(0, X.shape[0], self.chunk):
            d = _sq_distances(X[s:s + self.chunk], self.X_)
            nn = _k_smallest(d, self.y_, np.arange(len(self.y_)), self.k)
            out[s:s + self.chunk] = _vote_fractions(self.y_[nn], self.k_classes_)
        return out

    def get_params(self) -> dict:
        return {"k": self.k, "X": self.X_.tolist(), "y": self.y_.tolist(), "k_classes": self.k_classes_}

    @classmethod
    def from_params(cls, p: dict) -> "KNearestNeighbors":
        m = cls(p["k"])
        return m.fit(np.asarray(p["X"], dtype=np.float64).reshape(len(p["y"]), -1), p["y"], p["k_classes"])


class NearestCentroid:
    """Per-class means; probabilities are a softmax over negative distances."""

    kind = "nearest_centroid"

    def __init__(self, temperature: float = 1.0):
        self.temperature = temperature

    def fit(self, X: np.ndarray, y: np.ndarray, k_classes: int) -> "NearestCentroid":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.k_classes_ = k_classes
        self.present_ = np.bincount(y, minlength=k_classes) > 0
        self.centroids_ = np.zeros((k_classes, X.shape[1]))
        for c in np.flatnonzero(self.present_):
            self.centroids_[c] = X[y == c].mean(axis=0)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        d = np.sqrt(_sq_distances(np.asarray(X, dtype=np.float64), self.centroids_))
        logits = np.where(self.present_[None, :], -d / self.temperature, -np.inf)
        return _mask_absent(_softmax(logits), self.present_)

    def get_params(self) -> dict:
        return {"temperature": self.temperature, "centroids": self.centroids_.tolist(),
                "present": self.present_.tolist(), "k_classes": self.k_classes_}

    @classmethod
    def from_params(cls, p: dict) -> "NearestCentroid":
        m = cls(p["temperature"])
        m.k_classes_ = p["k_classes"]
        m.centroids_ = np.asarray(p["centroids"], dtype=np.float64)
        m.present_ = np.asarray(p["present"], dtype=bool)
        return m


class MLP:
    """Feed-forward ReLU network with a softmax head, trained by mini-batch SGD.

    Inputs are standardised with statistics of the training set. ``max_steps``
    caps the total number of SGD updates of one fit, which keeps from-scratch
    refits on a growing training pool at a bounded cost.
    """

    kind = "mlp"

    def __init__(self, hidden: tuple[int, ...] = (28, 28), lr: float = 0.01, epochs: int = 100,
                 batch_size: int = 32, max_steps: int | None = None, seed: int = 0):
        self.hidden = tuple(hidden)
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.seed = seed

    def _init(self, n_in: int, k: int, rng: np.random.Generator) -> None:
        sizes = (n_in, *self.hidden, k)
        self.weights_ = [rng.standard_normal((a, b)) * np.sqrt(2.0 / a) for a, b in zip(sizes, sizes[1:])]
        self.biases_ = [np.zeros(b) for b in sizes[1:]]

    def _forward(self, Z: np.ndarray) -> list[np.ndarray]:
        acts = [Z]
        for W, b in zip(self.weights_[:-1], self.biases_[:-1]):
            acts.append(np.maximum(acts[-1] @ W + b, 0.0))
        acts.append(_softmax(acts[-1] @ self.weights_[-1] + self.biases_[-1]))
        return acts

    def fit(self, X: np.ndarray, y: np.ndarray, k_classes: int, *, warm_start: bool = False,
            epochs: int | None = None) -> "MLP":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        epochs = self.epochs if epochs is None else epochs
        rng = np.random.default_rng(self.seed)
        if not warm_start or not hasattr(self, "weights_"):
            self.k_classes_ = k_classes
            self.mean_ = X.mean(axis=0)
            self.scale_ = X.std(axis=0)
            self.scale_[self.scale_ < 1e-12] = 1.0
            self._init(X.shape[1], k_classes, rng)
            self.present_ = np.zeros(k_classes, dtype=bool)
            self.loss_history_ = []
        self.present_ = self.present_ | (np.bincount(y, minlength=k_classes) > 0)
        Z = (X - self.mean_) / self.scale_
        n = len(y)
        onehot = np.eye(k_classes)[y]
        steps = 0
        for _ in range(epochs):
            order = rng.permutation(n)
            total = 0.0
            for s in range(0, n, self.batch_size):
                if self.max_steps is not None and steps >= self.max_steps:
                    break
                idx = order[s:s + self.batch_size]
                acts = self._forward(Z[idx])
                p = acts[-1]
                total += -np.log(np.maximum(p[np.arange(len(idx)), y[idx]], 1e-300)).sum()
                delta = (p - onehot[idx]) / len(idx)
                for layer in range(len(self.weights_) - 1, -1, -1):
                    gW = acts[layer].T @ delta
                    gb = delta.sum(axis=0)
                    if layer:
                        delta = (delta @ self.weights_[layer].T) * (acts[layer] > 0)
                    self.weights_[layer] -= self.lr * gW
                    self.biases_[layer] -= self.lr * gb
                steps += 1
            else:
                self.loss_history_.append(total / n)
                continue
            break
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_
        return _mask_absent(self._forward(Z)[-1], self.present_)

    def get_params(self) -> dict:
        return {
            "hidden": list(self.hidden), "lr": self.lr, "epochs": self.epochs,
            "batch_size": self.batch_size, "max_steps": self.max_steps, "seed": self.seed,
            "k_classes": self.k_classes_, "mean": self.mean_.tolist(), "scale": self.scale_.tolist(),
            "present": self.present_.tolist(),
            "weights": [W.tolist() for W in self.weights_], "biases": [b.tolist() for b in self.biases_],
        }

    @classmethod
    def from_params(cls, p: dict) -> "MLP":
        m = cls(tuple(p["hidden"]), p["lr"], p["epochs"], p["batch_size"], p["max_steps"], p["seed"])
        m.k_classes_ = p["k_classes"]
        m.mean_ = np.asarray(p["mean"], dtype=np.float64)
        m.scale_ = np.asarray(p["scale"], dtype=np.float64)
        m.present_ = np.asarray(p["present"], dtype=bool)
        m.weights_ = [np.asarray(W, dtype=np.float64) for W in p["weights"]]
        m.biases_ = [np.asarray(b, dtype=np.float64) for b in p["biases"]]
        m.loss_history_ = []
        return m


_ESTIMATORS = {cls.kind: cls for cls in (KNearestNeighbors, NearestCentroid, MLP)}


@dataclass
class ModelState:
    kind: str
    estimator: Any
    n_features: int
    k_classes: int
    init_seed: int = 0
    last_test_accuracy: float | None = None
    confusion: np.ndarray | None = field(default=None, repr=False)

    @property
    def alpha(self) -> float:
        if self.last_test_accuracy is None:
            raise RuntimeError("model has not been evaluated yet")
        return self.last_test_accuracy

    def to_json(self) -> str:
        return json.dumps({
            "format": "radlearn-model", "version": FORMAT_VERSION, "kind": self.kind,
            "n_features": self.n_features, "k_classes": self.k_classes, "init_seed": self.init_seed,
            "last_test_accuracy": self.last_test_accuracy, "params": self.estimator.get_params(),
        })

    @classmethod
    def from_json(cls, text: str) -> "ModelState":
        blob = json.loads(text)
        if blob.get("format") != "radlearn-model" or blob.get("version") != FORMAT_VERSION:
            raise ValueError("unsupported model blob")
        est = _ESTIMATORS[blob["kind"]].from_params(blob["params"])
        return cls(blob["kind"], est, blob["n_features"], blob["k_classes"], blob["init_seed"],
                   blob["last_test_accuracy"])


def make_estimator(kind: str, hyperparams: dict | None = None, seed: int = 0):
    hyperparams = dict(hyperparams or {})
    if kind not in _ESTIMATORS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    if kind == "mlp":
        if "hidden" in hyperparams:
            hyperparams["hidden"] = tuple(hyperparams["hidden"])
        return MLP(seed=seed, **hyperparams)
    return _ESTIMATORS[kind](**hyperparams)


def fit(kind: str, data: Dataset, hyperparams: dict | None = None, seed: int = 0) -> ModelState:
    """Fit a fresh model of ``kind`` on the given labels of ``data``."""
    if len(data) == 0:
        raise EmptyTrainingSet("empty training set")
    est = make_estimator(kind, hyperparams, seed)
    est.fit(data.features, data.given, data.k_classes)
    return ModelState(kind, est, data.n_features, data.k_classes, seed)


def refine(model: ModelState, data: Dataset, epochs: int) -> ModelState:
    """Continue training a copy of an MLP on ``data`` for ``epochs`` epochs."""
    if model.kind != "mlp":
        raise ValueError("only mlp models can be refined in place")
    if len(data) == 0:
        raise EmptyTrainingSet("empty training set")
    est = MLP.from_params(model.estimator.get_params())
    est.fit(data.features, data.given, data.k_classes, warm_start=True, epochs=epochs)
    return ModelState(model.kind, est, model.n_features, model.k_classes, model.init_seed)


def predict_proba(model: ModelState, X) -> np.ndarray:
    X = X.features if isinstance(X, Dataset) else np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got shape {X.shape}")
    return model.estimator.predict_proba(X)


def confusion_matrix(true: np.ndarray, pred: np.ndarray, k: int) -> np.ndarray:
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (np.asarray(true), np.asarray(pred)), 1)
    return cm


def evaluate(model: ModelState, test: Dataset, probs: np.ndarray | None = None) -> float:
    """Accuracy of ``model`` against true labels; stored as ``last_test_accuracy``.

    ``probs`` may carry already computed predictions for ``test``.
    """
    if len(test) == 0:
        raise ValueError("empty test set")
    if probs is None:
        probs = predict_proba(model, test)
    pred = argmax_lowest(probs)
    model.confusion = confusion_matrix(test.true, pred, model.k_classes)
    model.last_test_accuracy = float(np.mean(pred == test.true))
    return model.last_test_accuracy
