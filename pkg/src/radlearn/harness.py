"""Experiment orchestration: selection schemes and baselines over one batch stream."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import models as M
from .datastream import BatchStream, Dataset, CsvSchema, load_csv, make_synthetic, stream_batches
from .ensemble import ensemble_predict
from .metrics import compute_hot_metrics, f1_macro
from .oracle import Oracle, preselect_random
from .selection import (SCHEMES, InactiveList, select_active, select_basic, select_slim,
                        select_voting)

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
BASELINES = ("no_sel", "opt_sel", "full_clean", "ids", "preselect_oracle")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: dict = field(default_factory=dict)


DEFAULT_LABEL_MODEL = ModelSpec("mlp", {"hidden": [28, 28], "lr": 0.01, "epochs": 100, "batch_size": 32})
DEFAULT_CLASSIFIER = ModelSpec("knn", {"k": 5})


@dataclass
class ExperimentConfig:
    dataset: dict
    d0_size: int
    batch_size: int
    test_size: int
    noise_level: float = 0.3
    scheme: str | None = "basic"
    baselines: tuple[str, ...] = ()
    label_model: ModelSpec = DEFAULT_LABEL_MODEL
    classifier: ModelSpec = DEFAULT_CLASSIFIER
    r: int = 2
    n_lim: float | int = 0.2
    seeds: tuple[int, ...] = (0, 1, 2)
    model_seed: int = 0
    slim_epochs: int = 60
    shuffle: bool = True
    output_dir: str = "results"

    def __post_init__(self):
        self.baselines = tuple(self.baselines)
        self.seeds = tuple(int(s) for s in self.seeds)
        if isinstance(self.label_model, dict):
            self.label_model = ModelSpec(**self.label_model)
        if isinstance(self.classifier, dict):
            self.classifier = ModelSpec(**self.classifier)
        self.validate()

    def validate(self) -> None:
        if self.scheme is not None and self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        bad = [b for b in self.baselines if b not in BASELINES]
        if bad:
            raise ConfigError(f"unknown baselines {bad}; expected a subset of {BASELINES}")
        if self.scheme is None and not self.baselines:
            raise ConfigError("nothing to run: no scheme and no baselines")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if not 0.0 <= self.noise_level <= 1.0:
            raise ConfigError("noise_level must lie in [0, 1]")
        for spec in (self.label_model, self.classifier):
            if spec.kind not in M.KINDS:
                raise ConfigError(f"unknown model kind {spec.kind!r}")
        if self.r < 0:
            raise ConfigError("r must be non-negative")
        if isinstance(self.n_lim, float) and not 0.0 <= self.n_lim <= 1.0:
            raise ConfigError("fractional n_lim must lie in [0, 1]")
        if isinstance(self.n_lim, int) and not 0 <= self.n_lim <= self.batch_size:
            raise ConfigError("n_lim must lie in 0..batch_size")
        if min(self.d0_size, self.batch_size, self.test_size) < 1:
            raise ConfigError("d0_size, batch_size and test_size must be positive")
        if "csv" not in self.dataset and "synthetic" not in self.dataset:
            raise ConfigError("dataset needs a 'csv' or a 'synthetic' entry")

    @property
    def methods(self) -> tuple[str, ...]:
        return ((self.scheme,) if self.scheme else ()) + self.baselines

    def query_limit(self) -> int:
        if isinstance(self.n_lim, float):
            return math.floor(self.n_lim * self.batch_size)
        return int(self.n_lim)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["baselines"] = list(self.baselines)
        d["seeds"] = list(self.seeds)
        return {"version": CONFIG_VERSION, **d}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        version = d.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version}")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"{path}: {e}") from None


def benchmark_config(noise_level: float = 0.3, **overrides) -> ExperimentConfig:
    """Desk-scale synthetic benchmark: K=4, f=27, 30 batches of 600, three seeds.

    The label-quality MLP keeps the default architecture and learning rate but
    caps each from-scratch refit at 2000 SGD steps.
    """
    base = dict(
        dataset={"synthetic": {"k_classes": 4, "f": 27, "n": 22000, "cluster_spread": 0.35, "seed": 0}},
        d0_size=2000, batch_size=600, test_size=2000, noise_level=noise_level,
        scheme="basic", baselines=("no_sel", "full_clean"),
        label_model=ModelSpec("mlp", {**DEFAULT_LABEL_MODEL.params, "max_steps": 2000}),
        classifier=DEFAULT_CLASSIFIER, r=2, n_lim=0.2, seeds=(0, 1, 2),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@dataclass
class MetricsRecord:
    batch_index: int
    accuracy: float
    accuracy_L: float | None
    accuracy_C: float | None
    f1_macro: float
    hot_A: float
    hot_truth_AT: float | None
    queries_used: int
    cumulative_training_size: int
    # per-batch selection transcript, enough to recompute the Hot ratios
    n_admitted: int = 0
    n_admitted_clean: int = 0


RECORD_FIELDS = tuple(f.name for f in fields(MetricsRecord))


def load_dataset(config: ExperimentConfig) -> Dataset:
    src = config.dataset
    if "csv" in src:
        schema = CsvSchema(label=src.get("label", "label"),
                           features=tuple(src["features"]) if src.get("features") else None,
                           true_label=src.get("true_label"), id=src.get("id"),
                           classes=tuple(src["classes"]) if src.get("classes") else None)
        return load_csv(src["csv"], schema)
    p = src["synthetic"]
    return make_synthetic(p["k_classes"], p["f"], p["n"], p["cluster_spread"], p.get("seed", 0))


def build_stream(dataset: Dataset, config: ExperimentConfig, seed: int) -> BatchStream:
    return stream_batches(dataset, config.d0_size, config.batch_size, config.test_size,
                          config.noise_level, seed, shuffle=config.shuffle)


class _Learner:
    """Model pair, accuracy weights and bookkeeping for one method on one stream."""

    def __init__(self, config: ExperimentConfig, stream: BatchStream, *, use_L: bool = True,
                 predict_with: str = "ensemble"):
        self.config = config
        self.stream = stream
        self.use_L = use_L
        self.predict_with = predict_with
        self.pool = [stream.d0]
        self.model_L = self._fit(config.label_model, stream.d0) if use_L else None
        self.model_C = self._fit(config.classifier, stream.d0)
        self._cache = None
        if self.model_C.kind == "knn":
            # test-set neighbours are carried over as the pool grows
            self._cache = M.NeighbourCache(stream.test_set.features, self.model_C.estimator.k, stream.k_classes)
            self._cache.extend(stream.d0.features, stream.d0.given)
        self.test_probs()
        self.cleansed, self.rescued, self.corrected, self.clean, self.received = [], [], [], [], []

    def _fit(self, spec: ModelSpec, data: Dataset) -> M.ModelState:
        return M.fit(spec.kind, data, spec.params, self.config.model_seed)

    def test_probs(self):
        """Probabilities of both models on the test set; updates their accuracies."""
        test = self.stream.test_set
        pC = self._cache.predict_proba() if self._cache else M.predict_proba(self.model_C, test)
        M.evaluate(self.model_C, test, probs=pC)
        self.alpha_C = self.model_C.alpha
        pL = self.alpha_L = None
        if self.model_L is not None:
            pL = M.predict_proba(self.model_L, test)
            self.alpha_L = M.evaluate(self.model_L, test, probs=pL)
        return pL, pC

    def retrain(self, admitted: Dataset, *, refit_L: bool = True) -> None:
        if len(admitted) == 0:
            logger.debug("nothing admitted, keeping previous models")
            return
        self.pool.append(admitted)
        data = Dataset.concat(self.pool)
        if refit_L and self.use_L:
            self.model_L = self._fit(self.config.label_model, data)
        self.model_C = self._fit(self.config.classifier, data)
        if self._cache:
            self._cache.extend(admitted.features, admitted.given)

    def refine(self, admitted: Dataset) -> None:
        """Warm-started per-batch update used by the slim scheme."""
        self.pool = [admitted]
        if len(admitted) == 0:
            return
        if self.model_C.kind == "mlp":
            self.model_C = M.refine(self.model_C, admitted, self.config.slim_epochs)
        else:
            self.model_C = self._fit(self.config.classifier, admitted)
            if self._cache:
                self._cache = M.NeighbourCache(self.stream.test_set.features, self._cache.k,
                                               self._cache.k_classes)
                self._cache.extend(admitted.features, admitted.given)

    def record(self, batch_index: int, batch_size: int, n_cleansed: int, n_rescued: int,
               n_corrected: int, n_clean: int, queries: int) -> MetricsRecord:
        self.cleansed.append(n_cleansed)
        self.rescued.append(n_rescued)
        self.corrected.append(n_corrected)
        self.clean.append(n_clean)
        self.received.append(batch_size)
        prev_L, prev_C = self.alpha_L, self.alpha_C
        pL, pC = self.test_probs()
        if self.predict_with == "ensemble":
            pred = ensemble_predict(pL, pC, prev_L, prev_C)
        else:
            pred = np.argmax(pC, axis=1)
        test = self.stream.test_set
        cm = M.confusion_matrix(test.true, pred, test.k_classes)
        A, AT = compute_hot_metrics(self.cleansed, self.rescued, self.clean, self.received, self.corrected)
        return MetricsRecord(
            batch_index=batch_index,
            accuracy=float(np.trace(cm) / cm.sum()),
            accuracy_L=self.alpha_L,
            accuracy_C=self.alpha_C,
            f1_macro=f1_macro(cm),
            hot_A=A,
            hot_truth_AT=AT,
            queries_used=queries,
            cumulative_training_size=sum(len(p) for p in self.pool),
            n_admitted=n_cleansed + n_rescued + n_corrected,
            n_admitted_clean=n_clean,
        )


def _run_scheme(scheme: str, stream: BatchStream, config: ExperimentConfig) -> list[MetricsRecord]:
    slim = scheme.startswith("slim")
    learner = _Learner(config, stream, use_L=not slim, predict_with="classifier" if slim else "ensemble")
    limited = scheme.endswith("_limited")
    oracle = Oracle(config.query_limit() if limited else None)
    inactive = InactiveList()
    records = []
    for i, batch in enumerate(stream.batches, start=1):
        oracle.new_batch(i)
        if scheme == "basic":
            out = select_basic(batch, learner.model_L)
        elif scheme == "voting":
            out = select_voting(batch, learner.model_L, learner.model_C, inactive, config.r, batch_index=i)
        elif scheme.startswith("active"):
            out = select_active(batch, learner.model_L, learner.model_C, oracle)
        else:
            out = select_slim(batch, learner.model_C, oracle)
        admitted = out.admitted()
        if slim:
            learner.refine(admitted)
        else:
            learner.retrain(admitted)
        promoted_c = sum(len(c) for c, _ in out.promoted.values())
        promoted_u = sum(len(u) for _, u in out.promoted.values())
        records.append(learner.record(
            i, len(batch), len(out.cleansed) + promoted_c, len(out.rescued) + promoted_u,
            len(out.oracle_corrected), admitted.n_clean, out.queries_used))
    return records


def run_baseline(kind: str, stream: BatchStream, config: ExperimentConfig, seed: int = 0) -> list[MetricsRecord]:
    """Metric series of a reference method on ``stream``."""
    if kind not in BASELINES:
        raise ConfigError(f"unknown baseline {kind!r}")
    learner = _Learner(config, stream, predict_with="classifier" if kind == "ids" else "ensemble")
    frozen_L = learner.model_L
    n_lim = config.query_limit()
    oracle = Oracle(n_lim)
    records = []
    for i, batch in enumerate(stream.batches, start=1):
        oracle.new_batch(i)
        queries = 0
        if kind == "no_sel":
            admitted = batch
        elif kind == "opt_sel":
            admitted = batch.subset(np.flatnonzero(batch.given == batch.true))
        elif kind == "full_clean":
            admitted = batch.restored()
        elif kind == "ids":
            admitted = select_basic(batch, frozen_L).cleansed
        else:
            picked = preselect_random(batch, n_lim, [seed, 2, i])
            corrected, _ = oracle.query(batch.subset(picked))
            rest = batch.subset(np.setdiff1d(np.arange(len(batch)), picked))
            admitted = Dataset.concat([corrected, rest])
            queries = len(corrected)
        learner.retrain(admitted, refit_L=kind != "ids")
        records.append(learner.record(i, len(batch), len(admitted), 0, 0, admitted.n_clean, queries))
    return records


def run_method(method: str, stream: BatchStream, config: ExperimentConfig, seed: int = 0) -> list[MetricsRecord]:
    if method in SCHEMES:
        return _run_scheme(method, stream, config)
    return run_baseline(method, stream, config, seed)


Results = dict[str, dict[int, list[MetricsRecord]]]


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None) -> Results:
    """Run the scheme and every baseline for each seed on a shared noisy stream."""
    if dataset is None:
        dataset = load_dataset(config)
    results: Results = {m: {} for m in config.methods}
    for seed in config.seeds:
        stream = build_stream(dataset, config, seed)
        for method in config.methods:
            logger.info("seed %d: running %s", seed, method)
            results[method][seed] = run_method(method, stream, config, seed)
    return results


def run_sweep(config: ExperimentConfig, noise_levels, dataset: Dataset | None = None) -> dict[float, Results]:
    if dataset is None:
        dataset = load_dataset(config)
    out = {}
    for noise in noise_levels:
        cfg = ExperimentConfig.from_dict({**config.to_dict(), "noise_level": float(noise)})
        out[float(noise)] = run_experiment(cfg, dataset)
    return out


def final_values(results: Results, method: str, metric: str = "accuracy") -> np.ndarray:
    return np.array([getattr(series[-1], metric) for series in results[method].values()], dtype=float)


def summarize(results: Results) -> dict[str, Any]:
    """Mean and standard deviation across seeds of every final metric."""
    summary: dict[str, Any] = {}
    for method, per_seed in results.items():
        finals = {}
        for name in RECORD_FIELDS[1:]:
            vals = [getattr(s[-1], name) for s in per_seed.values() if s]
            vals = [v for v in vals if v is not None]
            if vals:
                finals[name] = {"mean": float(np.mean(vals)), "std": float(np.std(vals)),
                                "min": float(np.min(vals)), "max": float(np.max(vals))}
        summary[method] = {"runs": len(per_seed), "n_batches": len(next(iter(per_seed.values()), [])),
                           "final": finals}
    return summary
