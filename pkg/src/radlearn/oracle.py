"""Simulated expert that answers true-label queries under a per-batch budget."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datastream import Dataset

logger = logging.getLogger(__name__)


@dataclass
class Oracle:
    per_batch_limit: int | None = None
    queries_this_batch: int = 0
    total_queries: int = 0
    batch_index: int = 0
    transcript: list[tuple[int, int, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.per_batch_limit is not None and self.per_batch_limit < 0:
            raise ValueError("per_batch_limit must be non-negative")

    @property
    def remaining(self) -> int | None:
        if self.per_batch_limit is None:
            return None
        return self.per_batch_limit - self.queries_this_batch

    def new_batch(self, batch_index: int) -> None:
        self.batch_index = batch_index
        self.queries_this_batch = 0

    def query(self, instances: Dataset) -> tuple[Dataset, Dataset]:
        """Answer queries in the order given until the budget runs out.

        Returns ``(corrected, refused)``; corrected instances carry their true
        label as given label.
        """
        n = len(instances)
        n_answer = n if self.remaining is None else min(n, self.remaining)
        answered = instances.subset(np.arange(n_answer)).restored()
        refused = instances.subset(np.arange(n_answer, n))
        if len(refused):
            logger.debug("oracle budget exhausted, %d queries refused", len(refused))
        self.queries_this_batch += n_answer
        self.total_queries += n_answer
        self.transcript.extend((int(i), self.batch_index, int(y)) for i, y in zip(answered.ids, answered.given))
        return answered, refused

    def export_transcript(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["instance_id", "batch_index", "answer"])
            w.writerows(self.transcript)


def preselect_random(batch: Dataset, n_lim: int, seed) -> np.ndarray:
    """Indices of a uniform random subset of size ``n_lim``, in ascending order."""
    if n_lim < 0 or n_lim > len(batch):
        raise ValueError(f"n_lim {n_lim} outside 0..{len(batch)}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(len(batch), size=n_lim, replace=False))
