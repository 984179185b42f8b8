"""Training-data selection schemes for a newly arrived batch.

Each scheme splits the batch into disjoint parts: ``cleansed`` (given label
accepted by the label-quality model), ``rescued`` (accepted by the classifier,
possibly with a rewritten label), ``inactive`` (banked for later re-evaluation),
``oracle_corrected`` (relabelled by the expert) and ``discarded``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datastream import Dataset
from .models import ModelState, predict_proba
from .oracle import Oracle

SCHEMES = ("basic", "voting", "active", "active_limited", "slim", "slim_limited")

# clamp before taking the log of a zero probability
LOSS_FLOOR = 1e-12


@dataclass
class SelectionOutcome:
    cleansed: Dataset
    rescued: Dataset
    inactive: Dataset
    oracle_corrected: Dataset
    discarded: Dataset
    queries_used: int = 0
    # instances of earlier batches promoted out of the inactive list
    promoted: dict[int, tuple[Dataset, Dataset]] = field(default_factory=dict)

    @property
    def parts(self) -> tuple[Dataset, ...]:
        return self.cleansed, self.rescued, self.inactive, self.oracle_corrected, self.discarded

    def admitted(self) -> Dataset:
        """Everything that goes into training, including promoted inactive data."""
        extra = [d for pair in self.promoted.values() for d in pair]
        return Dataset.concat([self.cleansed, self.rescued, self.oracle_corrected, *extra])


class InactiveList:
    """Banked inactive instances keyed by the index of the batch they came from."""

    def __init__(self):
        self.entries: dict[int, Dataset] = {}

    def __len__(self) -> int:
        return sum(len(d) for d in self.entries.values())

    def add(self, batch_index: int, data: Dataset) -> None:
        if len(data) == 0:
            return
        if batch_index in self.entries:
            data = Dataset.concat([self.entries[batch_index], data])
        self.entries[batch_index] = data

    def replace(self, batch_index: int, data: Dataset) -> None:
        if len(data):
            self.entries[batch_index] = data
        else:
            self.entries.pop(batch_index, None)

    def largest(self, r: int, exclude: int | None = None) -> list[int]:
        """Indices of the ``r`` biggest entries; equal sizes go to the older batch."""
        keys = [h for h in self.entries if h != exclude]
        keys.sort(key=lambda h: (-len(self.entries[h]), h))
        return keys[:r]


def _empty_like(batch: Dataset) -> Dataset:
    return Dataset.empty(batch.n_features, batch.k_classes)


def _vote(data: Dataset, model_L: ModelState, model_C: ModelState):
    """Two-model vote shared by fresh batches and inactive re-runs.

    Returns ``(cleansed, rescued, leftover)``.
    """
    pred_L = np.argmax(predict_proba(model_L, data), axis=1)
    agree = data.given == pred_L
    U = np.flatnonzero(~agree)
    if len(U) == 0:
        return data, _empty_like(data), _empty_like(data)
    pred_C = np.argmax(predict_proba(model_C, data.subset(U)), axis=1)
    keep = pred_C == data.given[U]
    relabel = ~keep & (pred_C == pred_L[U])
    given = data.given.copy()
    given[U[relabel]] = pred_C[relabel]
    relabelled = data.with_given(given)
    return (data.subset(np.flatnonzero(agree)),
            relabelled.subset(U[keep | relabel]),
            data.subset(U[~(keep | relabel)]))


def select_basic(batch: Dataset, model_L: ModelState) -> SelectionOutcome:
    pred_L = np.argmax(predict_proba(model_L, batch), axis=1)
    agree = batch.given == pred_L
    empty = _empty_like(batch)
    return SelectionOutcome(batch.subset(np.flatnonzero(agree)), empty, empty, empty,
                            batch.subset(np.flatnonzero(~agree)))


def select_voting(batch: Dataset, model_L: ModelState, model_C: ModelState, inactive: InactiveList,
                  r: int = 2, batch_index: int | None = None) -> SelectionOutcome:
    """Vote on a new batch, bank what neither model rescues, then re-run old inactive data.

    Only entries from earlier batches are re-run: the new batch's leftovers
    were just judged by the same models and would not change.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    if batch_index is None:
        batch_index = max(inactive.entries, default=0) + 1
    cleansed, rescued, leftover = _vote(batch, model_L, model_C)
    inactive.add(batch_index, leftover)
    out = SelectionOutcome(cleansed, rescued, leftover, _empty_like(batch), _empty_like(batch))
    for h in inactive.largest(r, exclude=batch_index):
        c, u, rest = _vote(inactive.entries[h], model_L, model_C)
        inactive.replace(h, rest)
        if len(c) or len(u):
            out.promoted[h] = (c, u)
    return out


def rank_uncertainty(probs_L: np.ndarray, probs_C: np.ndarray, n_lim: int) -> np.ndarray:
    """Pick up to ``n_lim`` candidates alternating two uncertainty rankings.

    One ranking orders by Euclidean distance between the two probability
    vectors (largest first), the other by the summed population standard
    deviations of the vectors (smallest, i.e. flattest, first). Equal keys
    keep candidate order.
    """
    probs_L = np.asarray(probs_L, dtype=np.float64)
    probs_C = np.asarray(probs_C, dtype=np.float64)
    n = len(probs_L)
    want = min(max(n_lim, 0), n)
    by_distance = np.argsort(-np.linalg.norm(probs_L - probs_C, axis=1), kind="stable")
    by_std = np.argsort(probs_L.std(axis=1) + probs_C.std(axis=1), kind="stable")
    chosen: list[int] = []
    taken = np.zeros(n, dtype=bool)
    heads = [0, 0]
    lists = (by_distance, by_std)
    turn = 0
    while len(chosen) < want:
        order = lists[turn]
        while taken[order[heads[turn]]]:
            heads[turn] += 1
        j = int(order[heads[turn]])
        taken[j] = True
        chosen.append(j)
        turn ^= 1
    return np.asarray(chosen, dtype=np.int64)


def rank_by_loss(probs_C: np.ndarray, given: np.ndarray, n_lim: int) -> np.ndarray:
    """Top ``n_lim`` candidates by cross-entropy of the given label, largest first.

    Exact zero probabilities rank ahead of everything, in candidate order.
    """
    p = np.asarray(probs_C, dtype=np.float64)[np.arange(len(given)), given]
    loss = -np.log(np.maximum(p, LOSS_FLOOR))
    order = np.lexsort((np.arange(len(p)), -loss, p != 0))
    return order[:max(n_lim, 0)]


def _budget(limit: int | None, oracle: Oracle) -> int | None:
    caps = [c for c in (limit, oracle.remaining) if c is not None]
    return max(min(caps), 0) if caps else None


def _consult(S: Dataset, ranked: np.ndarray | None, oracle: Oracle):
    """Query the oracle for ``S[ranked]`` (all of ``S`` when None); the rest is discarded."""
    if ranked is None:
        ranked = np.arange(len(S))
    corrected, refused = oracle.query(S.subset(ranked))
    rest = np.setdiff1d(np.arange(len(S)), ranked)
    discarded = Dataset.concat([refused, S.subset(rest)])
    return corrected, discarded


def select_active(batch: Dataset, model_L: ModelState, model_C: ModelState, oracle: Oracle,
                  limit: int | None = None) -> SelectionOutcome:
    probs_L = predict_proba(model_L, batch)
    pred_L = np.argmax(probs_L, axis=1)
    agree = batch.given == pred_L
    U = np.flatnonzero(~agree)
    probs_C = predict_proba(model_C, batch.subset(U)) if len(U) else np.zeros((0, batch.k_classes))
    keep = np.argmax(probs_C, axis=1) == batch.given[U]
    S_idx = U[~keep]
    S = batch.subset(S_idx)
    cap = _budget(limit, oracle)
    ranked = None
    if cap is not None and len(S) > cap:
        ranked = rank_uncertainty(probs_L[S_idx], probs_C[~keep], cap)
    corrected, discarded = _consult(S, ranked, oracle)
    return SelectionOutcome(batch.subset(np.flatnonzero(agree)), batch.subset(U[keep]),
                            _empty_like(batch), corrected, discarded, queries_used=len(corrected))


def select_slim(batch: Dataset, model_C: ModelState, oracle: Oracle,
                limit: int | None = None) -> SelectionOutcome:
    probs_C = predict_proba(model_C, batch)
    match = np.argmax(probs_C, axis=1) == batch.given
    M = np.flatnonzero(~match)
    S = batch.subset(M)
    cap = _budget(limit, oracle)
    ranked = None if cap is None else rank_by_loss(probs_C[M], batch.given[M], cap)
    corrected, discarded = _consult(S, ranked, oracle)
    empty = _empty_like(batch)
    return SelectionOutcome(batch.subset(np.flatnonzero(match)), empty, empty, corrected, discarded,
                            queries_used=len(corrected))
