import numpy as np
import pytest

from radlearn.datastream import Dataset
from radlearn.models import ModelState

ACCEPTANCE_LINES: list[str] = []


class ScriptedProbs:
    """Estimator returning a fixed probability row per instance; feature 0 holds the row index."""

    kind = "scripted"

    def __init__(self, table):
        self.table = np.asarray(table, dtype=float)

    def predict_proba(self, X):
        return self.table[np.asarray(X)[:, 0].astype(int)]


def scripted_model(table) -> ModelState:
    table = np.asarray(table, dtype=float)
    return ModelState("scripted", ScriptedProbs(table), n_features=1, k_classes=table.shape[1])


def indexed_batch(given, true=None, k=None) -> Dataset:
    """Batch whose single feature is the row index, for use with :func:`scripted_model`."""
    given = np.asarray(given)
    true = given if true is None else np.asarray(true)
    k = k or int(max(given.max(), true.max())) + 1
    n = len(given)
    return Dataset(np.arange(n, dtype=float)[:, None], given, true, np.arange(100, 100 + n), k)


def random_probs(rng, n, k, sparse=False):
    p = rng.random((n, k))
    if sparse:
        p[rng.random((n, k)) < 0.3] = 0.0
        p[np.arange(n), rng.integers(0, k, n)] += 0.01
    return p / p.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
