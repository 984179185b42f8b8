import csv

import numpy as np
import pytest

from radlearn.oracle import Oracle, preselect_random

from conftest import indexed_batch


def noisy_batch(n, k=4):
    true = np.arange(n) % k
    return indexed_batch((true + 1) % k, true, k)


def test_budget_answers_first_three_and_refuses_rest():
    batch = noisy_batch(5)
    oracle = Oracle(per_batch_limit=3)
    corrected, refused = oracle.query(batch)
    assert corrected.ids.tolist() == [100, 101, 102]
    assert refused.ids.tolist() == [103, 104]
    assert oracle.remaining == 0


def test_answers_are_true_labels():
    batch = noisy_batch(12)
    corrected, _ = Oracle().query(batch)
    assert np.array_equal(corrected.given, batch.true)


def test_unlimited_answers_everything():
    batch = noisy_batch(1000)
    oracle = Oracle()
    corrected, refused = oracle.query(batch)
    assert len(corrected) == 1000 and len(refused) == 0
    assert oracle.remaining is None


def test_budget_resets_each_batch_and_totals_add_up():
    oracle = Oracle(per_batch_limit=4)
    per_batch = []
    for i, n in enumerate([2, 7, 0, 5], start=1):
        oracle.new_batch(i)
        oracle.query(noisy_batch(n))
        per_batch.append(oracle.queries_this_batch)
    assert per_batch == [2, 4, 0, 4]
    assert oracle.total_queries == sum(per_batch) == len(oracle.transcript)


def test_negative_limit_rejected():
    with pytest.raises(ValueError):
        Oracle(per_batch_limit=-1)


def test_transcript_export(tmp_path):
    oracle = Oracle()
    oracle.new_batch(3)
    oracle.query(noisy_batch(2))
    oracle.export_transcript(tmp_path / "t.csv")
    rows = list(csv.reader((tmp_path / "t.csv").open()))
    assert rows == [["instance_id", "batch_index", "answer"], ["100", "3", "0"], ["101", "3", "1"]]


class TestPreselect:
    def test_saturation_and_zero(self):
        batch = noisy_batch(10)
        assert preselect_random(batch, 10, 0).tolist() == list(range(10))
        assert preselect_random(batch, 0, 0).tolist() == []

    def test_deterministic_and_seed_dependent(self):
        batch = noisy_batch(600)
        a = preselect_random(batch, 120, [1, 2, 3])
        assert np.array_equal(a, preselect_random(batch, 120, [1, 2, 3]))
        assert not np.array_equal(a, preselect_random(batch, 120, [1, 2, 4]))
        assert len(np.unique(a)) == 120

    def test_too_large(self):
        with pytest.raises(ValueError):
            preselect_random(noisy_batch(5), 6, 0)
