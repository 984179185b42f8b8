import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radlearn.ensemble import ensemble_predict

from conftest import random_probs
from oracles import ensemble_reference


def test_agreement_wins_regardless_of_weights():
    assert ensemble_predict([[0.1, 0.9]], [[0.4, 0.6]], 0.0, 1.0).tolist() == [1]
    assert ensemble_predict([[0.1, 0.9]], [[0.4, 0.6]], 1.0, 0.0).tolist() == [1]


def test_weighted_confidence_decides_disagreement():
    L = [[0.1, 0.2, 0.7]]
    C = [[0.6, 0.3, 0.1]]
    # 0.9 * 0.6 = 0.54 < 0.8 * 0.7 = 0.56
    assert ensemble_predict(L, C, alpha_L=0.8, alpha_C=0.9).tolist() == [2]
    assert ensemble_predict(L, C, alpha_L=0.7, alpha_C=0.9).tolist() == [0]


def test_exact_tie_goes_to_label_model():
    assert ensemble_predict([[0.5, 0.5, 0.0]], [[0.0, 0.5, 0.5]], 0.5, 0.5).tolist() == [0]


def test_matches_reference_on_random_pairs(rng):
    for _ in range(50):
        n, k = 20, int(rng.integers(2, 6))
        L, C = random_probs(rng, n, k), random_probs(rng, n, k)
        aL, aC = rng.random(2)
        assert ensemble_predict(L, C, aL, aC).tolist() == ensemble_reference(L, C, aL, aC)


def test_zero_label_weight_hands_disagreements_to_classifier(rng):
    L, C = random_probs(rng, 200, 4), random_probs(rng, 200, 4)
    out = ensemble_predict(L, C, 0.0, 0.7)
    np.testing.assert_array_equal(out, C.argmax(1))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(2, 5), st.floats(0, 1), st.floats(0, 1), st.integers(0, 10**6))
def test_output_is_one_of_the_argmaxes_and_equivariant(n, k, aL, aC, seed):
    rng = np.random.default_rng(seed)
    L, C = random_probs(rng, n, k), random_probs(rng, n, k)
    out = ensemble_predict(L, C, aL, aC)
    assert np.all((out == L.argmax(1)) | (out == C.argmax(1)))
    perm = rng.permutation(n)
    np.testing.assert_array_equal(ensemble_predict(L[perm], C[perm], aL, aC), out[perm])


def test_length_mismatch():
    with pytest.raises(ValueError):
        ensemble_predict([[0.5, 0.5]], [[0.5, 0.5], [1, 0]], 0.5, 0.5)


def test_weight_out_of_range():
    with pytest.raises(ValueError):
        ensemble_predict([[0.5, 0.5]], [[0.5, 0.5]], 1.5, 0.5)
