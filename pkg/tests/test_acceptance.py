"""Acceptance checks on the desk-scale synthetic benchmark.

Each test appends one PASS/FAIL line that the terminal summary prints at the end.
Benchmark runs are cached per (noise, method, seed) so the sweep reuses them.
"""
import time
from functools import lru_cache

import numpy as np
import pytest
from scipy import stats

from radlearn.datastream import Dataset, inject_ncar_noise, make_synthetic
from radlearn.ensemble import ensemble_predict
from radlearn.harness import benchmark_config, build_stream, load_dataset, run_experiment, run_method
from radlearn.metrics import compute_hot_metrics
from radlearn.oracle import Oracle
from radlearn.outputs import emit_outputs
from radlearn.selection import InactiveList, rank_uncertainty, select_basic, select_slim, select_voting

from conftest import ACCEPTANCE_LINES, indexed_batch, random_probs, scripted_model
from oracles import basic_reference, ensemble_reference, hot_reference, loss_reference, uncertainty_reference

pytestmark = pytest.mark.slow

NOISES = (0.3, 0.4)
SEEDS = (0, 1, 2)
SWEEP = tuple(round(0.1 * i, 1) for i in range(10))
POINT = 0.01


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def dataset():
    return load_dataset(benchmark_config())


@lru_cache(maxsize=None)
def stream(noise, seed):
    return build_stream(dataset(), benchmark_config(noise), seed)


@lru_cache(maxsize=None)
def run(noise, method, seed):
    return run_method(method, stream(noise, seed), benchmark_config(noise), seed)


def final(noise, method, metric="accuracy"):
    return np.array([getattr(run(noise, method, s)[-1], metric) for s in SEEDS])


def mean_final(noise, method, metric="accuracy"):
    return float(final(noise, method, metric).mean())


@pytest.mark.parametrize("noise", NOISES)
def test_ordering(noise):
    start = time.perf_counter()
    order = ["full_clean", "active", "voting", "basic", "no_sel"]
    means = {m: mean_final(noise, m) for m in order}
    elapsed = time.perf_counter() - start
    ok = all(means[a] >= means[b] - POINT for a, b in zip(order, order[1:]))
    gap = means["full_clean"] - means["no_sel"]
    ok = ok and gap >= 5 * POINT and elapsed < 600
    detail = " >= ".join(f"{m} {means[m]:.4f}" for m in order)
    report(f"ordering @ noise {noise}", ok, f"{detail}; gap {100 * gap:.2f} pts; {elapsed:.0f}s")


@pytest.mark.parametrize("noise", NOISES)
def test_active_close_to_full_clean(noise):
    al, fc = mean_final(noise, "active"), mean_final(noise, "full_clean")
    report(f"active within 2 pts of full_clean @ noise {noise}", abs(fc - al) <= 2 * POINT,
           f"active {al:.4f}, full_clean {fc:.4f}")


@pytest.mark.parametrize("noise", NOISES)
def test_limited_active_beats_preselect(noise):
    limit = benchmark_config(noise).query_limit()
    al, pso = mean_final(noise, "active_limited"), mean_final(noise, "preselect_oracle")
    max_q = max(r.queries_used for m in ("active_limited", "preselect_oracle") for s in SEEDS
                for r in run(noise, m, s))
    ok = al - pso >= 2 * POINT and max_q <= limit
    report(f"limited active beats preselect @ noise {noise}", ok,
           f"active_limited {al:.4f}, preselect {pso:.4f}, max queries/batch {max_q} <= {limit}")


def test_noise_sweep():
    curves = {m: [mean_final(n, m) for n in SWEEP] for m in ("basic", "no_sel")}
    drop_basic = curves["basic"][0] - curves["basic"][-1]
    drop_nosel = curves["no_sel"][0] - curves["no_sel"][-1]
    ok = drop_basic <= 15 * POINT and drop_nosel >= 25 * POINT
    report("noise sweep 0..0.9", ok,
           f"basic drop {100 * drop_basic:.2f} pts (<= 15), no_sel drop {100 * drop_nosel:.2f} pts (>= 25)")


def test_full_noise_below_chance():
    accs = final(1.0, "no_sel", "accuracy_C")
    k = benchmark_config().dataset["synthetic"]["k_classes"]
    report("no_sel k-NN at noise 1.0 below 1/K", bool(np.all(accs < 1 / k)),
           f"accuracy_C per seed {np.round(accs, 4).tolist()} < {1 / k}")


def toy_batch(rows, given, true):
    return Dataset(np.asarray(rows, float)[:, None], np.asarray(given), np.asarray(true),
                   1000 + np.asarray(rows), 3)


def test_scripted_toy_hot_values():
    # global row index -> scripted probabilities, a fresh table per batch
    def model(preds):
        table = np.full((9, 3), 1 / 3)
        for row, c in preds.items():
            table[row] = 0.1
            table[row, c] = 0.8
        return scripted_model(table)

    batches = [toy_batch([0, 1, 2, 3], [0, 1, 2, 0], [0, 1, 1, 2]),
               toy_batch([4, 5, 6], [1, 2, 0], [1, 2, 0]),
               toy_batch([7, 8], [2, 2], [2, 0])]
    label_preds = [{0: 0, 1: 1, 2: 1, 3: 1}, {4: 1, 5: 0, 6: 1}, {7: 2, 8: 0, 5: 2, 6: 1}]
    clf_preds = [{0: 0, 1: 2, 2: 1, 3: 0}, {4: 1, 5: 1, 6: 2}, {7: 0, 8: 0, 5: 1, 6: 1}]
    inactive = InactiveList()
    d_star, u_star, clean, sizes, got = [], [], [], [], []
    for i, (batch, pl, pc) in enumerate(zip(batches, label_preds, clf_preds), start=1):
        out = select_voting(batch, model(pl), model(pc), inactive, r=2, batch_index=i)
        d_star.append(len(out.cleansed) + sum(len(c) for c, _ in out.promoted.values()))
        u_star.append(len(out.rescued) + sum(len(u) for _, u in out.promoted.values()))
        clean.append(out.admitted().n_clean)
        sizes.append(len(batch))
        got.append(compute_hot_metrics(d_star, u_star, clean, sizes))
    # hand trace: batch 1 admits all four (one rescued label still wrong),
    # batch 2 admits one and banks two, batch 3 admits both plus the two banked
    expected = [(4 / 4, 3 / 4), (5 / 7, 4 / 5), (9 / 9, 7 / 9)]
    ok = got == expected and (d_star, u_star, clean) == ([2, 1, 2], [2, 0, 2], [3, 1, 3])
    report("scripted 3-batch hot values", ok, f"got {got}")


@pytest.mark.parametrize("noise", NOISES)
def test_voting_uses_more_data(noise):
    A_v, A_b = mean_final(noise, "voting", "hot_A"), mean_final(noise, "basic", "hot_A")
    AT_v, AT_b = mean_final(noise, "voting", "hot_truth_AT"), mean_final(noise, "basic", "hot_truth_AT")
    ok = A_v > A_b and abs(AT_v - AT_b) <= 0.15
    report(f"voting hot vs basic @ noise {noise}", ok,
           f"A {A_v:.4f} > {A_b:.4f}; A^T {AT_v:.4f} vs {AT_b:.4f}")


def test_oracle_equivalence_suites():
    rng = np.random.default_rng(2024)
    cases = 1000
    mismatches = dict.fromkeys(["ensemble", "basic", "rank_uncertainty", "slim_ranking", "hot"], 0)
    for _ in range(cases):
        n, k = int(rng.integers(1, 12)), int(rng.integers(2, 6))
        pL, pC = random_probs(rng, n, k), random_probs(rng, n, k, sparse=True)
        given = rng.integers(0, k, n)
        aL, aC = rng.random(2)
        if ensemble_predict(pL, pC, aL, aC).tolist() != ensemble_reference(pL.tolist(), pC.tolist(), aL, aC):
            mismatches["ensemble"] += 1
        batch = indexed_batch(given, (given + 1) % k, k)
        cleansed = select_basic(batch, scripted_model(pL)).cleansed.ids - 100
        if sorted(cleansed.tolist()) != basic_reference(given.tolist(), pL.tolist()):
            mismatches["basic"] += 1
        m = int(rng.integers(0, n + 2))
        if rank_uncertainty(pL, pC, m).tolist() != uncertainty_reference(pL.tolist(), pC.tolist(), m):
            mismatches["rank_uncertainty"] += 1
        out = select_slim(batch, scripted_model(pC), Oracle(), limit=m)
        mism = np.flatnonzero(pC.argmax(1) != given)
        ranked = loss_reference(pC[mism].tolist(), given[mism].tolist(), m)
        if sorted((out.oracle_corrected.ids - 100).tolist()) != sorted(mism[ranked].tolist()):
            mismatches["slim_ranking"] += 1
        d = rng.integers(1, 50, int(rng.integers(1, 8)))
        ds = rng.integers(0, d + 1)
        us = rng.integers(0, d - ds + 1)
        c = rng.integers(0, ds + us + 1)
        got = compute_hot_metrics(ds, us, c, d)
        ref = hot_reference(list(zip(ds.tolist(), us.tolist(), c.tolist(), d.tolist())))
        if got[0] != pytest.approx(ref[0]) or (got[1] is None) != (ref[1] is None) or \
                (ref[1] is not None and got[1] != pytest.approx(ref[1])):
            mismatches["hot"] += 1
    report("oracle equivalence suites", not any(mismatches.values()),
           f"{cases} cases each, mismatches {mismatches}")


@pytest.mark.parametrize("noise", NOISES)
def test_ncar_statistics(noise):
    n, k = 10_000, 4
    noisy = inject_ncar_noise(make_synthetic(k, 2, n, 0.3, 0), noise, 7)
    flipped = noisy.noisy_mask
    sigma = np.sqrt(n * noise * (1 - noise))
    offsets = (noisy.given[flipped] - noisy.true[flipped]) % k
    p = stats.chisquare(np.bincount(offsets, minlength=k)[1:]).pvalue
    ok = abs(flipped.sum() - n * noise) <= 3 * sigma and p > 0.01
    report(f"NCAR statistics @ noise {noise}", ok,
           f"{flipped.sum()} flips vs {n * noise:.0f} +/- {3 * sigma:.0f}; chi-square p {p:.3f}")


def test_byte_identical_reruns(tmp_path):
    cfg = benchmark_config(0.3, seeds=(0,), baselines=("preselect_oracle",))
    for name in ("a", "b"):
        emit_outputs(run_experiment(cfg), tmp_path / name)
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    report("byte-identical reruns", bool(files) and same, f"{len(files)} CSV files compared")
