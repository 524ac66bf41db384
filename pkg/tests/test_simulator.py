from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from app.config import Params, Strategy
from app.data.models import EMPTY, MemoryState, to_bit_configuration
from app.matching.bruteforce import all_maximum_matchings
from app.matching.hypergraph import build_instance, matching_weights
from app.rates.analytic import run_analytic
from app.sim.ensemble import EnsembleStats, chunk_bounds, run_ensemble
from app.sim.protocol import age_increment, run_protocol, step_cutoff, step_measure, step_storage
from app.sim.rng import master_entropy, sample_rng


def _p(**kw) -> Params:
    base = dict(n_parties=3, mem_per_party=3, max_conn_len=1, transmittivity=0.3, total_rounds=12, samples=20)
    base.update(kw)
    return Params(**base)


# -------------------------
# Single steps
# -------------------------

def test_storage_fill_fraction():
    state = step_storage(MemoryState.empty(10, 10_000), 0.1, np.random.default_rng(1))
    filled = sum(len(state.filled(k)) for k in range(10))
    assert abs(filled / 100_000 - 0.1) < 0.003
    assert state.max_age() == 0


def test_storage_keeps_filled_memories(example_ages):
    assert step_storage(example_ages, 0.0, np.random.default_rng(0)) == example_ages
    full = step_storage(example_ages, 1.0, np.random.default_rng(0))
    for k in range(3):
        for j in range(4):
            before = example_ages.age(k, j)
            assert full.age(k, j) == (0 if before is EMPTY else before)


def test_measure_example_weighted(example_ages):
    p = _p(mem_per_party=4, max_conn_len=1, strategy=Strategy.S2)
    after, rec = step_measure(example_ages, p, np.random.default_rng(0), round_no=7)
    assert rec.round == 7
    assert (rec.num_measurements, rec.attempted) == (1, 1)
    assert rec.age_tuples == ((3, 2, 0),)
    cleared = [(k, j) for k in range(3) for j in range(4) if example_ages.age(k, j) is not EMPTY and after.age(k, j) is EMPTY]
    assert cleared == [(0, 2), (1, 1), (2, 2)]


def test_measure_without_hyperedges():
    state = MemoryState.from_lists([[0, EMPTY], [EMPTY, 1], [2, EMPTY]])
    after, rec = step_measure(state, _p(mem_per_party=2, max_conn_len=0), np.random.default_rng(0))
    assert after == state
    assert (rec.num_measurements, rec.age_tuples, rec.attempted) == (0, (), 0)


def test_failed_attempts_still_consume_memories():
    state = MemoryState.from_lists([[0, 1], [0, 1], [0, 1]])
    p = _p(mem_per_party=2, max_conn_len=0, p_ghz=0.5)
    rng = np.random.default_rng(11)
    trials = 20_000
    total = 0
    for _ in range(trials):
        after, rec = step_measure(state, p, rng)
        assert rec.attempted == 2
        assert after == MemoryState.empty(3, 2)
        total += rec.num_measurements
    assert abs(total / trials - 1.0) < 0.025


def test_cutoff_drops_old_qubits():
    state = MemoryState.from_lists([[0, 5, 11]])
    assert step_cutoff(state, 10).slots == ((0, 5, EMPTY),)
    assert step_cutoff(state, None) == state
    # a qubit exactly at the cutoff stays
    assert step_cutoff(MemoryState.from_lists([[10]]), 10).slots == ((10,),)


def test_age_increment_skips_empty():
    assert age_increment(MemoryState.from_lists([[0, EMPTY], [4, 1]])).slots == ((1, EMPTY), (5, 2))


# -------------------------
# Protocol runs
# -------------------------

def test_full_transmittivity_run():
    recs = run_protocol(_p(transmittivity=1.0, max_conn_len=1), sample_rng(1, 0))
    assert [r.num_measurements for r in recs] == [3] * 12
    assert all(t == (0, 0, 0) for r in recs for t in r.age_tuples)


def test_zero_transmittivity_run():
    recs = run_protocol(_p(transmittivity=0.0), sample_rng(1, 0))
    assert all(r.num_measurements == 0 for r in recs)


def test_cutoff_bounds_ages_over_long_run():
    p = _p(transmittivity=0.1, max_conn_len=0, total_rounds=200, cutoff=10)
    recs = run_protocol(p, sample_rng(3, 0), keep_snapshots=True)
    assert max((r.snapshot.max_age() or 0) for r in recs) <= 10
    assert all(max(t) <= 10 for r in recs for t in r.age_tuples)


def test_ages_never_exceed_elapsed_rounds():
    recs = run_protocol(_p(transmittivity=0.2, total_rounds=30), sample_rng(5, 0), keep_snapshots=True)
    for r in recs:
        assert (r.snapshot.max_age() or 0) <= r.round - 1
        assert all(max(t) <= r.round - 1 for t in r.age_tuples)


def test_full_range_measures_min_filled():
    p = _p(mem_per_party=3, max_conn_len=2, transmittivity=0.25, total_rounds=40)
    for r in run_protocol(p, sample_rng(9, 0), keep_snapshots=True):
        assert r.num_measurements == min(len(r.snapshot.filled(k)) for k in range(3))


def test_weighted_strategy_picks_minimum_total_age():
    p = _p(mem_per_party=3, max_conn_len=1, transmittivity=0.2, total_rounds=40, strategy=Strategy.S2)
    for r in run_protocol(p, sample_rng(4, 0), keep_snapshots=True):
        instance = build_instance(to_bit_configuration(r.snapshot), p.max_conn_len)
        best = min(matching_weights(m, r.snapshot)[1] for m in all_maximum_matchings(instance))
        assert sum(sum(t) for t in r.age_tuples) == best


# -------------------------
# Ensembles
# -------------------------

def test_sample_streams_are_fixed_per_index():
    a = sample_rng(42, 3).random(4)
    b = sample_rng(42, 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_rng(42, 4).random(4))
    assert master_entropy(-1) == (1 << 64) - 1


def test_single_sample_ensemble():
    p = _p(samples=1)
    stats = run_ensemble(p)
    direct = run_protocol(p, sample_rng(p.rng_seed, 0))
    assert stats.samples == 1
    assert list(stats.mean_l()) == [float(r.num_measurements) for r in direct]
    assert np.all(stats.stderr_l() == 0.0)


def test_ensemble_is_deterministic():
    p = _p(samples=25)
    assert run_ensemble(p).to_json() == run_ensemble(p).to_json()


def test_chunking_does_not_change_results():
    p = _p(samples=23)
    whole = run_ensemble(p, chunk_samples=500).to_json()
    assert run_ensemble(p, chunk_samples=4).to_json() == whole
    assert run_ensemble(p, threads=2, chunk_samples=5).to_json() == whole


def test_chunk_bounds():
    assert chunk_bounds(7, 3) == [(0, 3), (3, 6), (6, 7)]
    assert chunk_bounds(2, 0) == [(0, 1), (1, 2)]


def test_merge_adds_samples():
    p = _p(samples=10)
    a = run_ensemble(p)
    b = run_ensemble(replace(p, rng_seed=p.rng_seed + 1))
    both = a.merged(b)
    assert both.samples == 20
    assert np.allclose(both.mean_l(), (a.mean_l() + b.mean_l()) / 2)
    with pytest.raises(ValueError):
        a.merged(EnsembleStats.empty(3, 3, 5))


def test_router_rate_is_running_mean_over_m():
    stats = run_ensemble(_p(samples=15))
    ml = stats.mean_l()
    assert stats.router_rate()[4] == pytest.approx(ml[:5].sum() / (5 * 3))


def test_age_marginals_are_distributions():
    stats = run_ensemble(_p(samples=40, transmittivity=0.4))
    for s in range(1, 13):
        for dist in stats.age_marginals(s):
            if dist:
                assert sum(dist.values()) == pytest.approx(1.0)
                assert max(dist) <= s - 1


def test_two_party_single_memory_matches_analytic():
    p = Params(
        n_parties=2, mem_per_party=1, max_conn_len=0, transmittivity=0.3,
        total_rounds=10, samples=5_000, strategy=Strategy.S0,
    )
    mc = run_ensemble(p).mean_l()
    for row in run_analytic(p):
        sd = math.sqrt(row.expected_l * (1 - row.expected_l) / p.samples)
        assert abs(mc[row.round - 1] - row.expected_l) < 4 * sd + 1e-3
