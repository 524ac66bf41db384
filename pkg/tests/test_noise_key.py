from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.data.models import RoundRecord
from app.keyrate.ghz import (
    GhzDiagonal3,
    QberSet,
    circuit_oracle_3,
    ghz_diag_lambdas,
    lambda_arrays,
    noise_for_fidelities,
    qbers_3,
    qbers_for_ages,
    qbers_from_density,
    qber_arrays,
    qbers_product_of_marginals_3,
)
from app.keyrate.noise import Fidelities, check_fidelity, fidelity, white_noise_prob
from app.keyrate.oracle import circuit_density, ghz_weights, offdiagonal_weight
from app.keyrate.secret import (
    KeyRateRow,
    QberMode,
    binary_entropy,
    key_rate_series,
    max_storage_rounds_for_threshold,
    non_decreasing_after,
    peak_round,
    qber_threshold,
    secret_fraction,
    secret_key_rate,
    total_noise,
    total_qber,
)
from app.sim.ensemble import EnsembleStats

fids = st.floats(0.25, 1.0, allow_nan=False)
TAU = 100


def _stats(n_parties: int, per_round) -> EnsembleStats:
    """One sample whose round s measured the age tuples in per_round[s-1]."""
    stats = EnsembleStats.empty(n_parties, 4, len(per_round))
    stats.add_run([RoundRecord(s, len(t), tuple(t), len(t)) for s, t in enumerate(per_round, start=1)])
    return stats


def _closed_form(ages):
    p = [white_noise_prob(d, TAU) for d in ages]
    q_x = (1.0 - math.prod(p)) / 2.0
    q_ab = tuple((1.0 - p[0] * pb) / 2.0 for pb in p[1:])
    return q_x, q_ab


# -------------------------
# Noise model
# -------------------------

def test_fidelity_examples():
    assert fidelity(0, TAU) == 1.0
    assert fidelity(100, TAU) == pytest.approx(0.25 + 0.75 / math.e)
    assert Fidelities.from_ages((0, 50), TAU).probs() == pytest.approx((1.0, math.exp(-0.5)))


def test_noise_rejects_bad_input():
    with pytest.raises(ValueError):
        white_noise_prob(-1, TAU)
    with pytest.raises(ValueError):
        white_noise_prob(3, 0)
    with pytest.raises(ValueError):
        check_fidelity(0.2)
    with pytest.raises(ValueError):
        Fidelities((1.0, 1.01, 0.5))


def test_lambda_corners():
    perfect = ghz_diag_lambdas(Fidelities((1.0, 1.0, 1.0)))
    assert perfect.as_tuple() == pytest.approx((1.0, 0.0, 0.0, 0.0, 0.0), abs=1e-15)
    mixed = ghz_diag_lambdas(Fidelities((0.25, 0.25, 0.25)))
    assert mixed.as_tuple() == pytest.approx((0.125,) * 5, abs=1e-15)


def test_lambdas_need_three_parties():
    with pytest.raises(ValueError):
        ghz_diag_lambdas(Fidelities((1.0, 1.0)))


def test_lambda_grid_is_a_distribution():
    grid = np.linspace(0.25, 1.0, 16)
    fa, fb1, fb2 = np.meshgrid(grid, grid, grid, indexing="ij")
    l0p, l0m, l1, l2, l3 = lambda_arrays(fa, fb1, fb2)
    assert np.all(np.abs(l0p + l0m + 2 * (l1 + l2 + l3) - 1.0) < 1e-12)
    for lam in (l0p, l0m, l1, l2, l3):
        assert np.all(lam >= -1e-12)


@settings(max_examples=60, deadline=None)
@given(fids, fids, fids)
def test_lambdas_match_circuit(fa, fb1, fb2):
    f = Fidelities((fa, fb1, fb2))
    assert ghz_diag_lambdas(f).as_tuple() == pytest.approx(circuit_oracle_3(f).as_tuple(), abs=1e-12)
    assert offdiagonal_weight(circuit_density(f.f)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(fids, fids, fids)
def test_qbers_from_lambdas_match_density(fa, fb1, fb2):
    f = Fidelities((fa, fb1, fb2))
    q_lam = qbers_3(ghz_diag_lambdas(f))
    q_rho = qbers_from_density(circuit_density(f.f))
    assert q_lam.q_x == pytest.approx(q_rho.q_x, abs=1e-12)
    assert q_lam.q_ab == pytest.approx(q_rho.q_ab, abs=1e-12)


@pytest.mark.parametrize(
    "ages",
    [(0, 0, 0), (0, 3, 3), (7, 0, 12), (0, 5), (0, 2, 4, 8), (1, 0, 9, 3, 6)],
)
def test_qbers_closed_form(ages):
    q = qbers_for_ages(ages, TAU)
    q_x, q_ab = _closed_form(ages)
    assert q.q_x == pytest.approx(q_x, abs=1e-12)
    assert q.q_ab == pytest.approx(q_ab, abs=1e-12)


def test_better_memories_never_hurt():
    grid = np.meshgrid(*[np.linspace(0.25, 1.0, 50)] * 3, indexing="ij")
    l0p = lambda_arrays(*grid)[0]
    qbers = qber_arrays(*grid)
    for axis in range(3):
        assert np.diff(l0p, axis=axis).min() >= -1e-12
        for q in qbers:
            assert np.diff(q, axis=axis).max() <= 1e-12


def test_qber_arrays_match_scalar_path():
    f = Fidelities((0.9, 0.6, 0.8))
    q_x, q_ab1, q_ab2 = qber_arrays(*f.f)
    q = qbers_3(ghz_diag_lambdas(f))
    assert (float(q_x), float(q_ab1), float(q_ab2)) == pytest.approx((q.q_x, *q.q_ab), abs=1e-15)


def test_circuit_output_is_a_state():
    rho = circuit_density([0.9, 0.7, 0.8, 0.95])
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho, rho.T)
    plus, minus = ghz_weights(rho)
    assert plus.sum() + minus.sum() == pytest.approx(1.0, abs=1e-12)


def test_oracle_party_limit():
    with pytest.raises(ValueError):
        noise_for_fidelities([1.0] * 6)


def test_qber_grows_with_storage():
    q = [qbers_for_ages((0, d, d), TAU) for d in range(0, 40, 5)]
    assert all(a.q_x < b.q_x for a, b in zip(q, q[1:]))
    assert all(a.max_q_ab < b.max_q_ab for a, b in zip(q, q[1:]))


# -------------------------
# Secret fraction
# -------------------------

def test_binary_entropy():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.11) == pytest.approx(0.49992, abs=1e-4)
    assert np.allclose(binary_entropy(np.array([0.0, 0.5])), [0.0, 1.0])


def test_secret_fraction_around_threshold():
    assert secret_fraction(QberSet(0.0, (0.0, 0.0))) == 1.0
    assert secret_fraction(QberSet(0.105, (0.105, 0.105))) == pytest.approx(0.031, abs=2e-3)
    assert secret_fraction(QberSet(0.115, (0.115, 0.115))) == 0.0


def test_secret_key_rate():
    assert secret_key_rate(0.5, 0.2) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        secret_key_rate(-0.1, 0.2)


def test_threshold_helpers():
    assert qber_threshold() == pytest.approx(0.110028, abs=1e-5)
    assert max_storage_rounds_for_threshold(TAU) == 12
    assert max_storage_rounds_for_threshold(TAU, threshold=0.5, limit=30) == 30


# -------------------------
# Totals over rounds
# -------------------------

def test_fresh_tuples_give_zero_qber():
    stats = _stats(3, [[(0, 0, 0)], [(0, 0, 0), (0, 0, 0)]])
    for mode in QberMode:
        for q in total_qber(stats, TAU, mode):
            assert q.q_x == pytest.approx(0.0, abs=1e-15)
            assert q.q_ab == pytest.approx((0.0, 0.0), abs=1e-15)


def test_single_tuple_modes_agree():
    stats = _stats(3, [[(0, 3, 3)]])
    joint = total_noise(stats, TAU, QberMode.JOINT)[0]
    marg = total_noise(stats, TAU, QberMode.MARGINAL)[0]
    assert joint.qber.q_x == pytest.approx(marg.qber.q_x, abs=1e-12)
    assert joint.qber.q_ab == pytest.approx(marg.qber.q_ab, abs=1e-12)
    assert joint.output_fidelity == pytest.approx(marg.output_fidelity, abs=1e-12)
    assert joint.measurements == 1


def test_rounds_before_first_measurement_are_undefined():
    stats = _stats(3, [[], [], [(0, 1, 2)]])
    assert total_qber(stats, TAU)[:2] == [None, None]
    rows = key_rate_series(stats, TAU)
    assert rows[0].secret_fraction is None and rows[0].key_rate == 0.0
    assert rows[2].qber is not None


def test_joint_total_is_measurement_weighted():
    stats = _stats(3, [[(0, 0, 0)], [(0, 5, 5)] * 3])
    later = total_qber(stats, TAU)[1]
    q555 = qbers_for_ages((0, 5, 5), TAU)
    assert later.q_x == pytest.approx(3 * q555.q_x / 4, abs=1e-12)


def test_joint_and_marginal_differ_for_correlated_ages():
    stats = _stats(3, [[(0, 0, 0), (0, 20, 20)]])
    joint = total_qber(stats, TAU, QberMode.JOINT)[0]
    marg = total_qber(stats, TAU, QberMode.MARGINAL)[0]
    assert joint.q_x != pytest.approx(marg.q_x, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.dictionaries(st.integers(0, 30), st.floats(0.05, 1.0), min_size=1, max_size=4), min_size=3, max_size=3))
def test_marginal_product_equals_mean_fidelity(raw):
    marginals = [{a: w / sum(h.values()) for a, w in h.items()} for h in raw]
    q, f_out = qbers_product_of_marginals_3(marginals, TAU)
    mean_f = [sum(p * fidelity(a, TAU) for a, p in h.items()) for h in marginals]
    shortcut = noise_for_fidelities(mean_f)
    assert q.q_x == pytest.approx(shortcut.qber.q_x, abs=1e-12)
    assert q.q_ab == pytest.approx(shortcut.qber.q_ab, abs=1e-12)
    assert f_out == pytest.approx(shortcut.output_fidelity, abs=1e-12)


def test_four_party_totals():
    stats = _stats(4, [[(0, 2, 4, 6)]])
    q_x, q_ab = _closed_form((0, 2, 4, 6))
    for mode in QberMode:
        q = total_qber(stats, TAU, mode)[0]
        assert q.q_x == pytest.approx(q_x, abs=1e-12)
        assert q.q_ab == pytest.approx(q_ab, abs=1e-12)


def test_peak_round():
    def row(s, k):
        return KeyRateRow(s, None, None, 0.0, k, None)

    assert peak_round([row(1, 0.0), row(2, 0.3), row(3, 0.3), row(4, 0.1)]) == 2
    assert peak_round([row(1, 0.0), row(2, 0.0)]) is None
    assert peak_round([]) is None


def test_non_decreasing_after_transient():
    rows = [KeyRateRow(s, None, None, 0.0, k, None) for s, k in enumerate([0.0, 0.05, 0.03, 0.031, 0.0308], start=1)]
    assert not non_decreasing_after(rows, transient=1)
    assert non_decreasing_after(rows, transient=3)
    assert not non_decreasing_after(rows, transient=3, rel_tol=0.001)


def test_ghz_diagonal_trace():
    lam = GhzDiagonal3(0.5, 0.1, 0.1, 0.05, 0.05)
    assert lam.trace() == pytest.approx(1.0)
    assert lam.output_fidelity == 0.5
