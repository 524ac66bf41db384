from __future__ import annotations

import pytest

from app.config import Params, ParamsError, RuntimeConfig, Strategy, load_params, parse_config_text, validate
from app.data.models import EMPTY, EMPTY_TOKEN, BitConfiguration, Hyperedge, Matching, MemoryState, to_bit_configuration
from app.utils.fiber import fiber_distance_km, transmittivity_for_distance


def test_example_ages_to_bits(example_ages):
    bits = to_bit_configuration(example_ages).bits
    assert bits == (1, 0, 1, 0, 1, 1, 0, 1, 0, 0, 1, 1)


def test_empty_and_full_states():
    assert set(to_bit_configuration(MemoryState.empty(3, 4)).bits) == {0}
    full = MemoryState.from_lists([[0, 1, 2], [3, 4, 5]])
    assert to_bit_configuration(full).bits == (1,) * 6


def test_bits_follow_slot_mutations(example_ages):
    before = to_bit_configuration(example_ages)
    after = to_bit_configuration(example_ages.clear([(0, 2), (1, 3)]))
    flipped = [i for i, (x, y) in enumerate(zip(before.bits, after.bits)) if x != y]
    assert flipped == [2, 4 + 3]


def test_index_is_msb_first():
    c = BitConfiguration.from_index(1 << 11, 3, 4)
    assert c.bits[0] == 1 and sum(c.bits) == 1
    for idx in (0, 1, 77, 4095):
        assert BitConfiguration.from_index(idx, 3, 4).index == idx


def test_bit_configuration_rejects_bad_input():
    with pytest.raises(ValueError):
        BitConfiguration((1, 0, 1), 2, 2)
    with pytest.raises(ValueError):
        BitConfiguration((1, 2), 1, 2)


def test_empty_serializes_as_token(example_ages):
    rows = example_ages.to_json()
    assert rows[0] == [0, EMPTY_TOKEN, 3, EMPTY_TOKEN]
    assert example_ages.age(0, 1) is EMPTY
    assert example_ages.max_age() == 5


def test_hyperedge_labels():
    e = Hyperedge((2, 1, 2))
    assert e.labels() == (3, 2, 3)
    assert e.b1_first_labels() == (2, 3, 3)
    m = Matching((Hyperedge((2, 1, 2)), Hyperedge((0, 0, 3))))
    assert m.is_disjoint()
    assert m.canonical().edges[0] == Hyperedge((0, 0, 3))
    assert not Matching((Hyperedge((0, 0, 0)), Hyperedge((0, 1, 1)))).is_disjoint()


# -------------------------
# Params
# -------------------------

def test_default_setup_is_valid():
    assert validate(Params(n_parties=3, mem_per_party=4, max_conn_len=1, transmittivity=0.1, decoherence_rounds=100)) == []


def test_w_bound_violation():
    errors = validate(Params(mem_per_party=4, max_conn_len=4))
    assert "w exceeds m−1" in errors


def test_transmittivity_violation():
    errors = validate(Params(transmittivity=1.3))
    assert "transmittivity out of [0,1]" in errors


def test_all_errors_are_reported():
    with pytest.raises(ParamsError) as ei:
        Params(transmittivity=-0.1, p_ghz=2.0, decoherence_rounds=0, cutoff=0).checked()
    assert len(ei.value.errors) == 4


def test_analytic_dimension_warning_is_not_an_error():
    p = Params(n_parties=4, mem_per_party=4, max_conn_len=1)
    assert validate(p, analytic=True) == []


def test_config_text_parsing():
    text = """
    # baseline setup
    n_parties = 3
    mem_per_party = 4   # per party
    strategy = s1a
    cutoff = none
    transmittivity = 0.25
    """
    p = parse_config_text(text)
    assert p.strategy == Strategy.S1A
    assert p.cutoff is None
    assert p.transmittivity == 0.25
    assert parse_config_text(p.to_config_text()) == p


def test_unknown_key_is_rejected():
    with pytest.raises(ParamsError):
        parse_config_text("flux_capacitor = 1\n")
    with pytest.raises(ParamsError):
        parse_config_text("n_parties 3\n")


def test_overrides_apply_after_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("mem_per_party = 3\ncutoff = 10\n", encoding="utf-8")
    p = load_params(cfg, [("cutoff", "none"), ("max_conn_len", "2")])
    assert (p.mem_per_party, p.cutoff, p.max_conn_len) == (3, None, 2)


def test_runtime_config_from_env(monkeypatch):
    monkeypatch.setenv("QROUTER_THREADS", "4")
    monkeypatch.delenv("QROUTER_CHUNK_SAMPLES", raising=False)
    monkeypatch.setenv("LOG_LEVEL", "debug")
    rc = RuntimeConfig.load()
    assert rc.threads == 4
    assert rc.log_level == "DEBUG"
    assert rc.chunk_samples == 500


def test_runtime_config_rejects_non_integer(monkeypatch):
    monkeypatch.setenv("QROUTER_THREADS", "abc")
    with pytest.raises(ValueError, match="QROUTER_THREADS"):
        RuntimeConfig.load()


# -------------------------
# Fiber
# -------------------------

def test_fiber_distance_at_default_transmittivity():
    assert fiber_distance_km(0.1) == pytest.approx(50.0, abs=1e-12)
    assert transmittivity_for_distance(50.0) == pytest.approx(0.1, rel=1e-12)


def test_fiber_distance_rejects_zero():
    with pytest.raises(ValueError):
        fiber_distance_km(0.0)
