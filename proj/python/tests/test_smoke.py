from fractions import Fraction

import pytest

import abrsim

FIGURE3 = """
[scenario]
duration_ms = 20
scheme = eprca

[topology]
generator = figure3
"""


def mbps(m):
    return Fraction(m * 1_000_000, 424)


def test_figure3_oracle_is_exact():
    rates = abrsim.oracle(FIGURE3)
    assert [rates[v] for v in sorted(rates)] == [mbps(50), mbps(50), mbps(50), mbps(100)]


def test_max_min_with_demand_cap():
    got = abrsim.max_min({"L": 90}, [("a", ["L"]), ("b", ["L"], Fraction(10)), ("c", ["L"])])
    assert got == [40, 10, 40]


def test_max_min_rejects_float_capacity():
    with pytest.raises(TypeError):
        abrsim.max_min({"L": 1.5}, [("a", ["L"])])


def test_fairness_index():
    assert abrsim.fairness_index([0.5, 1.0], [1.0, 1.0]) == pytest.approx(0.9)
    with pytest.raises(abrsim.DegenerateOptimal):
        abrsim.fairness_index([1.0], [0.0])


def test_mit_fair_share():
    assert abrsim.mit_fair_share(65, [5, 100, 100]) == (30, 1, 1)


def test_beat_down_and_credit_sizes():
    assert abrsim.beat_down_probability(0.1, 3) == pytest.approx(0.271)
    assert abrsim.static_credit_size(1_000_000, 500) == 1000
    assert abrsim.adaptive_allocate([300, 100], 4000, 10) == [3000, 1000]
    with pytest.raises(abrsim.InsufficientBuffer):
        abrsim.adaptive_allocate([1, 1, 1], 5, 2)


def test_run_is_deterministic_and_conserves_cells():
    a = abrsim.run(FIGURE3, seed=3)
    b = abrsim.run(FIGURE3, seed=3)
    assert a["csv"] == b["csv"]
    assert a["conservation_ok"]
    assert a["csv"].splitlines()[0] == "time,vc,throughput,acr,queue_max,dropped,efci_fraction,fairness_index"
    assert f"csv_version = {abrsim.CSV_VERSION}" in a["report"]


def test_credit_run_loses_nothing():
    text = FIGURE3.replace("scheme = eprca", "scheme = credit_static")
    assert abrsim.run(text, duration_ms=10)["total_loss"] == 0


def test_serialized_config_reloads_identically():
    once = abrsim.serialize(FIGURE3)
    assert abrsim.serialize(once) == once


def test_config_errors_surface_as_value_errors():
    with pytest.raises(abrsim.ConfigError) as err:
        abrsim.run(FIGURE3.replace("duration_ms = 20", "duration_ms = 0"))
    assert isinstance(err.value, ValueError)
    assert "duration" in str(err.value)
