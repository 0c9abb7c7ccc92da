from fractions import Fraction

import pytest

from folner_density.config import Budgets, SearchMeter, budgets, budgets_scope
from folner_density.errors import ConfigError, SearchBudgetExceeded


def test_budgets_from_environment(monkeypatch):
    monkeypatch.setenv("FOLNER_WINDOW_CAP", "500")
    monkeypatch.setenv("FOLNER_SEARCH_BUDGET", "not a number")
    monkeypatch.setenv("FOLNER_CHAIN_DELTA", "1/7")
    monkeypatch.setenv("FOLNER_PROGRESS", "yes")
    monkeypatch.delenv("FOLNER_WORKERS", raising=False)
    b = Budgets.from_env()
    assert b.window_cap == 500
    assert b.search_budget == 5_000_000
    assert b.workers == 1
    assert b.chain_delta == Fraction(1, 7)
    assert b.progress is True
    assert b.to_record()["chain_delta"] == "1/7"


def test_overrides_and_scopes():
    base = Budgets()
    tight = base.override(search_budget=3, workers=None)
    assert tight.search_budget == 3 and tight.workers == base.workers
    with budgets_scope(tight):
        assert budgets() is tight
        with budgets_scope(Budgets(workers=2)):
            assert budgets().workers == 2
        assert budgets() is tight
    assert budgets() is not tight


def test_budgets_must_be_positive():
    with pytest.raises(ConfigError):
        Budgets(window_cap=0)
    with pytest.raises(ConfigError):
        Budgets(chain_delta=Fraction(0))


def test_search_meter():
    meter = SearchMeter("probe", budget=2)
    meter.spend()
    meter.spend()
    with pytest.raises(SearchBudgetExceeded) as info:
        meter.spend()
    assert info.value.budget == 2
    assert "probe" in str(info.value)
