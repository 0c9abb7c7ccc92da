from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from folner_density.config import Budgets, budgets_scope
from folner_density.density import DensityParams, PeriodicOracle, RunsOracle, TranslateOracle, oracle_from_spec
from folner_density.errors import ConfigError, ParameterError
from folner_density.group_core import FiniteCyclic, Heisenberg3, IntegerLattice, box_window, folner_window
from folner_density.intsets import PeriodicSet
from folner_density.setops import (
    FAILURE,
    INCONCLUSIVE,
    SUCCESS,
    ProbeFamily,
    covers_region,
    delta_set,
    describe_result,
    difference_set,
    embed_difference_check,
    finite_embed_check,
    inverse_set,
    piecewise_density_consequence,
    piecewise_syndetic_check,
    probes_from_spec,
    product_set,
    product_witnesses,
    root_power_sets,
    syndetic_cover_search,
    syndetic_density_consequence,
    thickness_check,
)

Z = IntegerLattice(1)
evens = oracle_from_spec(Z, "evens")
odds = oracle_from_spec(Z, "odds")


def interval(lo, hi):
    return box_window(Z, (lo,), (hi,))


# --- set algebra ---
def test_product_witnesses_use_least_left_factor():
    out = product_witnesses(evens, odds, interval(0, 10), (interval(0, 4), interval(0, 4)))
    assert out == {(1,): ((0,), (1,)), (3,): ((0,), (3,)), (5,): ((2,), (3,))}


def test_product_witnesses_scan_the_output_window_when_factors_are_large():
    A = oracle_from_spec(Z, "multiples:5")
    out = product_witnesses(A, evens, interval(0, 4), (interval(0, 20), interval(-20, 20)))
    assert out == {(0,): ((0,), (0,)), (1,): ((5,), (-4,)), (2,): ((0,), (2,)), (3,): ((5,), (-2,))}


def test_difference_set():
    assert difference_set(evens, interval(-3, 4), interval(-4, 5)) == {(-2,), (0,), (2,)}


def test_delta_set_is_strict():
    A = oracle_from_spec(Z, "multiples:3")
    params = DensityParams((12,), "window", "anchored")
    candidates = interval(-3, 4)
    assert delta_set(A, 0, candidates, params) == ((-3,), (0,), (3,))
    assert delta_set(A, Fraction(1, 4), candidates, params) == ((-3,), (0,), (3,))
    assert delta_set(A, Fraction(1, 3), candidates, params) == ()
    with pytest.raises(ParameterError):
        delta_set(A, -1, candidates, params)


def test_roots_and_powers():
    A = oracle_from_spec(Z, "multiples:4")
    W = folner_window(Z, 5)
    assert root_power_sets(A, 2, W) == {(-4,), (-2,), (0,), (2,), (4,)}
    assert root_power_sets(A, 2, W, "power") == {(-8,), (0,), (8,)}
    H3 = Heisenberg3()
    sq = root_power_sets(oracle_from_spec(H3, "whole"), 2, folner_window(H3, 1, "anchored"), "power")
    assert sq == {(0, 0, 0)}
    with pytest.raises(ParameterError):
        root_power_sets(A, 0, W)
    with pytest.raises(ParameterError):
        root_power_sets(A, 2, W, "log")


# --- syndeticity ---
def test_syndetic_cover_search_finds_least_cover():
    res = syndetic_cover_search(evens, 2, folner_window(Z, 5, "anchored"), interval(0, 3))
    assert res.verdict == SUCCESS
    assert res.certificate.F == ((0,), (1,))
    assert res.certificate.ok
    assert res.method == "exhaustive"


def test_syndetic_cover_search_failures():
    region = folner_window(Z, 5, "anchored")
    assert syndetic_cover_search(evens, 1, region, interval(0, 3)).verdict == FAILURE
    # strict pools only keep elements of A, whose translates all coincide
    assert syndetic_cover_search(evens, 2, region, interval(0, 3), strict=True).verdict == FAILURE
    with pytest.raises(ParameterError):
        syndetic_cover_search(evens, 0, region, interval(0, 3))


def test_syndetic_cover_search_falls_back_to_greedy():
    with budgets_scope(Budgets(search_budget=16)):
        res = syndetic_cover_search(evens, 2, folner_window(Z, 5, "anchored"), interval(0, 3))
    assert res.verdict == SUCCESS
    assert res.method == "greedy"
    assert res.certificate.F == ((0,), (1,))


def test_syndetic_cover_search_reports_inconclusive():
    with budgets_scope(Budgets(search_budget=3)):
        res = syndetic_cover_search(evens, 2, folner_window(Z, 5, "anchored"), interval(0, 3))
    assert res.verdict == INCONCLUSIVE
    assert res.certificate is None


def test_cover_residual_and_density_consequence():
    region = folner_window(Z, 5, "anchored")
    assert covers_region(evens, [(0,), (1,)], region) == ()
    assert covers_region(evens, [(0,)], region) == ((1,), (3,))
    f, d = syndetic_density_consequence(evens, [(0,), (1,)], region)
    assert (f, d) == ((0,), Fraction(3, 5))
    with pytest.raises(ParameterError):
        syndetic_density_consequence(evens, [], region)


# --- thickness and embeddability ---
def test_runs_are_thick():
    res = thickness_check(RunsOracle(2), ProbeFamily.boxes_up_to(Z, 3), folner_window(Z, 20, "anchored"))
    assert res.verdict == SUCCESS
    assert res.witnesses == {0: (2,), 1: (4,), 2: (8,)}


def test_evens_are_not_thick():
    res = thickness_check(evens, ProbeFamily.boxes_up_to(Z, 3), folner_window(Z, 20, "anchored"))
    assert res.verdict == FAILURE
    assert res.failing == ((0,), (1,))
    assert res.witnesses == {0: (0,), 1: None}
    rec = describe_result(res, ProbeFamily.boxes_up_to(Z, 3))
    assert rec["failing_probe"] == [[0], [1]]
    assert rec["witnesses"][1] == {"probe_index": 1, "x": None, "probe": [[0], [1]]}


def test_finite_embed_check():
    probes = ProbeFamily.explicit(Z, [[0, 2]])
    res = finite_embed_check(probes, RunsOracle(2), interval(0, 20), A=evens)
    assert res.verdict == SUCCESS
    assert res.witnesses == {0: (2,)}
    rows = embed_difference_check(RunsOracle(2), probes, res.witnesses)
    assert [r["difference"] for r in rows] == [[-2], [2]]
    assert all(r["ok"] for r in rows)
    with pytest.raises(ParameterError):
        finite_embed_check(ProbeFamily.explicit(Z, [[1]]), RunsOracle(2), interval(0, 20), A=evens)


def test_piecewise_syndetic_check():
    probes = ProbeFamily.boxes_up_to(Z, 4)
    res = piecewise_syndetic_check(evens, 2, probes, interval(0, 3), interval(0, 10))
    assert res.verdict == SUCCESS
    assert res.F == ((0,), (1,))
    assert res.thickness.witnesses == {0: (0,), 1: (0,), 2: (0,), 3: (0,)}
    assert piecewise_syndetic_check(evens, 1, probes, interval(0, 3), interval(0, 10)).verdict == FAILURE
    fixed = piecewise_syndetic_check(evens, 1, probes, interval(0, 3), interval(0, 10), F=[(0,), (1,)])
    assert fixed.verdict == FAILURE and fixed.method == "fixed"


def test_piecewise_density_consequence():
    f, d = piecewise_density_consequence(evens, [(0,), (1,)], [(0,), (1,), (2,)], (0,))
    assert (f, d) == ((0,), Fraction(2, 3))


def test_probe_specs():
    assert len(probes_from_spec(Z, 3)) == 3
    assert len(probes_from_spec(Z, {"intervals_up_to": 2})) == 2
    assert probes_from_spec(Z, [[0, 1], [5]]).probes == (((0,), (1,)), ((5,),))
    assert probes_from_spec(Z, {"explicit": [[3, 3]]}).probes == (((3,),),)
    # box probes are clipped to a finite modulus
    assert len(ProbeFamily.boxes_up_to(FiniteCyclic(2), 3)) == 2
    with pytest.raises(ConfigError):
        probes_from_spec(Z, "big")
    with pytest.raises(ParameterError):
        ProbeFamily(())


# --- consistency on random periodic sets ---
periodic = st.integers(min_value=1, max_value=6).flatmap(
    lambda p: st.tuples(st.just(p), st.sets(st.integers(min_value=0, max_value=p - 1), min_size=1)))


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(periodic, st.integers(min_value=0, max_value=2))
def test_delta_sets_nest_inside_the_difference_set(ps, j):
    p, residues = ps
    A = PeriodicOracle(PeriodicSet(p, tuple(residues), (), "Z"))
    params = DensityParams((12,), "window", "anchored")
    candidates = interval(-6, 7)
    eps = Fraction(j, 6)
    wider = delta_set(A, eps, candidates, params)
    narrower = delta_set(A, eps + Fraction(1, 6), candidates, params)
    base = delta_set(A, 0, candidates, params)
    assert set(narrower) <= set(wider) <= set(base)
    assert set(base) <= difference_set(A, candidates, interval(-40, 40))


@settings(max_examples=100, deadline=None)
@given(periodic)
def test_syndetic_success_forces_density(ps):
    p, residues = ps
    A = PeriodicOracle(PeriodicSet(p, tuple(residues), (), "Z"))
    region = folner_window(Z, 12, "anchored")
    res = syndetic_cover_search(A, p, region, interval(0, p))
    assert res.verdict == SUCCESS
    F = res.certificate.F
    assert covers_region(A, F, region) == ()
    _, d = syndetic_density_consequence(A, F, region)
    assert d >= Fraction(1, len(F))


@settings(max_examples=100, deadline=None)
@given(periodic, st.integers(min_value=0, max_value=5))
def test_embedding_success_lands_differences_in_the_target(ps, t):
    p, residues = ps
    B = PeriodicOracle(PeriodicSet(p, tuple(residues), (), "Z"))
    A = TranslateOracle(B, (t,))
    probes = ProbeFamily.explicit(Z, [A.members(interval(0, 8))])
    res = finite_embed_check(probes, B, interval(-10, 10), A=A)
    assert res.verdict == SUCCESS
    for row in embed_difference_check(B, probes, res.witnesses):
        assert row["ok"]
        assert (row["b"][0],) in B and (row["b2"][0],) in B
        assert row["difference"][0] == row["b"][0] - row["b2"][0]


def test_product_and_inverse_sets():
    assert product_set(evens, odds, interval(0, 10), (interval(0, 4), interval(0, 4))) == {(1,), (3,), (5,)}
    assert inverse_set(RunsOracle(2), interval(-6, 0)) == {(-5,), (-4,), (-2,)}
