from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folner_density.errors import ConfigError, OracleUndefined, ParameterError, SearchBudgetExceeded
from folner_density.config import Budgets, budgets_scope
from folner_density.density import (
    DensityParams,
    FiniteOracle,
    InverseOracle,
    PeriodicOracle,
    ProductOracle,
    ResidueOracle,
    RunsOracle,
    TranslateOracle,
    both_estimates,
    density_estimate,
    density_grid,
    lower_density_estimate,
    oracle_from_spec,
    relative_density,
    upper_density_estimate,
)
from folner_density.group_core import FiniteCyclic, Heisenberg3, IntegerLattice, box_window, folner_window
from folner_density.intsets import PeriodicSet

Z = IntegerLattice(1)
Z2 = IntegerLattice(2)
H3 = Heisenberg3()


def test_presets_on_the_integers():
    evens = oracle_from_spec(Z, "evens")
    assert isinstance(evens, PeriodicOracle)
    assert (4,) in evens and (3,) not in evens
    assert (-7,) in oracle_from_spec(Z, "odds")
    assert (9,) in oracle_from_spec(Z, "multiples:3")
    assert (-1,) not in oracle_from_spec(Z, "N")


def test_presets_on_other_models_use_the_first_coordinate():
    A = oracle_from_spec(Z2, "evens")
    assert isinstance(A, ResidueOracle)
    assert (2, 7) in A and (3, 0) not in A
    with pytest.raises(ConfigError):
        oracle_from_spec(Z2, "N")
    with pytest.raises(ConfigError):
        oracle_from_spec(Z2, {"kind": "finite", "elements": [1]})


def test_spec_round_trip():
    specs = [
        "evens",
        {"kind": "residue", "modulus": 3, "residues": [1]},
        {"kind": "points", "elements": [[1], [5]]},
        {"kind": "runs", "base": 3},
        {"kind": "translate", "of": "evens", "by": [1], "side": "left"},
        {"kind": "union", "of": ["multiples:3", "multiples:5"]},
        {"kind": "inverse", "of": {"kind": "intervals", "items": [[0, 3]], "repeat": 10}},
        {"kind": "predicate", "name": "squares"},
    ]
    W = folner_window(Z, 30)
    for spec in specs:
        A = oracle_from_spec(Z, spec)
        B = oracle_from_spec(Z, A.spec())
        assert A.members(W) == B.members(W)


def test_named_references():
    named = {"S": oracle_from_spec(Z, "multiples:4")}
    assert oracle_from_spec(Z, "S", named) is named["S"]
    assert (8,) in oracle_from_spec(Z, {"ref": "S"}, named)
    with pytest.raises(ConfigError):
        oracle_from_spec(Z, "primes")
    with pytest.raises(ConfigError):
        oracle_from_spec(Z, {"kind": "residue"})


@settings(max_examples=200)
@given(st.integers(min_value=-60, max_value=60), st.integers(min_value=1, max_value=80))
def test_periodic_counts_match_enumeration(lo, length):
    P = PeriodicSet(5, (0, 3), ((1, True), (3, False), (8, True)), "N")
    A = PeriodicOracle(P)
    W = box_window(Z, (lo,), (lo + length,))
    assert A.count(W) == sum(1 for g in W if g in A)
    two_sided = PeriodicOracle(PeriodicSet(4, (0, 1, 3), ((-5, True), (-2, False), (2, True)), "Z", (2,)))
    assert two_sided.count(W) == sum(1 for g in W if g in two_sided)


@settings(max_examples=100)
@given(st.integers(min_value=-20, max_value=20), st.integers(min_value=-20, max_value=20),
       st.integers(min_value=1, max_value=9), st.integers(min_value=1, max_value=9))
def test_residue_counts_match_enumeration(x, y, w, h):
    A = ResidueOracle(Z2, 3, frozenset({1, 2}), coordinate=1)
    W = box_window(Z2, (x, y), (x + w, y + h))
    assert A.count(W) == sum(1 for g in W if g in A)


def test_translate_and_inverse():
    evens = oracle_from_spec(Z, "evens")
    shifted = TranslateOracle(evens, (1,), "left")
    assert (3,) in shifted and (2,) not in shifted
    assert shifted.count(folner_window(Z, 5, "anchored")) == 2
    left = TranslateOracle(FiniteOracle(H3, frozenset({(0, 1, 0)})), (1, 0, 0), "left")
    right = TranslateOracle(FiniteOracle(H3, frozenset({(0, 1, 0)})), (1, 0, 0), "right")
    assert (1, 1, 1) in left and (1, 1, 0) in right
    assert (-5,) in InverseOracle(oracle_from_spec(Z, "multiples:5"))


def test_bounded_finite_oracle_refuses_outside_queries():
    A = FiniteOracle(Z, frozenset({(1,), (2,)}), folner_window(Z, 3))
    assert (1,) in A
    with pytest.raises(OracleUndefined):
        (10,) in A
    with pytest.raises(ParameterError):
        FiniteOracle(Z, frozenset({(9,)}), folner_window(Z, 3))


def test_runs_oracle():
    R = RunsOracle(2)
    # [2,3) ∪ [4,6) ∪ [8,11) ∪ [16,20) ...
    assert [x for x in range(0, 21) if (x,) in R] == [2, 4, 5, 8, 9, 10, 16, 17, 18, 19]


def test_product_oracle_factors_with_least_left_element():
    evens, odds = oracle_from_spec(Z, "evens"), oracle_from_spec(Z, "odds")
    P = ProductOracle(evens, odds, folner_window(Z, 4, "anchored"))
    assert P.factor((7,)) == ((0,), (7,))
    assert (8,) not in P
    assert oracle_from_spec(Z, P.spec()).factor((5,)) == ((0,), (5,))


def test_relative_density_is_exact():
    assert relative_density(oracle_from_spec(Z, "multiples:3"), folner_window(Z, 10, "anchored")) == Fraction(4, 10)


def test_evens_have_density_one_half_on_anchored_windows():
    params = DensityParams((24,), "window", "anchored")
    est = upper_density_estimate(oracle_from_spec(Z, "evens"), Z, params)
    assert est.value == Fraction(1, 2)
    assert est.evaluated == 24
    assert est.to_record()["value"] == "1/2"


def test_centered_windows_overshoot_on_odd_sizes():
    params = DensityParams((8,), "window", "centered")
    lower, upper = both_estimates(oracle_from_spec(Z, "evens"), Z, params)
    assert upper.value == Fraction(9, 17)
    assert lower.value == Fraction(8, 17)


def test_estimates_pick_the_first_optimum():
    A = FiniteOracle(Z, frozenset({(5,), (6,)}))
    params = DensityParams((2,), ((0,), (5,), (4,)), "anchored")
    est = upper_density_estimate(A, Z, params)
    assert est.value == 1
    assert est.shift == (5,)
    assert lower_density_estimate(A, Z, params).shift == (0,)


def test_runs_have_full_upper_and_zero_lower_density_at_scale():
    R = RunsOracle(2)
    params = DensityParams((4,), ((16,), (40,)), "anchored")
    assert upper_density_estimate(R, Z, params).value == 1
    assert lower_density_estimate(R, Z, params).value == 0


def test_heisenberg_residue_density():
    A = oracle_from_spec(H3, {"kind": "residue", "modulus": 2, "residues": [0], "coordinate": 2})
    params = DensityParams((2,), ((0, 0, 0), (1, 1, 1)), "anchored")
    assert density_estimate(A, H3, params).value == Fraction(1, 2)


def test_finite_model_density():
    G = FiniteCyclic(6)
    A = oracle_from_spec(G, "evens")
    assert upper_density_estimate(A, G, DensityParams((1,), "window", "anchored")).value == Fraction(1, 2)


def test_density_params_validation():
    with pytest.raises(ParameterError):
        DensityParams(())
    with pytest.raises(ParameterError):
        DensityParams((0,))
    with pytest.raises(ParameterError):
        DensityParams((4,), "everywhere")
    with pytest.raises(ParameterError):
        density_estimate(oracle_from_spec(Z, "evens"), Z, DensityParams(), "middle")
    p = DensityParams((8, 4, 8), ((1,), (0,)), "anchored")
    assert p.n_values == (4, 8)
    assert DensityParams.from_record(p.to_record()) == p


def test_grid_respects_search_budget():
    with budgets_scope(Budgets(search_budget=10)):
        with pytest.raises(SearchBudgetExceeded):
            density_grid(oracle_from_spec(Z, "evens"), Z, DensityParams((8,)))


def test_threaded_grid_keeps_order():
    A = oracle_from_spec(Z, "multiples:3")
    params = DensityParams((6, 9), "window", "centered")
    serial = density_grid(A, Z, params)
    with budgets_scope(Budgets(workers=4)):
        threaded = density_grid(A, Z, params)
    assert serial == threaded
