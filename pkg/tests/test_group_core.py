from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folner_density.errors import ArityError, ConfigError, ParameterError, WindowCapExceeded
from folner_density.group_core import (
    DirectProduct,
    FiniteCyclic,
    Heisenberg3,
    IntegerLattice,
    Window,
    box_window,
    element_defect,
    element_ops,
    folner_scan,
    folner_window,
    group_from_spec,
    invariance_defect,
    is_invariant,
    translate_overlap,
    window_from_spec,
)

Z = IntegerLattice(1)
H3 = Heisenberg3()

coords = st.integers(min_value=-40, max_value=40)
heis = st.tuples(coords, coords, coords)


# --- group law ---
def test_heisenberg_is_not_commutative():
    g, h = (1, 0, 0), (0, 1, 0)
    assert H3.mul(g, h) == (1, 1, 1)
    assert H3.mul(h, g) == (1, 1, 0)
    assert H3.commutator(g, h) == (0, 0, 1)
    assert not H3.is_abelian


def test_noncommuting_pair_names_the_commutator():
    assert H3.noncommuting_pair() == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert IntegerLattice(2).noncommuting_pair() is None
    assert DirectProduct((Z, FiniteCyclic(3))).noncommuting_pair() is None


@settings(max_examples=200)
@given(heis, heis, heis)
def test_heisenberg_associative(a, b, c):
    assert H3.mul(H3.mul(a, b), c) == H3.mul(a, H3.mul(b, c))


@settings(max_examples=200)
@given(heis)
def test_heisenberg_inverse_both_sides(g):
    e = H3.identity()
    assert H3.mul(g, H3.inv(g)) == e
    assert H3.mul(H3.inv(g), g) == e
    assert H3.mul(g, e) == g


def test_power_matches_repeated_product():
    assert H3.power((1, 1, 0), 2) == (2, 2, 1)
    assert H3.power((1, 1, 0), 3) == H3.mul(H3.mul((1, 1, 0), (1, 1, 0)), (1, 1, 0))
    assert H3.power((2, 3, 5), -1) == H3.inv((2, 3, 5))
    assert Z.power((3,), 4) == (12,)


def test_finite_cyclic_reduces_coordinates():
    G = FiniteCyclic(6)
    assert G.canonical(-1) == (5,)
    assert G.mul((4,), (5,)) == (3,)
    assert G.inv((2,)) == (4,)
    assert G.order() == 6
    assert G.is_finite


def test_direct_product_acts_per_factor():
    G = DirectProduct((Z, FiniteCyclic(2)))
    assert G.arity == 2
    assert G.mul((1, 1), (2, 1)) == (3, 0)
    assert G.inv((3, 1)) == (-3, 1)
    assert G.generators() == [(1, 0), (0, 1)]
    assert not G.is_finite


def test_group_from_spec():
    assert group_from_spec({"kind": "Zd", "d": 2}) == IntegerLattice(2)
    assert group_from_spec({"kind": "FiniteCyclic", "n": 5}) == FiniteCyclic(5)
    assert group_from_spec({"kind": "Heisenberg3"}) == H3
    prod = group_from_spec({"kind": "Product", "factors": [{"kind": "Zd"}, {"kind": "FiniteCyclic", "n": 3}]})
    assert prod.arity == 2
    with pytest.raises(ConfigError):
        group_from_spec({"kind": "free"})
    with pytest.raises(ConfigError):
        group_from_spec("Z")


def test_arity_is_checked():
    with pytest.raises(ArityError):
        Z.canonical((1, 2))
    with pytest.raises(ArityError):
        H3.canonical((1, 2))
    with pytest.raises(ArityError):
        element_ops(FiniteCyclic(4), "inv", (5,))
    assert element_ops(Z, "mul", (1,), (2,)) == (3,)
    assert element_ops(H3, "id") == (0, 0, 0)


def test_bad_models_are_rejected():
    with pytest.raises(ParameterError):
        IntegerLattice(0)
    with pytest.raises(ParameterError):
        FiniteCyclic(0)


# --- windows ---
def test_standard_window_sizes():
    assert folner_window(Z, 3).elements == tuple((x,) for x in range(-3, 4))
    assert folner_window(Z, 3, "anchored").size == 3
    assert folner_window(IntegerLattice(2), 2).size == 25
    assert folner_window(H3, 2).size == 5 * 5 * 9
    assert folner_window(H3, 2, "anchored").size == 2 * 2 * 4
    assert folner_window(FiniteCyclic(5), 100).size == 5


def test_window_cap():
    with pytest.raises(WindowCapExceeded):
        folner_window(IntegerLattice(2), 10, cap=100)
    with pytest.raises(ParameterError):
        folner_window(Z, 0)
    with pytest.raises(ParameterError):
        folner_window(Z, 3, "spiral")


def test_translates_and_inverse():
    W = folner_window(Z, 2, "anchored")
    assert W.translate((5,)).elements == ((5,), (6,))
    assert box_window(Z, (0,), (3,)).inverse().elements == ((-2,), (-1,), (0,))
    single = Window.from_elements(H3, [(0, 1, 0)])
    assert single.translate((1, 0, 0), "left").elements == ((1, 1, 1),)
    assert single.translate((1, 0, 0), "right").elements == ((1, 1, 0),)


def test_window_descriptor_round_trip():
    W = folner_window(Z, 4, "anchored").translate((3,))
    assert window_from_spec(Z, W.descriptor()) == W
    V = Window.from_elements(H3, [(0, 0, 0), (1, 2, 3)])
    assert window_from_spec(H3, V.descriptor()) == V
    assert window_from_spec(Z, {"shape": "interval", "lo": 0, "hi": 10}).size == 10
    assert window_from_spec(Z, 3) == folner_window(Z, 3)
    with pytest.raises(ConfigError):
        window_from_spec(Z, {"shape": "blob"})


def test_empty_explicit_window_rejected():
    with pytest.raises(ParameterError):
        Window.from_elements(Z, [])


# --- invariance ---
def test_interval_defect_is_exact():
    assert invariance_defect(folner_window(Z, 4), [(1,)]) == Fraction(2, 9)
    assert element_defect(folner_window(Z, 4), (100,)) == 2
    assert is_invariant(folner_window(Z, 16), [(1,)], Fraction(1, 10))
    assert not is_invariant(folner_window(Z, 8), [(1,)], Fraction(1, 10))


@pytest.mark.parametrize("h", [(1, 0), (0, -2), (3, 3), (7, -1)])
def test_box_overlap_matches_enumeration(h):
    W = box_window(IntegerLattice(2), (-2, 0), (3, 4))
    G = W.group
    brute = sum(1 for k in W if G.mul(h, k) in W)
    assert translate_overlap(W, h) == brute


def test_finite_window_has_no_defect():
    G = FiniteCyclic(7)
    assert invariance_defect(folner_window(G, 1), G.generators()) == 0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_lattice_windows_become_invariant(d):
    G = IntegerLattice(d)
    scan = folner_scan(G, G.generators(), Fraction(1, 10), [4, 8, 16, 32])
    defects = [row[2] for row in scan.rows]
    assert all(a >= b for a, b in zip(defects, defects[1:]))
    assert defects[0] == Fraction(2, 9)
    assert scan.first_invariant_n == 16


def test_heisenberg_windows_become_invariant():
    scan = folner_scan(H3, H3.generators(), Fraction(1, 10), [4, 8, 16])
    defects = [row[2] for row in scan.rows]
    assert all(a >= b for a, b in zip(defects, defects[1:]))
    assert defects[-1] < Fraction(1, 10)
    assert scan.first_invariant_n == 16
