from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folner_density.density import DensityParams, RunsOracle, oracle_from_spec
from folner_density.errors import ParameterError
from folner_density.group_core import Heisenberg3, IntegerLattice, folner_window
from folner_density.lemmas import ChainPlan
from folner_density.setops import FAILURE, INCONCLUSIVE, SUCCESS
from folner_density.theorems import (
    default_delta_params,
    default_estimate_params,
    default_pullback_params,
    delta_intersection_cover,
    dense_embed_search,
    inverse_density_probe,
    jin_piecewise_check,
    jin_witness,
    pullback_search,
    pulled_back,
    root_delta_cover,
)

Z = IntegerLattice(1)


def S(spec):
    return oracle_from_spec(Z, spec)


def anchored(n):
    return folner_window(Z, n, "anchored")


# --- Δ-set intersections ---
def test_delta_cover_of_evens_and_multiples_of_three():
    P = list(anchored(60).elements)
    res = delta_intersection_cover([S("evens"), S("multiples:3")], 0, P, (0,), ChainPlan(anchored(360)),
                                   default_delta_params(Z))
    assert res.verdict == SUCCESS
    assert res.chain.achieved == Fraction(1, 6)
    assert res.r == 6
    assert res.L == tuple((x,) for x in range(6))
    assert res.within_r
    assert res.cover.covered
    assert all(row["ok"] for row in res.shadow)
    assert all(row["ok"] for row in res.delta_rows)
    # 60 points split evenly over six translates
    assert res.consequence == {"f": [0], "density": "1/6", "floor": "1/6", "holds": True}
    rec = res.to_record()
    assert rec["L"] == [[x] for x in range(6)]
    assert rec["bound_available"] is True


def test_delta_cover_with_an_empty_chain_fails():
    res = delta_intersection_cover([S("empty")], 0, [(0,), (1,)], (0,), ChainPlan(anchored(60)))
    assert res.verdict == FAILURE
    assert res.r is None
    assert res.cover.residual == ((0,), (1,))
    assert res.consequence == {}


def test_delta_cover_larger_than_r_is_not_success():
    # C = two multiples of 5 in [0,10) gives r = 5, but covering [0,30) takes at least ten translates
    res = delta_intersection_cover([S("multiples:5")], 0, list(anchored(30).elements), (0,),
                                   ChainPlan(anchored(10)))
    assert res.r is not None
    assert not res.within_r
    assert res.verdict == FAILURE
    assert res.to_record()["within_r"] is False


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=2, max_value=5), st.integers(min_value=4, max_value=24),
       st.integers(min_value=1, max_value=40))
def test_delta_cover_success_stays_within_r(m, e, p):
    res = delta_intersection_cover([S(f"multiples:{m}")], 0, list(anchored(p).elements), (0,),
                                   ChainPlan(anchored(e)))
    if res.verdict == SUCCESS:
        assert res.within_r


def test_delta_cover_preconditions():
    plan = ChainPlan(anchored(10))
    with pytest.raises(ParameterError):
        delta_intersection_cover([], 0, [(0,)], (0,), plan)
    with pytest.raises(ParameterError):
        delta_intersection_cover([S("evens")], -1, [(0,)], (0,), plan)


def test_root_cover():
    res = root_delta_cover([S("multiples:3")], 0, 2, anchored(10), ChainPlan(anchored(60)))
    assert res.verdict == SUCCESS
    assert res.base.L == ((0,), (2,), (4,))
    assert res.H == ((0,), (1,), (2,))
    assert res.missing_roots == ()
    assert res.residual == ()
    for g, h in res.witnesses:
        assert (g[0] - h[0]) % 3 == 0
    with pytest.raises(ParameterError):
        root_delta_cover([S("evens")], 0, 0, anchored(10), ChainPlan(anchored(60)))


# --- Jin's theorem ---
@pytest.mark.parametrize("a,b,k_bound,F", [
    (2, 2, 4, [0, 1]),
    (2, 3, 6, [0, 1, 2, 3, 4, 5]),
    (4, 4, 16, [0, 1, 2, 3]),
])
def test_jin_piecewise_bound(a, b, k_bound, F):
    A, B = S(f"multiples:{a}"), S(f"multiples:{b}")
    cert = jin_piecewise_check(A, B, ChainPlan(anchored(1008)), default_estimate_params(Z))
    assert cert.verdict == SUCCESS
    assert cert.k_bound == k_bound
    assert cert.F == tuple((x,) for x in F)
    assert len(cert.F) <= k_bound
    assert cert.pws.success
    assert all(row["ok"] for row in cert.factorizations)
    rec = cert.to_record()
    assert rec["within_k_bound"] is True
    assert rec["pws"]["k"] == k_bound


def test_jin_effective_bound_for_evens():
    cert = jin_piecewise_check(S("evens"), S("evens"), ChainPlan(anchored(1008)), default_estimate_params(Z))
    assert cert.beta_eff == 1
    assert cert.k_eff == 2
    assert cert.to_record()["within_k_eff"] is True


def test_jin_witness_for_a_subset():
    evens = S("evens")
    cert = jin_witness(evens, evens, evens, (0,), ChainPlan(anchored(120)), default_estimate_params(Z))
    assert cert.verdict == SUCCESS
    assert cert.F == ((0,),)
    assert cert.embed.success
    with pytest.raises(ParameterError):
        jin_witness(evens, evens, evens, (1,), ChainPlan(anchored(120)), default_estimate_params(Z))


def test_jin_witness_larger_than_k_eff_is_not_success():
    # X̃ = 4ℤ ∩ [0,16) gives k_eff = 4, while 64 points need at least twelve translates
    A = S("multiples:4")
    cert = jin_witness(A, A, S("whole"), (0,), ChainPlan(anchored(16)), default_estimate_params(Z),
                       P_window=anchored(64))
    assert cert.k_eff == 4
    assert len(cert.F) > 4
    assert cert.verdict != SUCCESS
    assert cert.to_record()["within_k_eff"] is False


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=2, max_value=4), st.integers(min_value=8, max_value=24),
       st.integers(min_value=1, max_value=48))
def test_jin_success_stays_within_k_eff(m, e, p):
    A = S(f"multiples:{m}")
    cert = jin_witness(A, A, S("whole"), (0,), ChainPlan(anchored(e)), default_estimate_params(Z),
                       P_window=anchored(p))
    if cert.verdict == SUCCESS:
        assert cert.to_record()["within_k_eff"] is True


def test_jin_witness_without_mass_is_inconclusive():
    empty = S("empty")
    cert = jin_witness(empty, S("evens"), S("whole"), (0,), ChainPlan(anchored(20)), default_estimate_params(Z))
    assert cert.verdict == INCONCLUSIVE
    assert cert.k_bound is None
    assert cert.F == ()


# --- pullbacks and dense embeddings ---
def test_pullback_search():
    C = [(x,) for x in range(0, 10, 2)]
    res = pullback_search(C, anchored(10))
    assert res.xi == (0,)
    assert res.estimate.value == Fraction(1, 2)
    assert res.C_density == Fraction(1, 2)
    assert len(res.B.points) == 5
    with pytest.raises(ParameterError):
        pullback_search([], anchored(10))
    with pytest.raises(ParameterError):
        pullback_search([(12,)], anchored(10))


def test_pulled_back_is_a_right_translate():
    H3 = Heisenberg3()
    B = pulled_back(H3, [(1, 1, 1)], (1, 0, 0))
    assert B.points == {(0, 1, 1)}
    assert H3.mul((0, 1, 1), (1, 0, 0)) == (1, 1, 1)


def test_dense_embedding():
    res = dense_embed_search([S("evens"), S("multiples:3")], ChainPlan(anchored(60)), default_pullback_params(Z))
    assert res.verdict == SUCCESS
    assert res.target == Fraction(3, 16)
    assert res.pullback.estimate.value >= res.target
    assert res.shortfall is False
    assert all(res.direct)
    assert all(e.success for e in res.embeds)
    assert res.to_record()["consequence_holds"] is True


def test_dense_embedding_needs_sets():
    with pytest.raises(ParameterError):
        dense_embed_search([], ChainPlan(anchored(10)))


# --- d(B) against d(B⁻¹) ---
def test_inverse_probe_on_an_abelian_model():
    params = DensityParams((8,), "window", "centered")
    probe = inverse_density_probe(RunsOracle(2), Z, params)
    assert probe.verdict == SUCCESS
    assert probe.equal


def test_inverse_probe_is_only_data_off_abelian_models():
    H3 = Heisenberg3()
    B = oracle_from_spec(H3, {"kind": "residue", "modulus": 2, "residues": [0], "coordinate": 2})
    probe = inverse_density_probe(B, H3, DensityParams((1,), "window", "anchored"))
    assert probe.verdict == INCONCLUSIVE
    rec = probe.to_record()
    assert rec["asserted"] is False
    assert rec["noncommuting"] == {"g": [1, 0, 0], "h": [0, 1, 0], "commutator": [0, 0, 1]}
