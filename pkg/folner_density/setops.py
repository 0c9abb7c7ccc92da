"""
Set algebra and structural predicates at window scale.

Products, inverses, Δ-sets, powers and roots are explicit finite sets cut out
by windows. Syndeticity, thickness, piecewise syndeticity and finite
embeddability are decided relative to finite pools and probe families; every
search returns the least witness in pool order and reports "inconclusive"
rather than a negative answer when it runs out of budget.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from folner_density.config import SearchMeter
from folner_density.density import (
    DensityEstimate,
    DensityParams,
    IntersectionOracle,
    InverseOracle,
    SetOracle,
    TranslateOracle,
    UnionOracle,
    upper_density_estimate,
)
from folner_density.errors import ConfigError, ParameterError, SearchBudgetExceeded
from folner_density.group_core import GroupElement, GroupModel, Window
from folner_density.rationals import fmt

log = logging.getLogger(__name__)

SUCCESS, FAILURE, INCONCLUSIVE = "success", "failure", "inconclusive"


def combine_verdicts(*verdicts: str) -> str:
    """Any failure fails; otherwise any inconclusive part makes the whole inconclusive."""
    if FAILURE in verdicts:
        return FAILURE
    return INCONCLUSIVE if INCONCLUSIVE in verdicts else SUCCESS



# -----------------------
# Probe families
# -----------------------
@dataclass(frozen=True)
class ProbeFamily:
    """Finite subsets H of G used to witness thickness and embeddability."""

    probes: Tuple[Tuple[GroupElement, ...], ...]
    description: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.probes:
            raise ParameterError("a probe family must be nonempty")
        clean = []
        for H in self.probes:
            H = tuple(sorted(set(tuple(h) for h in H)))
            if not H:
                raise ParameterError("probes must be nonempty")
            clean.append(H)
        object.__setattr__(self, "probes", tuple(clean))

    def __iter__(self):
        return iter(self.probes)

    def __len__(self) -> int:
        return len(self.probes)

    @classmethod
    def boxes_up_to(cls, model: GroupModel, s: int) -> "ProbeFamily":
        """Boxes [0,ℓ)^arity for ℓ = 1..s (finite coordinates clipped to their modulus)."""
        if s < 1:
            raise ParameterError(f"probe size must be >= 1, got {s}")
        seen, out = set(), []
        for ell in range(1, s + 1):
            sides = [range(min(ell, m) if m is not None else ell) for m in model.moduli()]
            H = tuple(itertools.product(*sides))
            if H not in seen:
                seen.add(H)
                out.append(H)
        return cls(tuple(out), {"intervals_up_to": s})

    @classmethod
    def explicit(cls, model: GroupModel, probes: Iterable[Iterable]) -> "ProbeFamily":
        probes = [list(H) for H in probes]
        return cls(tuple(tuple(model.canonical(h) for h in H) for H in probes),
                   {"explicit": [[list(model.canonical(h)) for h in H] for H in probes]})

    def to_record(self) -> dict:
        if "intervals_up_to" in self.description:
            return dict(self.description)
        return {"explicit": [[list(h) for h in H] for H in self.probes]}


def probes_from_spec(model: GroupModel, spec) -> ProbeFamily:
    """{"intervals_up_to": s}, {"explicit": [[...], ...]} or a bare list of probes."""
    if isinstance(spec, int) and not isinstance(spec, bool):
        return ProbeFamily.boxes_up_to(model, spec)
    if isinstance(spec, list):
        return ProbeFamily.explicit(model, spec)
    if isinstance(spec, dict):
        if "intervals_up_to" in spec:
            return ProbeFamily.boxes_up_to(model, int(spec["intervals_up_to"]))
        if "explicit" in spec:
            return ProbeFamily.explicit(model, spec["explicit"])
    raise ConfigError(f"bad probe family spec {spec!r}")


# -----------------------
# Certificates
# -----------------------
@dataclass(frozen=True)
class CoverCertificate:
    """F with |F| <= bound covering a region by translates."""

    F: Tuple[GroupElement, ...]
    bound: Optional[int]
    covered: Dict[str, object]
    residual: Tuple[GroupElement, ...] = ()
    method: str = "exhaustive"

    @property
    def ok(self) -> bool:
        return not self.residual and (self.bound is None or len(self.F) <= self.bound)

    def to_record(self) -> dict:
        return {
            "F": [list(f) for f in self.F],
            "size": len(self.F),
            "bound": self.bound,
            "covered": self.covered,
            "residual": [list(r) for r in self.residual],
            "method": self.method,
        }


@dataclass(frozen=True)
class SearchResult:
    """Verdict of a pool-relative search plus its certificate (on success)."""

    verdict: str
    certificate: Optional[CoverCertificate] = None
    method: str = "exhaustive"
    checks: int = 0
    witnesses: Dict[int, Optional[GroupElement]] = field(default_factory=dict)
    failing: Optional[Tuple[GroupElement, ...]] = None

    @property
    def success(self) -> bool:
        return self.verdict == SUCCESS


# -----------------------
# Set algebra
# -----------------------
def inverse_set(A: SetOracle, window: Window) -> FrozenSet[GroupElement]:
    """A⁻¹ ∩ window."""
    inv = window.group.inv
    return frozenset(g for g in window if inv(g) in A)


def product_witnesses(A: SetOracle, B: SetOracle, out_window: Window,
                      factor_windows: Tuple[Window, Window]) -> Dict[GroupElement, Tuple[GroupElement, GroupElement]]:
    """For each g in AB ∩ out_window, the factorization g = ab with the least a in W_A."""
    G = out_window.group
    WA, WB = factor_windows
    a_list = A.members(WA)
    b_set = B.restrict(WB)
    meter = SearchMeter("product set")
    out: Dict[GroupElement, Tuple[GroupElement, GroupElement]] = {}
    if len(b_set) < out_window.size:
        meter.spend(len(a_list) * len(b_set))
        b_sorted = sorted(b_set)
        for a in a_list:
            for b in b_sorted:
                g = G.mul(a, b)
                if g in out_window and g not in out:
                    out[g] = (a, b)
    else:
        meter.spend(out_window.size * len(a_list))
        for g in out_window:
            for a in a_list:
                b = G.mul(G.inv(a), g)
                if b in b_set:
                    out[g] = (a, b)
                    break
    return dict(sorted(out.items()))


def product_set(A: SetOracle, B: SetOracle, out_window: Window,
                factor_windows: Tuple[Window, Window]) -> FrozenSet[GroupElement]:
    """{ab | a ∈ A∩W_A, b ∈ B∩W_B} ∩ out_window."""
    return frozenset(product_witnesses(A, B, out_window, factor_windows))


def difference_set(A: SetOracle, out_window: Window, factor_window: Window) -> FrozenSet[GroupElement]:
    """AA⁻¹ ∩ out_window with both factors drawn from factor_window."""
    return product_set(A, InverseOracle(A), out_window, (factor_window, factor_window))


def delta_set_estimates(A: SetOracle, candidates: Iterable[GroupElement],
                        params: DensityParams) -> Dict[GroupElement, DensityEstimate]:
    """Upper density estimate of A ∩ gA for each candidate g."""
    out = {}
    for g in candidates:
        shifted = IntersectionOracle((A, TranslateOracle(A, g, "left")))
        out[g] = upper_density_estimate(shifted, A.group, params)
    return out


def delta_set(A: SetOracle, eps, candidates: Window, params: DensityParams) -> Tuple[GroupElement, ...]:
    """{g ∈ candidates | d(A ∩ gA) > ε} with the strict inequality, exactly."""
    eps = Fraction(eps)
    if eps < 0:
        raise ParameterError(f"ε must be >= 0, got {eps}")
    estimates = delta_set_estimates(A, candidates, params)
    return tuple(g for g in candidates if estimates[g].value > eps)


def root_power_sets(A: SetOracle, k: int, window: Window, mode: str = "root") -> FrozenSet[GroupElement]:
    """power: {g^k | g ∈ A∩W}; root: {g ∈ W | g^k ∈ A}."""
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    G = window.group
    if mode == "power":
        return frozenset(G.power(g, k) for g in window if g in A)
    if mode == "root":
        return frozenset(g for g in window if G.power(g, k) in A)
    raise ParameterError(f"mode must be power or root, got {mode!r}")


# -----------------------
# Syndeticity
# -----------------------
def _cover_masks(A: SetOracle, region: Sequence[GroupElement], pool: Sequence[GroupElement],
                 meter: SearchMeter) -> List[int]:
    """Bitmask over region of {r : f⁻¹r ∈ A} for each pool element f."""
    G = A.group
    masks = []
    for f in pool:
        meter.spend(len(region))
        f_inv = G.inv(f)
        m = 0
        for i, r in enumerate(region):
            if G.mul(f_inv, r) in A:
                m |= 1 << i
        masks.append(m)
    return masks


def _greedy_cover(masks: Sequence[int], full: int, k: int) -> Optional[List[int]]:
    chosen, covered = [], 0
    while covered != full and len(chosen) < k:
        gains = [bin(m & ~covered).count("1") for m in masks]
        best = max(range(len(masks)), key=lambda i: (gains[i], -i))
        if gains[best] == 0:
            return None
        chosen.append(best)
        covered |= masks[best]
    return sorted(chosen) if covered == full else None


def syndetic_cover_search(A: SetOracle, k: int, region: Window, F_pool: Window,
                          strict: bool = False) -> SearchResult:
    """Least F ⊆ pool (by size, then pool order) with |F| <= k and region ⊆ FA.

    Exhaustive while the budget lasts; afterwards a greedy pass may still find a
    cover (method "greedy"), otherwise the verdict is inconclusive. strict
    restricts F to A ∩ pool.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    pool = [f for f in F_pool if not strict or f in A]
    region_elems = region.elements
    full = (1 << len(region_elems)) - 1
    meter = SearchMeter("syndetic cover")
    covered_desc = {"region": region.descriptor(), "pool": F_pool.descriptor(), "strict": strict}
    try:
        masks = _cover_masks(A, region_elems, pool, meter)
    except SearchBudgetExceeded:
        return SearchResult(INCONCLUSIVE, method="budget", checks=meter.spent)
    # pool elements with an identical mask to an earlier one never start a lesser cover
    reps, seen = [], set()
    for i, m in enumerate(masks):
        if m and m not in seen:
            seen.add(m)
            reps.append(i)
    try:
        for size in range(1, k + 1):
            for combo in itertools.combinations(reps, size):
                meter.spend()
                acc = 0
                for i in combo:
                    acc |= masks[i]
                if acc == full:
                    F = tuple(pool[i] for i in combo)
                    log.info("syndetic cover of size %d found after %d checks", size, meter.spent)
                    return SearchResult(SUCCESS, CoverCertificate(F, k, covered_desc), "exhaustive",
                                        meter.spent)
    except SearchBudgetExceeded:
        greedy = _greedy_cover(masks, full, k)
        if greedy is not None:
            F = tuple(pool[i] for i in greedy)
            return SearchResult(SUCCESS, CoverCertificate(F, k, covered_desc, method="greedy"), "greedy",
                                meter.spent)
        log.warning("syndetic search exhausted its budget of %d checks", meter.budget)
        return SearchResult(INCONCLUSIVE, method="budget", checks=meter.spent)
    return SearchResult(FAILURE, method="exhaustive", checks=meter.spent)


def covers_region(A: SetOracle, F: Sequence[GroupElement], region: Iterable[GroupElement]) -> Tuple[GroupElement, ...]:
    """Residual: elements r of the region with f⁻¹r ∉ A for every f ∈ F."""
    G = A.group
    F_inv = [G.inv(f) for f in F]
    return tuple(r for r in region if not any(G.mul(fi, r) in A for fi in F_inv))


def syndetic_density_consequence(A: SetOracle, F: Sequence[GroupElement],
                                 region: Window) -> Tuple[GroupElement, Fraction]:
    """If region ⊆ FA, some f ∈ F has |A ∩ f⁻¹W| / |W| >= 1/|F|; returns the best such f."""
    if not F:
        raise ParameterError("F must be nonempty")
    best_f, best = None, Fraction(-1)
    for f in F:
        d = Fraction(A.count(region.translate(region.group.inv(f), "left")), region.size)
        if d > best:
            best_f, best = f, d
    return best_f, best


# -----------------------
# Thickness and embeddability
# -----------------------
def _least_right_translate(H: Sequence[GroupElement], target: SetOracle, pool: Sequence[GroupElement],
                           meter: SearchMeter) -> Optional[GroupElement]:
    """Least x in pool with Hx ⊆ target."""
    mul = target.group.mul
    for x in pool:
        meter.spend(len(H))
        if all(mul(h, x) in target for h in H):
            return x
    return None


def _probe_search(target: SetOracle, probes: Iterable[Tuple[GroupElement, ...]], pool: Window,
                  what: str, meter: Optional[SearchMeter] = None) -> SearchResult:
    meter = meter or SearchMeter(what)
    pool_elems = pool.elements
    witnesses: Dict[int, Optional[GroupElement]] = {}
    try:
        for idx, H in enumerate(probes):
            x = _least_right_translate(H, target, pool_elems, meter)
            witnesses[idx] = x
            if x is None:
                return SearchResult(FAILURE, checks=meter.spent, witnesses=witnesses, failing=tuple(H))
    except SearchBudgetExceeded:
        return SearchResult(INCONCLUSIVE, method="budget", checks=meter.spent, witnesses=witnesses)
    return SearchResult(SUCCESS, checks=meter.spent, witnesses=witnesses)


def thickness_check(A: SetOracle, probes: ProbeFamily, shift_pool: Window) -> SearchResult:
    """For each probe H the least x in the pool with Hx ⊆ A, or the first failing probe."""
    return _probe_search(A, probes, shift_pool, "thickness")


def finite_embed_check(A_probes: ProbeFamily, B: SetOracle, shift_pool: Window,
                       A: Optional[SetOracle] = None) -> SearchResult:
    """Per-probe least x with Hx ⊆ B; success on every probe is window-scale evidence for A ◁ B."""
    if A is not None:
        for H in A_probes:
            if not all(h in A for h in H):
                raise ParameterError(f"probe {H} is not contained in A")
    return _probe_search(B, A_probes, shift_pool, "finite embeddability")


def translate_union(A: SetOracle, F: Sequence[GroupElement]) -> SetOracle:
    """FA = ⋃_{f∈F} fA."""
    return UnionOracle(tuple(TranslateOracle(A, f, "left") for f in F))


@dataclass(frozen=True)
class PiecewiseResult:
    verdict: str
    F: Optional[Tuple[GroupElement, ...]] = None
    thickness: Optional[SearchResult] = None
    method: str = "exhaustive"
    checks: int = 0

    @property
    def success(self) -> bool:
        return self.verdict == SUCCESS


def piecewise_syndetic_check(A: SetOracle, k: int, probes: ProbeFamily, F_pool: Window,
                             shift_pool: Window, F: Optional[Sequence[GroupElement]] = None,
                             strict: bool = False) -> PiecewiseResult:
    """F with |F| <= k such that FA passes the thickness check on every probe.

    With F given only that F is checked; otherwise F ranges over subsets of the
    pool by size, then pool order.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    meter = SearchMeter("piecewise syndetic")
    if F is not None:
        F = tuple(A.group.canonical(f) for f in F)
        if len(F) > k:
            return PiecewiseResult(FAILURE, F, None, "fixed")
        res = _probe_search(translate_union(A, F), probes, shift_pool, "piecewise syndetic", meter)
        return PiecewiseResult(res.verdict, F, res, "fixed", meter.spent)
    pool = [f for f in F_pool if not strict or f in A]
    try:
        for size in range(1, k + 1):
            for combo in itertools.combinations(pool, size):
                res = _probe_search(translate_union(A, combo), probes, shift_pool, "piecewise syndetic", meter)
                if res.verdict == INCONCLUSIVE:
                    raise SearchBudgetExceeded("piecewise syndetic", meter.budget)
                if res.success:
                    return PiecewiseResult(SUCCESS, tuple(combo), res, "exhaustive", meter.spent)
    except SearchBudgetExceeded:
        log.warning("piecewise syndetic search exhausted its budget of %d checks", meter.budget)
        return PiecewiseResult(INCONCLUSIVE, None, None, "budget", meter.spent)
    return PiecewiseResult(FAILURE, None, None, "exhaustive", meter.spent)


def piecewise_density_consequence(A: SetOracle, F: Sequence[GroupElement], H: Sequence[GroupElement],
                                  x: GroupElement) -> Tuple[GroupElement, Fraction]:
    """Hx ⊆ FA forces some f with |A ∩ f⁻¹Hx| >= |H|/|F|; returns the best f and that density."""
    G = A.group
    Hx = [G.mul(h, x) for h in H]
    best_f, best = None, Fraction(-1)
    for f in F:
        f_inv = G.inv(f)
        d = Fraction(sum(1 for y in Hx if G.mul(f_inv, y) in A), len(Hx))
        if d > best:
            best_f, best = f, d
    return best_f, best


def embed_difference_check(B: SetOracle, probes: ProbeFamily,
                           witnesses: Dict[int, Optional[GroupElement]]) -> List[dict]:
    """Every h·h′⁻¹ within a witnessed probe factors as (hx)(h′x)⁻¹ with hx, h′x ∈ B."""
    G = B.group
    rows = []
    for idx, H in enumerate(probes):
        x = witnesses.get(idx)
        if x is None:
            continue
        for h, h2 in itertools.permutations(H, 2):
            b, b2 = G.mul(h, x), G.mul(h2, x)
            diff = G.mul(h, G.inv(h2))
            ok = b in B and b2 in B and G.mul(b, G.inv(b2)) == diff
            rows.append({"difference": list(diff), "b": list(b), "b2": list(b2), "ok": ok})
    return rows


def describe_result(result: SearchResult, probes: Optional[ProbeFamily] = None) -> dict:
    out = {"verdict": result.verdict, "method": result.method, "checks": result.checks}
    if result.certificate is not None:
        out["certificate"] = result.certificate.to_record()
    if result.witnesses:
        rows = []
        for idx, x in sorted(result.witnesses.items()):
            row = {"probe_index": idx, "x": None if x is None else list(x)}
            if probes is not None:
                row["probe"] = [list(h) for h in probes.probes[idx]]
            rows.append(row)
        out["witnesses"] = rows
    if result.failing is not None:
        out["failing_probe"] = [list(h) for h in result.failing]
    return out


def density_record(f: GroupElement, d: Fraction) -> dict:
    return {"f": list(f), "density": fmt(d)}
