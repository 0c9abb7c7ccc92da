"""
Finite forms of the combinatorial lemmas behind the density theorems.

- overlap_pair_bound: the Cauchy–Schwarz pigeonhole on a family of subsets of E
- window_delta_set / greedy_delta_cover: the window Δ-set 𝒟_ε^E(C) and its greedy cover
- concentration_shift: a translate concentrating D on C, with the averaging floor
- concentration_chain: iterated shifts with an explicit defect budget

Every statement is an exact rational inequality; window defects are carried
as explicit error terms instead of being sent to zero.
"""
from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from folner_density.config import SearchMeter, budgets
from folner_density.density import SetOracle
from folner_density.errors import ParameterError, WindowCapExceeded
from folner_density.group_core import (
    GroupElement,
    GroupModel,
    IntegerLattice,
    Window,
    folner_window,
    max_defect_over,
)
from folner_density.rationals import fmt, fmt_opt, pigeonhole_threshold
from folner_density.setops import FAILURE, INCONCLUSIVE, SUCCESS

log = logging.getLogger(__name__)

SIDES = ("right", "left")


# -----------------------
# Pigeonhole
# -----------------------
@dataclass(frozen=True)
class OverlapReport:
    E_size: int
    sizes: Tuple[int, ...]
    total: int
    pair_sum: int
    best_pair: Tuple[int, int]
    best_overlap: int
    bound: Fraction
    gamma: Optional[Fraction] = None
    eps: Optional[Fraction] = None
    threshold: Optional[int] = None
    lemma_applies: bool = False
    lemma_holds: Optional[bool] = None

    @property
    def cauchy_schwarz_holds(self) -> bool:
        # Σ_{λ≠μ}|C_λ∩C_μ| >= t²/|E| − t, cleared of denominators
        return self.pair_sum * self.E_size >= self.total * self.total - self.total * self.E_size

    def to_record(self) -> dict:
        return {
            "E_size": self.E_size,
            "sizes": list(self.sizes),
            "total": self.total,
            "pair_sum": self.pair_sum,
            "best_pair": list(self.best_pair),
            "best_overlap": self.best_overlap,
            "bound": fmt(self.bound),
            "cauchy_schwarz_holds": self.cauchy_schwarz_holds,
            "gamma": fmt_opt(self.gamma),
            "eps": fmt_opt(self.eps),
            "threshold": self.threshold,
            "lemma_applies": self.lemma_applies,
            "lemma_holds": self.lemma_holds,
        }


def overlap_pair_bound(E: Window, family: Sequence[Iterable[GroupElement]],
                       gamma=None, eps=None) -> OverlapReport:
    """Best overlapping pair of a family of subsets of E and the averaged bound
    (t²/|E| − t)/(m(m−1)).

    With γ and ε given, also checks the pigeonhole statement: if every member
    has at least γ|E| elements and m > ⌊(γ−ε)/(γ²−ε)⌋, some pair overlaps in
    more than ε|E| elements.
    """
    sets = [frozenset(tuple(c) for c in C) for C in family]
    m = len(sets)
    if m < 2:
        raise ParameterError(f"need at least two family members, got {m}")
    for i, C in enumerate(sets):
        if any(c not in E for c in C):
            raise ParameterError(f"family member {i} is not a subset of E")
    sizes = tuple(len(C) for C in sets)
    total = sum(sizes)
    pair_sum = 0
    best, best_pair = -1, (0, 1)
    for i, j in itertools.combinations(range(m), 2):
        o = len(sets[i] & sets[j])
        pair_sum += 2 * o
        if o > best:
            best, best_pair = o, (i, j)
    bound = (Fraction(total * total, E.size) - total) / (m * (m - 1))
    report = OverlapReport(E.size, sizes, total, pair_sum, best_pair, best, bound)
    if gamma is None or eps is None:
        return report
    gamma, eps = Fraction(gamma), Fraction(eps)
    threshold = pigeonhole_threshold(gamma, eps)
    applies = threshold is not None and m > threshold and all(s >= gamma * E.size for s in sizes)
    holds = (best > eps * E.size) if applies else None
    return OverlapReport(E.size, sizes, total, pair_sum, best_pair, best, bound,
                         gamma, eps, threshold, applies, holds)


# -----------------------
# Window Δ-sets and the greedy cover
# -----------------------
class WindowDelta:
    """𝒟_ε^E(C) = {g : |C ∩ gC ∩ E| > ε|E|}, evaluated lazily and memoized."""

    def __init__(self, C: Iterable[GroupElement], E: Window, eps, candidates: Optional[Window] = None):
        self.E = E
        self.group = E.group
        self.C = frozenset(tuple(c) for c in C)
        if any(c not in E for c in self.C):
            raise ParameterError("C must be a subset of E")
        self.eps = Fraction(eps)
        if self.eps < 0:
            raise ParameterError(f"ε must be >= 0, got {self.eps}")
        self.candidates = candidates
        self._overlaps: Dict[GroupElement, int] = {}

    def overlap(self, g: GroupElement) -> int:
        """|C ∩ gC ∩ E|."""
        g = tuple(g)
        if g not in self._overlaps:
            G = self.group
            g_inv = G.inv(g)
            self._overlaps[g] = sum(1 for c in self.C if G.mul(g_inv, c) in self.C)
        return self._overlaps[g]

    def __contains__(self, g) -> bool:
        g = tuple(g)
        if self.candidates is not None and g not in self.candidates:
            return False
        return self.overlap(g) > self.eps * self.E.size

    def members(self, pool: Iterable[GroupElement]) -> Tuple[GroupElement, ...]:
        return tuple(g for g in pool if g in self)


def window_delta_set(C: Iterable[GroupElement], E: Window, eps, candidates: Window) -> Tuple[GroupElement, ...]:
    """{g ∈ candidates | |C ∩ gC ∩ E| > ε|E|}, strict and exact."""
    return WindowDelta(C, E, eps, candidates).members(candidates)


@dataclass(frozen=True)
class BoundReplay:
    gamma_eff: Fraction
    eps_pairs: Fraction
    nominal: Optional[int]
    certified: Optional[int]
    branch: str
    holds: bool

    def to_record(self) -> dict:
        return {
            "gamma_eff": fmt(self.gamma_eff),
            "eps_pairs": fmt(self.eps_pairs),
            "nominal_bound": self.nominal,
            "certified_bound": self.certified,
            "branch": self.branch,
            "bound_holds": self.holds,
        }


def cover_bound_replay(size: int, translate_sizes: Sequence[int], pair_overlaps: Sequence[int],
                       E_size: int, eps) -> BoundReplay:
    """Recompute both cover bounds from the stored counts.

    γ_eff = min |gC ∩ E|/|E| over g ∈ F and ε_pairs = max |g_iC ∩ g_jC ∩ E|/|E|.
    The nominal bound uses ε, the certified one max(ε, ε_pairs); the family
    {g_iC ∩ E} then satisfies the pigeonhole premises, so |F| never exceeds
    the certified bound. Without a certified bound (γ_eff² <= max(ε, ε_pairs),
    e.g. some translate misses E) holds is False. Branch "half-density" is
    2|F|γ_eff <= 1, otherwise the overlap inequality does the work.
    """
    eps = Fraction(eps)
    gamma_eff = Fraction(min(translate_sizes), E_size) if translate_sizes else Fraction(0)
    eps_pairs = Fraction(max(pair_overlaps), E_size) if pair_overlaps else Fraction(0)
    nominal = pigeonhole_threshold(gamma_eff, eps)
    certified = pigeonhole_threshold(gamma_eff, max(eps, eps_pairs))
    branch = "half-density" if 2 * size * gamma_eff <= 1 else "overlap"
    holds = certified is not None and size <= certified
    return BoundReplay(gamma_eff, eps_pairs, nominal, certified, branch, holds)


def cover_verdict(covered: bool, bound: BoundReplay) -> str:
    """success only for a full cover inside its certified bound; no bound is inconclusive."""
    if not covered:
        return FAILURE
    if bound.certified is None:
        return INCONCLUSIVE
    return SUCCESS if bound.holds else FAILURE


@dataclass(frozen=True)
class DeltaCover:
    """Greedy cover P ⊆ F·𝒟 with the data needed to replay its bound."""

    F: Tuple[GroupElement, ...]
    assignment: Tuple[Tuple[GroupElement, GroupElement], ...]  # (p, f) with f⁻¹p ∈ 𝒟
    residual: Tuple[GroupElement, ...]
    eps: Fraction
    E_size: int
    translate_sizes: Tuple[int, ...]
    pair_overlaps: Tuple[int, ...]
    replay: BoundReplay

    @property
    def covered(self) -> bool:
        return not self.residual

    @property
    def within_nominal_bound(self) -> Optional[bool]:
        if self.replay.nominal is None:
            return None
        return len(self.F) <= self.replay.nominal

    def to_record(self) -> dict:
        return {
            "F": [list(f) for f in self.F],
            "size": len(self.F),
            "eps": fmt(self.eps),
            "E_size": self.E_size,
            "translate_sizes": list(self.translate_sizes),
            "pair_overlaps": list(self.pair_overlaps),
            "assignment": [[list(p), list(f)] for p, f in self.assignment],
            "residual": [list(r) for r in self.residual],
            "covered": self.covered,
            "within_nominal_bound": self.within_nominal_bound,
            **self.replay.to_record(),
        }


def translate_counts(C: FrozenSet[GroupElement], E: Window, F: Sequence[GroupElement]) -> Tuple[List[int], List[int]]:
    G = E.group
    translates = [frozenset(x for x in (G.mul(f, c) for c in C) if x in E) for f in F]
    sizes = [len(T) for T in translates]
    pairs = [len(translates[i] & translates[j]) for i, j in itertools.combinations(range(len(F)), 2)]
    return sizes, pairs


def greedy_delta_cover(C: Iterable[GroupElement], E: Window, eps, P: Sequence[GroupElement],
                       g0: GroupElement, candidates: Optional[Window] = None) -> DeltaCover:
    """F ⊆ P with g0 ∈ F and P ⊆ F·𝒟_ε^E(C), adding the least uncovered element of P each step."""
    D = WindowDelta(C, E, eps, candidates)
    G = E.group
    P = [G.canonical(p) for p in P]
    g0 = G.canonical(g0)
    if g0 not in P:
        raise ParameterError(f"g0 = {g0} is not in P")
    meter = SearchMeter("greedy delta cover")
    F: List[GroupElement] = [g0]
    owner: Dict[GroupElement, GroupElement] = {}
    identity_in_delta = G.identity() in D

    def assign(f: GroupElement) -> None:
        f_inv = G.inv(f)
        for p in P:
            if p not in owner:
                meter.spend()
                if G.mul(f_inv, p) in D:
                    owner[p] = f

    assign(g0)
    while len(owner) < len(set(P)):
        nxt = next(p for p in P if p not in owner)
        if not identity_in_delta:
            break
        F.append(nxt)
        assign(nxt)
    residual = tuple(p for p in P if p not in owner)
    if residual:
        log.warning("greedy cover left %d elements uncovered (identity not in the Δ-set)", len(residual))
    sizes, pairs = translate_counts(D.C, E, F)
    replay = cover_bound_replay(len(F), sizes, pairs, E.size, D.eps)
    assignment = tuple((p, owner[p]) for p in dict.fromkeys(P) if p in owner)
    return DeltaCover(tuple(F), assignment, residual, D.eps, E.size, tuple(sizes), tuple(pairs), replay)


# -----------------------
# Concentration shifts
# -----------------------
@dataclass(frozen=True)
class ShiftResult:
    side: str
    shift: GroupElement
    count: int
    achieved: Fraction
    floor: Fraction
    defect: Fraction
    density_C: Fraction
    density_D: Fraction

    @property
    def holds(self) -> bool:
        return self.achieved >= self.floor

    def to_record(self) -> dict:
        return {
            "side": self.side,
            "shift": list(self.shift),
            "count": self.count,
            "achieved": fmt(self.achieved),
            "floor": fmt(self.floor),
            "defect": fmt(self.defect),
            "density_C": fmt(self.density_C),
            "density_D": fmt(self.density_D),
            "holds": self.holds,
        }


def _line_counts(U: Window, V: Window, C: FrozenSet, D: FrozenSet) -> Optional[Dict[GroupElement, int]]:
    """#{(c, d) : c − d = ζ} for every ζ ∈ U when U, V are intervals of ℤ."""
    if not (U.is_box and V.is_box and U.group == IntegerLattice(1)):
        return None
    (u0,), (u1,) = U.lows, U.highs
    (v0,), (v1,) = V.lows, V.highs
    c_arr = np.zeros(u1 - u0, dtype=np.int64)
    d_arr = np.zeros(v1 - v0, dtype=np.int64)
    for (c,) in C:
        c_arr[c - u0] = 1
    for (d,) in D:
        d_arr[d - v0] = 1
    conv = np.convolve(c_arr, d_arr[::-1])
    nv = v1 - v0
    out = {}
    for z in range(u0, u1):
        k = z - u0 + v0 + nv - 1
        out[(z,)] = int(conv[k]) if 0 <= k < len(conv) else 0
    return out


def _pair_counts(G: GroupModel, C: FrozenSet, D: FrozenSet, side: str) -> Counter:
    """right: #{d : dζ ∈ C} keyed by ζ = d⁻¹c; left: #{d : ϑd ∈ C} keyed by ϑ = c·d⁻¹."""
    counts: Counter = Counter()
    for d in D:
        d_inv = G.inv(d)
        for c in C:
            counts[G.mul(d_inv, c) if side == "right" else G.mul(c, d_inv)] += 1
    return counts


def concentration_shift(U: Window, V: Window, C: Iterable[GroupElement], D: Iterable[GroupElement],
                        side: str = "right") -> ShiftResult:
    """Shift in U concentrating D on C.

    right: ζ ∈ U maximizing |Dζ ∩ C|/|V|, at least (|C|/|U|)(|D|/|V|) − max_d |dU△U|/|U|.
    left:  ϑ ∈ U maximizing |ϑD ∩ C|/|V|, with right-translate defects |Ud△U|/|U|.
    Ties go to the least element of U.
    """
    if side not in SIDES:
        raise ParameterError(f"side must be right or left, got {side!r}")
    C = frozenset(tuple(c) for c in C)
    D = frozenset(tuple(d) for d in D)
    if not C or not D:
        raise ParameterError("C and D must be nonempty")
    if any(c not in U for c in C):
        raise ParameterError("C must be a subset of U")
    if any(d not in V for d in D):
        raise ParameterError("D must be a subset of V")
    G = U.group
    counts = _line_counts(U, V, C, D) if G.is_abelian else None
    if counts is None:
        counts = _pair_counts(G, C, D, side)
    best, best_count = None, -1
    for z in U:
        n = counts.get(z, 0)
        if n > best_count:
            best, best_count = z, n
    defect = max_defect_over(U, D, "left" if side == "right" else "right")
    density_C = Fraction(len(C), U.size)
    density_D = Fraction(len(D), V.size)
    floor = density_C * density_D - defect
    return ShiftResult(side, best, best_count, Fraction(best_count, V.size), floor, defect,
                       density_C, density_D)


# -----------------------
# Concentration chains
# -----------------------
@dataclass(frozen=True)
class ChainPlan:
    """Base window E, per-step defect tolerance δ and the largest auxiliary window allowed."""

    E: Window
    delta: Optional[Fraction] = None
    max_aux: int = 1 << 16
    family: str = "centered"

    def tolerance(self, steps: int) -> Fraction:
        if self.delta is not None:
            return Fraction(self.delta)
        configured = budgets().chain_delta
        return configured if configured is not None else Fraction(1, 100 * (steps + 1))

    def to_record(self, steps: int) -> dict:
        return {"E": self.E.descriptor(), "delta": fmt(self.tolerance(steps)), "max_aux": self.max_aux,
                "family": self.family}


@dataclass(frozen=True)
class ChainStep:
    U: Dict[str, object]
    U_size: int
    shift: GroupElement  # ζ (right) or ϑ (left) in U
    xi: GroupElement  # ξ_i = ζ⁻¹ or η_i = ϑ⁻¹
    alpha: Fraction  # |A_i ∩ U|/|U|
    defect: Fraction
    floor: Fraction
    achieved: Fraction  # |D_i| / |E|

    def to_record(self) -> dict:
        return {
            "U": self.U, "U_size": self.U_size, "shift": list(self.shift), "xi": list(self.xi),
            "alpha": fmt(self.alpha), "defect": fmt(self.defect), "floor": fmt(self.floor),
            "achieved": fmt(self.achieved),
        }


@dataclass(frozen=True)
class ChainReport:
    side: str
    E: Window
    alpha0: Fraction
    steps: Tuple[ChainStep, ...]
    final: FrozenSet[GroupElement]
    tolerance: Fraction
    planned: int = 0

    @property
    def complete(self) -> bool:
        return len(self.steps) == self.planned

    @property
    def shifts(self) -> Tuple[GroupElement, ...]:
        return tuple(s.xi for s in self.steps)

    @property
    def achieved(self) -> Fraction:
        return Fraction(len(self.final), self.E.size)

    @property
    def budget(self) -> Fraction:
        return sum((s.defect for s in self.steps), Fraction(0))

    @property
    def product(self) -> Fraction:
        out = self.alpha0
        for s in self.steps:
            out *= s.alpha
        return out

    @property
    def holds(self) -> bool:
        return self.achieved >= self.product - self.budget

    @property
    def floor_positive(self) -> bool:
        return self.product - self.budget > 0

    def to_record(self) -> dict:
        return {
            "side": self.side,
            "E": self.E.descriptor(),
            "E_size": self.E.size,
            "alpha0": fmt(self.alpha0),
            "steps": [s.to_record() for s in self.steps],
            "shifts": [list(x) for x in self.shifts],
            "achieved": fmt(self.achieved),
            "product": fmt(self.product),
            "budget": fmt(self.budget),
            "tolerance": fmt(self.tolerance),
            "holds": self.holds,
            "floor_positive": self.floor_positive,
            "final_size": len(self.final),
            "complete": self.complete,
        }


def _aux_window(model: GroupModel, carrier: FrozenSet[GroupElement], side: str, tol: Fraction,
                plan: ChainPlan) -> Tuple[Window, Fraction]:
    """Smallest doubled standard window whose defect under the carrier is <= tol (or the largest allowed)."""
    defect_side = "left" if side == "right" else "right"
    n, last = 1, None
    while True:
        try:
            U = folner_window(model, n, plan.family, cap=plan.max_aux)
        except WindowCapExceeded:
            if last is None:
                raise
            log.info("auxiliary window capped at %d elements; defect %s exceeds %s",
                     last[0].size, last[1], tol)
            return last
        d = max_defect_over(U, carrier, defect_side)
        last = (U, d)
        if d <= tol or model.is_finite:
            return last
        n *= 2


def concentration_chain(sets: Sequence[SetOracle], plan: ChainPlan, side: str = "right") -> ChainReport:
    """Shift A_1…A_n one at a time onto A_0 ∩ E.

    right: D_i = D_{i−1} ∩ A_i ξ_i with ξ_i = ζ⁻¹ from the right concentration shift,
    so the final set is A_0 ∩ A_1ξ_1 ∩ … ∩ A_nξ_n ∩ E.
    left: D_i = D_{i−1} ∩ η_i A_i⁻¹ with η_i = ϑ⁻¹ from the left shift of A_i⁻¹.
    Each step's auxiliary window is a standard window nearly invariant under
    D_{i−1}; its defect is added to the budget.
    """
    if side not in SIDES:
        raise ParameterError(f"side must be right or left, got {side!r}")
    if not sets:
        raise ParameterError("a chain needs at least A_0")
    E = plan.E
    G = E.group
    tol = plan.tolerance(len(sets) - 1)
    D = frozenset(sets[0].members(E))
    alpha0 = Fraction(len(D), E.size)
    steps: List[ChainStep] = []
    for i, A in enumerate(sets[1:], start=1):
        if not D:
            log.warning("chain step %d: carrier is empty, stopping", i)
            break
        U, defect = _aux_window(G, D, side, tol, plan)
        if side == "right":
            C = frozenset(u for u in U if u in A)
        else:
            C = frozenset(u for u in U if G.inv(u) in A)
        alpha = Fraction(len(C), U.size)
        if not C:
            steps.append(ChainStep(U.descriptor(), U.size, G.identity(), G.identity(), alpha, defect,
                                   -defect, Fraction(0)))
            D = frozenset()
            break
        res = concentration_shift(U, E, C, D, side)
        z = res.shift
        xi = G.inv(z)
        if side == "right":
            D = frozenset(d for d in D if G.mul(d, z) in A)
        else:
            D = frozenset(d for d in D if G.inv(G.mul(z, d)) in A)
        steps.append(ChainStep(U.descriptor(), U.size, z, xi, alpha, res.defect, res.floor,
                               Fraction(len(D), E.size)))
        log.debug("chain step %d: |U|=%d shift=%s achieved=%s", i, U.size, z, steps[-1].achieved)
    return ChainReport(side, E, alpha0, tuple(steps), D, tol, len(sets) - 1)
