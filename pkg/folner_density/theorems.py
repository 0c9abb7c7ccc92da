"""
Constructive window-scale verifiers for the density theorems.

- delta_intersection_cover / root_delta_cover: finitely many translates of
  ⋂ Δ_ε(A_i) (or of its k-th roots) cover a region
- jin_witness / jin_piecewise_check: AB is piecewise k-syndetic with k <= 1/αβ
- pullback_search / dense_embed_search: a set of density >= Π α_i that
  embeds into every A_i
- inverse_density_probe: densities of B and B⁻¹ side by side

Each verifier runs the construction from the proof on a finite window E,
then re-checks every inclusion it produced. Bounds come from the densities
the run actually achieved, so certificates stay sound on small windows.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from folner_density.density import (
    DensityEstimate,
    DensityParams,
    FiniteOracle,
    IntersectionOracle,
    InverseOracle,
    ProductOracle,
    SetOracle,
    TranslateOracle,
    WholeOracle,
    both_estimates,
    upper_density_estimate,
)
from folner_density.errors import ParameterError
from folner_density.group_core import GroupElement, GroupModel, Window, folner_window
from folner_density.lemmas import ChainPlan, ChainReport, DeltaCover, concentration_chain, greedy_delta_cover
from folner_density.rationals import fmt, inverse_product_bound, pigeonhole_threshold
from folner_density.setops import (
    FAILURE,
    INCONCLUSIVE,
    SUCCESS,
    PiecewiseResult,
    ProbeFamily,
    SearchResult,
    combine_verdicts,
    describe_result,
    embed_difference_check,
    finite_embed_check,
    piecewise_syndetic_check,
    translate_union,
)

log = logging.getLogger(__name__)


def default_delta_params(model: GroupModel) -> DensityParams:
    """One centered window at the identity; large on ℤ, small on higher-rank models."""
    n = 32 if model.arity == 1 else 4
    return DensityParams((n,), (model.identity(),), "centered")


def default_pullback_params(model: GroupModel) -> DensityParams:
    return DensityParams((8,), (model.identity(),), "anchored")


def default_estimate_params(model: GroupModel) -> DensityParams:
    """Anchored windows scanned over their own translates; n = 24 is a multiple of small periods."""
    return DensityParams((24,) if model.arity == 1 else (4,), "window", "anchored")


class DeltaMembership:
    """g ∈ ⋂ Δ_ε(A_i), decided by memoized upper estimates of d(A_i ∩ gA_i)."""

    def __init__(self, sets: Sequence[SetOracle], eps, params: DensityParams):
        self.sets = tuple(sets)
        self.eps = Fraction(eps)
        self.params = params
        self._memo: Dict[GroupElement, Tuple[DensityEstimate, ...]] = {}

    def estimates(self, g: GroupElement) -> Tuple[DensityEstimate, ...]:
        g = tuple(g)
        if g not in self._memo:
            out = []
            for A in self.sets:
                both = IntersectionOracle((A, TranslateOracle(A, g, "left")))
                out.append(upper_density_estimate(both, A.group, self.params))
            self._memo[g] = tuple(out)
        return self._memo[g]

    def __contains__(self, g) -> bool:
        return all(e.value > self.eps for e in self.estimates(g))

    def rows(self) -> List[dict]:
        return [
            {"g": list(g), "values": [fmt(e.value) for e in ests],
             "ok": all(e.value > self.eps for e in ests)}
            for g, ests in sorted(self._memo.items())
        ]


# -----------------------
# Δ-set intersection covers
# -----------------------
@dataclass(frozen=True)
class DeltaIntersectionCover:
    verdict: str
    eps: Fraction
    chain: ChainReport
    cover: DeltaCover
    r: Optional[int]
    shadow: Tuple[dict, ...]
    delta_rows: Tuple[dict, ...]
    params: DensityParams
    consequence: Dict[str, object] = field(default_factory=dict)

    @property
    def L(self) -> Tuple[GroupElement, ...]:
        return self.cover.F

    @property
    def within_r(self) -> Optional[bool]:
        return None if self.r is None else len(self.L) <= self.r

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "eps": fmt(self.eps),
            "beta_eff": fmt(self.chain.achieved),
            "r": self.r,
            "bound_available": self.r is not None,
            "within_r": self.within_r,
            "L": [list(l) for l in self.L],
            "chain": self.chain.to_record(),
            "cover": self.cover.to_record(),
            "shadow": list(self.shadow),
            "delta_checks": list(self.delta_rows),
            "delta_params": self.params.to_record(),
            "consequence": self.consequence,
        }


def shadow_rows(sets: Sequence[SetOracle], xis: Sequence[GroupElement], E: Window,
                gs: Sequence[GroupElement], eps: Fraction) -> List[dict]:
    """|(A_jξ_j) ∩ g(A_jξ_j) ∩ E| for each g and j, against ε|E|."""
    G = E.group
    shifted = [TranslateOracle(A, xi, "right") for A, xi in zip(sets, xis)]
    members = [frozenset(S.members(E)) for S in shifted]
    rows = []
    for g in gs:
        g_inv = G.inv(g)
        overlaps = [sum(1 for x in M if G.mul(g_inv, x) in S) for M, S in zip(members, shifted)]
        rows.append({"g": list(g), "overlaps": overlaps,
                     "ok": all(o > eps * E.size for o in overlaps)})
    return rows


def delta_cover_verdict(checks_ok: bool, size: int, r: Optional[int]) -> str:
    """A cover that replays is success only with |L| <= r; without r it is inconclusive."""
    if not checks_ok:
        return FAILURE
    if r is None:
        return INCONCLUSIVE
    return SUCCESS if size <= r else FAILURE


def delta_intersection_cover(sets: Sequence[SetOracle], eps, P: Sequence[GroupElement],
                             g0: GroupElement, plan: ChainPlan,
                             params: Optional[DensityParams] = None) -> DeltaIntersectionCover:
    """L ∋ g0 with P ⊆ L·⋂ Δ_ε(A_i) and |L| <= ⌊(β−ε)/(β²−ε)⌋ for the achieved β.

    C = ⋂ A_iξ_i ∩ E comes from a right concentration chain started at E;
    the greedy cover by 𝒟_ε^E(C) is then checked twice: against the shifted
    sets on E, and against upper estimates of d(A_i ∩ gA_i).
    """
    if not sets:
        raise ParameterError("need at least one set")
    eps = Fraction(eps)
    if eps < 0:
        raise ParameterError(f"ε must be >= 0, got {eps}")
    E = plan.E
    G = E.group
    params = params or default_delta_params(G)
    chain = concentration_chain([WholeOracle(G)] + list(sets), plan, "right")
    beta = chain.achieved
    r = pigeonhole_threshold(beta, eps)
    if r is None:
        log.warning("β_eff² = %s <= ε; the cover is reported without a size bound", beta * beta)
    if not chain.final:
        log.warning("chain produced an empty set; Δ-cover is vacuous")
    cover = greedy_delta_cover(chain.final, E, eps, P, g0)

    gs = list(dict.fromkeys(G.mul(G.inv(f), p) for p, f in cover.assignment))
    shadow = shadow_rows(sets, chain.shifts, E, gs, eps) if chain.complete else []
    delta = DeltaMembership(sets, eps, params)
    delta_ok = all(g in delta for g in gs)

    counts = Counter(f for _, f in cover.assignment)
    consequence: Dict[str, object] = {}
    if counts:
        f_best = min(counts, key=lambda f: (-counts[f], f))
        share = Fraction(counts[f_best], len(set(P)))
        consequence = {"f": list(f_best), "density": fmt(share),
                       "floor": fmt(Fraction(1, len(cover.F))),
                       "holds": share * len(cover.F) >= 1}

    ok = chain.complete and cover.covered and delta_ok and all(row["ok"] for row in shadow)
    verdict = delta_cover_verdict(ok, len(cover.F), r)
    log.info("delta cover: |L|=%d r=%s verdict=%s", len(cover.F), r, verdict)
    return DeltaIntersectionCover(verdict, eps, chain, cover, r, tuple(shadow), tuple(delta.rows()),
                                  params, consequence)


@dataclass(frozen=True)
class RootCover:
    verdict: str
    k: int
    base: DeltaIntersectionCover
    H: Tuple[GroupElement, ...]
    missing_roots: Tuple[GroupElement, ...]
    witnesses: Tuple[Tuple[GroupElement, GroupElement], ...]  # (g, h) with (h⁻¹g)^k ∈ ⋂Δ
    residual: Tuple[GroupElement, ...]
    region: Window
    root_checks: Tuple[dict, ...]

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "k": self.k,
            "H": [list(h) for h in self.H],
            "missing_roots": [list(l) for l in self.missing_roots],
            "region": self.region.descriptor(),
            "witnesses": [[list(g), list(h)] for g, h in self.witnesses],
            "residual": [list(g) for g in self.residual],
            "root_checks": list(self.root_checks),
            "base": self.base.to_record(),
        }


def roots_verdict(base_verdict: str, missing: Sequence, residual: Sequence) -> str:
    if missing or residual:
        return FAILURE
    return base_verdict


def root_delta_cover(sets: Sequence[SetOracle], eps, k: int, base_window: Window, plan: ChainPlan,
                     params: Optional[DensityParams] = None) -> RootCover:
    """H with base_window ⊆ H·⋂ᵏ√Δ_ε(A_i), where H^{(k)} is a Δ-cover L of the k-th powers.

    P = {g^k | g ∈ base_window}; each l ∈ L gets its least k-th root in the
    base window. A g in the region is covered by h when (h⁻¹g)^k ∈ ⋂Δ_ε(A_i).
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    G = base_window.group
    roots: Dict[GroupElement, GroupElement] = {}
    for g in base_window:
        roots.setdefault(G.power(g, k), g)
    P = sorted(roots)
    g0 = G.power(base_window.least(), k) if G.identity() not in base_window else G.identity()
    base = delta_intersection_cover(sets, eps, P, g0, plan, params)
    H, missing = [], []
    for l in base.L:
        if l in roots:
            H.append(roots[l])
        else:
            missing.append(l)
    delta = DeltaMembership(sets, eps, base.params)
    witnesses, residual = [], []
    for g in base_window:
        h = next((h for h in H if G.power(G.mul(G.inv(h), g), k) in delta), None)
        if h is None:
            residual.append(g)
        else:
            witnesses.append((g, h))
    return RootCover(roots_verdict(base.verdict, missing, residual), k, base, tuple(H), tuple(missing),
                     tuple(witnesses), tuple(residual), base_window, tuple(delta.rows()))


# -----------------------
# Jin's theorem with the 1/αβ bound
# -----------------------
@dataclass(frozen=True)
class JinCertificate:
    verdict: str
    alpha: DensityEstimate
    beta: DensityEstimate
    k_bound: Optional[int]
    chain: ChainReport
    eta: Optional[GroupElement]
    w: GroupElement
    cover: Optional[DeltaCover]
    factorizations: Tuple[dict, ...]
    embed: Optional[SearchResult]
    probes: Optional[ProbeFamily]
    factor_window: Optional[Window]
    pws: Optional[PiecewiseResult] = None
    pws_probes: Optional[ProbeFamily] = None
    pws_factor_window: Optional[Window] = None

    @property
    def F(self) -> Tuple[GroupElement, ...]:
        return self.cover.F if self.cover is not None else ()

    @property
    def alpha_eff(self) -> Fraction:
        return self.chain.alpha0

    @property
    def beta_eff(self) -> Fraction:
        a_size = self.chain.alpha0 * self.chain.E.size
        return Fraction(len(self.chain.final), a_size) if a_size else Fraction(0)

    @property
    def k_eff(self) -> Optional[int]:
        return inverse_product_bound(self.alpha_eff, self.beta_eff)

    def _within(self, bound: Optional[int]) -> Optional[bool]:
        return None if bound is None or self.cover is None else len(self.F) <= bound

    def to_record(self) -> dict:
        out = {
            "verdict": self.verdict,
            "alpha": self.alpha.to_record(),
            "beta": self.beta.to_record(),
            "k_bound": self.k_bound,
            "within_k_bound": self._within(self.k_bound),
            "alpha_eff": fmt(self.alpha_eff),
            "beta_eff": fmt(self.beta_eff),
            "k_eff": self.k_eff,
            "within_k_eff": self._within(self.k_eff),
            "k_certified": self.cover.replay.certified if self.cover is not None else None,
            "eta": None if self.eta is None else list(self.eta),
            "w": list(self.w),
            "F": [list(f) for f in self.F],
            "chain": self.chain.to_record(),
            "cover": None if self.cover is None else self.cover.to_record(),
            "factorizations": list(self.factorizations),
            "embed": None if self.embed is None else describe_result(self.embed, self.probes),
            "factor_window": None if self.factor_window is None else self.factor_window.descriptor(),
        }
        if self.pws is not None:
            out["pws"] = {
                "verdict": self.pws.verdict,
                "k": self.k_bound if self.k_bound is not None else len(self.F),
                "F": [list(f) for f in (self.pws.F or ())],
                "method": self.pws.method,
                "checks": self.pws.checks,
                "thickness": None if self.pws.thickness is None
                else describe_result(self.pws.thickness, self.pws_probes),
                "factor_window": self.pws_factor_window.descriptor(),
            }
        return out


def _factorize(G: GroupModel, p: GroupElement, f: GroupElement, X_tilde: Sequence[GroupElement],
               X_set: frozenset, eta: GroupElement, A: SetOracle, B: SetOracle) -> dict:
    """pη = f·a·b from f⁻¹p = z·z′⁻¹ with z, z′ ∈ X̃ = A ∩ ηB⁻¹ ∩ E."""
    y = G.mul(G.inv(f), p)
    y_inv = G.inv(y)
    for z in X_tilde:
        z2 = G.mul(y_inv, z)
        if z2 in X_set:
            a, b = z, G.mul(G.inv(z2), eta)
            ok = a in A and b in B and G.mul(p, eta) == G.mul(G.mul(f, a), b)
            return {"g": list(p), "f": list(f), "a": list(a), "b": list(b), "ok": ok}
    return {"g": list(p), "f": list(f), "a": None, "b": None, "ok": False}


def jin_verdict(checks_ok: bool, embed_verdict: str, size: int, k_eff: Optional[int]) -> str:
    if not checks_ok:
        return FAILURE
    if embed_verdict != SUCCESS:
        return embed_verdict
    if k_eff is None:
        return INCONCLUSIVE
    return SUCCESS if size <= k_eff else FAILURE


def jin_witness(A: SetOracle, B: SetOracle, X: SetOracle, w: GroupElement, plan: ChainPlan,
                params: DensityParams, P_window: Optional[Window] = None,
                probes: Optional[ProbeFamily] = None,
                shift_pool: Optional[Window] = None) -> JinCertificate:
    """F ∋ w with X ◁ F·A·B and |F| <= ⌊1/(α_eff β_eff)⌋.

    A left concentration chain gives X̃ = A ∩ ηB⁻¹ ∩ E; the greedy cover of
    X ∩ P_window by 𝒟_0^E(X̃) seeded at w is F. Every covered g factors as
    gη = f·a·b, so the window part of X right-translates into FAB by η.
    """
    G = A.group
    w = G.canonical(w)
    if w not in X:
        raise ParameterError(f"w = {w} is not in X")
    alpha = upper_density_estimate(A, G, params)
    beta = upper_density_estimate(B, G, params)
    k_bound = inverse_product_bound(alpha.value, beta.value)
    chain = concentration_chain([A, B], plan, "left")
    if not chain.complete or not chain.final:
        log.warning("Jin chain left X̃ empty; no certificate at this window size")
        return JinCertificate(INCONCLUSIVE, alpha, beta, k_bound, chain, None, w, None, (), None,
                              None, None)
    eta = chain.steps[0].xi
    E = plan.E
    P = X.members(P_window or E)
    if w not in P:
        raise ParameterError(f"w = {w} is not in the cover window")
    cover = greedy_delta_cover(chain.final, E, 0, P, w)
    X_tilde = sorted(chain.final)
    owner = dict(cover.assignment)
    factorizations = tuple(_factorize(G, p, owner[p], X_tilde, chain.final, eta, A, B)
                           for p in P if p in owner)

    factor_window = Window.from_elements(G, (G.mul(f, x) for f in cover.F for x in X_tilde))
    FAB = ProductOracle(translate_union(A, cover.F), B, factor_window)
    probes = probes or ProbeFamily.explicit(G, [P])
    pool = shift_pool or Window.from_elements(G, [eta])
    embed = finite_embed_check(probes, FAB, pool)

    ok = cover.covered and all(row["ok"] for row in factorizations)
    k_eff = inverse_product_bound(Fraction(len(chain.final), E.size))
    verdict = jin_verdict(ok, embed.verdict, len(cover.F), k_eff)
    log.info("jin: |F|=%d k_bound=%s verdict=%s", len(cover.F), k_bound, verdict)
    return JinCertificate(verdict, alpha, beta, k_bound, chain, eta, w, cover, factorizations, embed,
                          probes, factor_window)


def jin_piecewise_check(A: SetOracle, B: SetOracle, plan: ChainPlan, params: DensityParams,
                        window: Optional[Window] = None, probes: Optional[ProbeFamily] = None,
                        shift_pool: Optional[Window] = None) -> JinCertificate:
    """AB is piecewise k-syndetic with k = ⌊1/αβ⌋, using the F from jin_witness with X = G."""
    G = A.group
    window = window or plan.E
    w = G.identity() if G.identity() in window else window.least()
    cert = jin_witness(A, B, WholeOracle(G), w, plan, params, P_window=window)
    if cert.cover is None:
        return cert
    k = cert.k_bound if cert.k_bound is not None else len(cert.F)
    probes = probes or ProbeFamily.boxes_up_to(G, 8)
    shift_pool = shift_pool or plan.E
    AB = ProductOracle(A, B, plan.E)
    pws = piecewise_syndetic_check(AB, k, probes, shift_pool, shift_pool, F=cert.F)
    verdict = combine_verdicts(cert.verdict, pws.verdict)
    return JinCertificate(verdict, cert.alpha, cert.beta, cert.k_bound, cert.chain, cert.eta, cert.w,
                          cert.cover, cert.factorizations, cert.embed, cert.probes, cert.factor_window,
                          pws, probes, plan.E)


# -----------------------
# Pullbacks and dense embeddings
# -----------------------
@dataclass(frozen=True)
class PullbackResult:
    xi: GroupElement
    estimate: DensityEstimate
    B: FiniteOracle
    C_density: Fraction
    candidates: int

    def to_record(self) -> dict:
        return {
            "xi": list(self.xi),
            "estimate": self.estimate.to_record(),
            "C_density": fmt(self.C_density),
            "B_size": len(self.B.points),
            "candidates": self.candidates,
        }


def pullback_search(C, E: Window, params: Optional[DensityParams] = None,
                    pool: Optional[Window] = None) -> PullbackResult:
    """ξ in the pool maximizing the upper estimate of Cξ⁻¹; ties go to the least ξ.

    Nothing guarantees the estimate reaches |C|/|E|: windows here are fixed
    while the statement holds in the limit.
    """
    G = E.group
    C = frozenset(G.canonical(c) for c in C)
    if not C:
        raise ParameterError("C must be nonempty")
    if any(c not in E for c in C):
        raise ParameterError("C must be a subset of E")
    params = params or default_pullback_params(G)
    pool = pool or E
    best: Optional[PullbackResult] = None
    for xi in pool:
        B = pulled_back(G, C, xi)
        est = upper_density_estimate(B, G, params)
        if best is None or est.value > best.estimate.value:
            best = PullbackResult(xi, est, B, Fraction(len(C), E.size), pool.size)
    log.debug("pullback: ξ=%s estimate=%s", best.xi, best.estimate.value)
    return best


def pulled_back(G: GroupModel, C, xi: GroupElement) -> FiniteOracle:
    """{g | gξ ∈ C} = Cξ⁻¹ as an explicit set."""
    xi_inv = G.inv(G.canonical(xi))
    return FiniteOracle(G, frozenset(G.mul(c, xi_inv) for c in C))


@dataclass(frozen=True)
class DenseEmbedding:
    verdict: str
    chain: ChainReport
    pullback: Optional[PullbackResult]
    alphas: Tuple[DensityEstimate, ...]
    witnesses: Tuple[Optional[GroupElement], ...]
    direct: Tuple[bool, ...]
    probes: Optional[ProbeFamily]
    embeds: Tuple[SearchResult, ...]
    differences: Tuple[Tuple[dict, ...], ...]

    @property
    def target(self) -> Fraction:
        out = Fraction(1)
        for a in self.alphas:
            out *= a.value
        return out

    @property
    def shortfall(self) -> Optional[bool]:
        return None if self.pullback is None else self.pullback.estimate.value < self.target

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "alphas": [a.to_record() for a in self.alphas],
            "target": fmt(self.target),
            "shortfall": self.shortfall,
            "chain": self.chain.to_record(),
            "pullback": None if self.pullback is None else self.pullback.to_record(),
            "B": None if self.pullback is None else [list(b) for b in sorted(self.pullback.B.points)],
            "witnesses": [None if x is None else list(x) for x in self.witnesses],
            "direct": list(self.direct),
            "probe": None if self.probes is None else [list(h) for h in self.probes.probes[0]],
            "embeds": [describe_result(e, self.probes) for e in self.embeds],
            "differences": [list(rows) for rows in self.differences],
            "consequence_holds": all(row["ok"] for rows in self.differences for row in rows),
        }


def dense_embed_search(sets: Sequence[SetOracle], plan: ChainPlan,
                       params: Optional[DensityParams] = None,
                       pool: Optional[Window] = None,
                       shift_pool: Optional[Window] = None) -> DenseEmbedding:
    """B = Cη⁻¹ with C = A_0 ∩ A_1ξ_1 ∩ … ∩ E, embedding into A_0 by η and into A_i by ηξ_i⁻¹.

    The density of B is reported against Π α_i; a shortfall is flagged, not
    treated as failure. Embeddings are checked on all of B, then on the
    probe B ∩ (the window where B's estimate was attained).
    """
    if not sets:
        raise ParameterError("need at least one set")
    E = plan.E
    G = E.group
    params = params or default_pullback_params(G)
    alphas = tuple(upper_density_estimate(A, G, params) for A in sets)
    chain = concentration_chain(list(sets), plan, "right")
    if not chain.complete or not chain.final:
        log.warning("dense embedding: chain left C empty")
        return DenseEmbedding(INCONCLUSIVE, chain, None, alphas, (), (), None, (), ())
    pb = pullback_search(chain.final, E, params, pool)
    eta = pb.xi
    witnesses = [eta] + [G.mul(eta, G.inv(s.xi)) for s in chain.steps]
    B_points = sorted(pb.B.points)
    direct = tuple(all(G.mul(b, x) in A for b in B_points) for A, x in zip(sets, witnesses))

    est = pb.estimate
    base = folner_window(G, est.window_index, params.family).translate(est.shift, "right")
    H = [b for b in B_points if b in base] or B_points[:1]
    probes = ProbeFamily.explicit(G, [H])
    embeds, differences = [], []
    for A, x in zip(sets, witnesses):
        embeds.append(finite_embed_check(probes, A, shift_pool or Window.from_elements(G, [x])))
        differences.append(tuple(embed_difference_check(A, probes, {0: x})))
    ok = all(direct) and all(e.success for e in embeds) and all(
        row["ok"] for rows in differences for row in rows)
    return DenseEmbedding(SUCCESS if ok else FAILURE, chain, pb, alphas, tuple(witnesses), direct,
                          probes, tuple(embeds), tuple(differences))


# -----------------------
# d(B) against d(B⁻¹)
# -----------------------
@dataclass(frozen=True)
class InverseProbe:
    verdict: str
    abelian: bool
    B: Tuple[DensityEstimate, DensityEstimate]
    B_inv: Tuple[DensityEstimate, DensityEstimate]
    witness: Optional[Tuple[GroupElement, GroupElement, GroupElement]] = None

    @property
    def equal(self) -> bool:
        return (self.B[0].value, self.B[1].value) == (self.B_inv[0].value, self.B_inv[1].value)

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "abelian": self.abelian,
            "asserted": self.abelian,
            "equal": self.equal,
            "B": {"lower": self.B[0].to_record(), "upper": self.B[1].to_record()},
            "B_inverse": {"lower": self.B_inv[0].to_record(), "upper": self.B_inv[1].to_record()},
            "noncommuting": noncommuting_record(self.witness),
        }


def noncommuting_record(witness: Optional[Tuple[GroupElement, GroupElement, GroupElement]]) -> Optional[dict]:
    if witness is None:
        return None
    g, h, c = witness
    return {"g": list(g), "h": list(h), "commutator": list(c)}


def inverse_density_probe(B: SetOracle, model: GroupModel, params: DensityParams) -> InverseProbe:
    """Lower and upper estimates of B and B⁻¹ on the same grid.

    Equality is asserted only on abelian models; there a symmetric shift grid
    makes the two scans see reflected windows. Otherwise the verdict is
    "inconclusive" and the numbers are data.
    """
    est_B = both_estimates(B, model, params)
    est_inv = both_estimates(InverseOracle(B), model, params)
    if not model.is_abelian:
        witness = model.noncommuting_pair()
        if witness is not None:
            log.info("%s is not abelian: [%s, %s] = %s", model.name(), *witness)
        return InverseProbe(INCONCLUSIVE, False, est_B, est_inv, witness)
    probe = InverseProbe(INCONCLUSIVE, True, est_B, est_inv)
    verdict = SUCCESS if probe.equal else FAILURE
    if verdict == FAILURE:
        log.warning("d(B) and d(B⁻¹) estimates differ on an abelian model; check the shift grid is symmetric")
    return InverseProbe(verdict, True, est_B, est_inv)
