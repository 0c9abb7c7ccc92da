"""
Certificate replay.

verify_document() rebuilds the group and sets from a document's inputs block
and re-checks every inclusion, count and inequality the document claims,
using only the witnesses it records. Nothing is searched again: a replay
evaluates fixed windows, fixed shifts and fixed factorizations. The verdict
is recomputed from those checks and must match the recorded one.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from folner_density.density import (
    DensityParams,
    IntersectionOracle,
    InverseOracle,
    ProductOracle,
    SetOracle,
    TranslateOracle,
    WholeOracle,
    relative_density,
)
from folner_density.errors import CertificateError, FolnerError
from folner_density.group_core import (
    GroupElement,
    GroupModel,
    Window,
    folner_window,
    invariance_defect,
    max_defect_over,
    window_from_spec,
)
from folner_density.intsets import counterexample_report
from folner_density.lemmas import (
    BoundReplay,
    WindowDelta,
    cover_bound_replay,
    cover_verdict,
    overlap_pair_bound,
    translate_counts,
)
from folner_density.rationals import inverse_product_bound, pigeonhole_threshold, q
from folner_density.runner import (
    RESERVED,
    RunContext,
    counterexample_args,
    counterexample_verdict,
    delta_cover_region,
    estimate_window,
    family_members,
    overlap_verdict,
    roots_region,
)
from folner_density.setops import (
    FAILURE,
    INCONCLUSIVE,
    SUCCESS,
    ProbeFamily,
    combine_verdicts,
    covers_region,
    translate_union,
)
from folner_density.theorems import (
    DeltaMembership,
    default_estimate_params,
    delta_cover_verdict,
    jin_verdict,
    noncommuting_record,
    pulled_back,
    roots_verdict,
    shadow_rows,
)

log = logging.getLogger(__name__)


class Ledger:
    """Pass/fail tallies per named check."""

    def __init__(self):
        self.counts: Dict[str, List[int]] = {}
        self.first_failure: Optional[str] = None

    def check(self, name: str, ok: bool) -> bool:
        row = self.counts.setdefault(name, [0, 0])
        row[0 if ok else 1] += 1
        if not ok and self.first_failure is None:
            self.first_failure = name
        return ok

    def equal(self, name: str, recorded, recomputed) -> bool:
        """Equality after a JSON round trip, so tuples and lists compare alike."""
        return self.check(name, _canonical(recorded) == _canonical(recomputed))

    @property
    def ok(self) -> bool:
        return all(failed == 0 for _, failed in self.counts.values())

    def rows(self) -> List[dict]:
        return [{"check": k, "passed": p, "failed": f} for k, (p, f) in sorted(self.counts.items())]


def _canonical(value):
    if isinstance(value, (dict, list, tuple)):
        return json.dumps(value, sort_keys=True)
    return value


@dataclass(frozen=True)
class VerifyReport:
    operation: Optional[str]
    accepted: bool
    checks: Tuple[dict, ...] = ()
    reason: Optional[str] = None

    def to_record(self) -> dict:
        return {"operation": self.operation, "accepted": self.accepted,
                "checks": list(self.checks), "reason": self.reason}


def _el(G: GroupModel, raw) -> GroupElement:
    return G.canonical(raw)


def _els(G: GroupModel, raws) -> List[GroupElement]:
    return [G.canonical(r) for r in raws]


def _witness_rows(L: Ledger, name: str, target: SetOracle, rows: Sequence[dict],
                  probes: Optional[ProbeFamily] = None) -> None:
    """Hx ⊆ target for every recorded (probe, x)."""
    G = target.group
    for row in rows:
        if row.get("x") is None:
            continue
        x = _el(G, row["x"])
        H = _els(G, row["probe"]) if "probe" in row else probes.probes[row["probe_index"]]
        if probes is not None:
            L.check(f"{name}: probe matches inputs", tuple(sorted(H)) == probes.probes[row["probe_index"]])
        L.check(f"{name}: Hx inside target", all(G.mul(h, x) in target for h in H))


def _estimate(L: Ledger, name: str, A: SetOracle, rec: dict) -> Fraction:
    value = relative_density(A, estimate_window(A.group, rec))
    L.check(f"{name}: density at the recorded window", value == q(rec["value"]))
    return value




def _probe_verdict(L: Ledger, name: str, target: SetOracle, rec: dict, probes: ProbeFamily,
                   pool: Optional[Window] = None) -> str:
    """Verdict a probe-search record supports: budget stop, an unmatched probe, or every probe witnessed.

    With the pool known, an unmatched probe is checked against every shift in it.
    """
    if rec.get("method") == "budget":
        return INCONCLUSIVE
    rows = rec.get("witnesses", [])
    failing = [row for row in rows if row.get("x") is None]
    if failing:
        if pool is not None:
            G = target.group
            H = probes.probes[failing[0]["probe_index"]]
            L.check(f"{name}: failing probe has no translate in the pool",
                    not any(all(G.mul(h, x) in target for h in H) for x in pool))
        return FAILURE
    return SUCCESS if len(rows) == len(probes) else FAILURE


# -----------------------
# Shared replays
# -----------------------
@dataclass(frozen=True)
class ChainReplay:
    final: FrozenSet[GroupElement]
    xis: Tuple[GroupElement, ...]
    complete: bool
    holds: bool


def replay_chain(L: Ledger, sets: Sequence[SetOracle], E: Window, rec: dict, side: str) -> ChainReplay:
    """Re-apply the recorded shifts; returns the final set, the ξ_i and the recomputed flags."""
    G = E.group
    D = frozenset(sets[0].members(E))
    L.equal("chain: alpha0", q(rec["alpha0"]), Fraction(len(D), E.size))
    xis = []
    for step, A in zip(rec["steps"], sets[1:]):
        U = window_from_spec(G, step["U"])
        z = _el(G, step["shift"])
        if side == "right":
            C = frozenset(u for u in U if u in A)
        else:
            C = frozenset(u for u in U if G.inv(u) in A)
        L.equal("chain: step density of A_i on U", q(step["alpha"]), Fraction(len(C), U.size))
        defect = max_defect_over(U, D, "left" if side == "right" else "right")
        L.equal("chain: step defect", q(step["defect"]), defect)
        floor = Fraction(len(C), U.size) * Fraction(len(D), E.size) - defect
        L.equal("chain: step floor", q(step["floor"]), floor)
        xi = _el(G, step["xi"])
        L.equal("chain: xi is the inverse shift", xi, G.inv(z))
        if not C:
            D = frozenset()
        elif side == "right":
            D = frozenset(d for d in D if G.mul(d, z) in A)
        else:
            D = frozenset(d for d in D if G.inv(G.mul(z, d)) in A)
        achieved = Fraction(len(D), E.size)
        L.equal("chain: achieved density", q(step["achieved"]), achieved)
        if C:
            L.check("chain: achieved >= floor", achieved >= floor)
        xis.append(xi)
    L.equal("chain: final size", rec["final_size"], len(D))
    product = q(rec["alpha0"])
    for step in rec["steps"]:
        product *= q(step["alpha"])
    budget = sum((q(s["defect"]) for s in rec["steps"]), Fraction(0))
    holds = Fraction(len(D), E.size) >= product - budget
    L.equal("chain: holds flag", rec["holds"], holds)
    complete = len(rec["steps"]) == len(sets) - 1
    L.equal("chain: complete flag", rec["complete"], complete)
    return ChainReplay(D, tuple(xis), complete, holds)


def replay_cover(L: Ledger, C, E: Window, eps, P: Sequence[GroupElement], g0: GroupElement,
                 rec: dict) -> Tuple[Tuple[GroupElement, ...], bool, BoundReplay]:
    """Every assignment p ↦ f has f⁻¹p in 𝒟_ε^E(C); the bound is recomputed from the counts.

    Returns F, whether P is fully covered, and the recomputed bound.
    """
    G = E.group
    D = WindowDelta(C, E, eps)
    F = tuple(_els(G, rec["F"]))
    L.check("cover: seeded at g0", bool(F) and F[0] == g0)
    L.check("cover: F inside P", set(F) <= set(P))
    Fs = set(F)
    covered = set()
    for p_raw, f_raw in rec["assignment"]:
        p, f = _el(G, p_raw), _el(G, f_raw)
        L.check("cover: assigned translate is in F", f in Fs)
        L.check("cover: f⁻¹p in the window delta set", G.mul(G.inv(f), p) in D)
        covered.add(p)
    residual = set(_els(G, rec["residual"]))
    L.check("cover: assignment and residual partition P", covered | residual == set(P)
            and not covered & residual)
    sizes, pairs = translate_counts(D.C, E, F)
    L.equal("cover: translate sizes", list(rec["translate_sizes"]), sizes)
    L.equal("cover: pair overlaps", list(rec["pair_overlaps"]), pairs)
    bound = cover_bound_replay(len(F), sizes, pairs, E.size, eps)
    L.equal("cover: certified bound", rec["certified_bound"], bound.certified)
    L.equal("cover: nominal bound", rec["nominal_bound"], bound.nominal)
    L.equal("cover: bound flag", rec["bound_holds"], bound.holds)
    if bound.certified is not None:
        L.check("cover: size within certified bound", bound.holds)
    return F, not residual, bound


# -----------------------
# Per-operation replays
# -----------------------
# Each replay returns the verdict its recomputed checks support.
def replay_density(L: Ledger, ctx: RunContext, doc: dict) -> str:
    A = ctx.set("set")
    for rec in doc["estimates"]:
        v = _estimate(L, "estimate", A, rec)
        L.check("estimate in [0,1]", 0 <= v <= 1)
    L.equal("value is the last estimate", q(doc["value"]), q(doc["estimates"][-1]["value"]))
    return SUCCESS


def replay_folner_check(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    H = _els(G, doc["H"])
    eps = q(doc["eps"])
    shape, side = ctx.text("shape", "centered"), ctx.text("side", "left")
    first = None
    for row in doc["rows"]:
        d = invariance_defect(folner_window(G, row["n"], shape), H, side)
        L.equal("defect", q(row["defect"]), d)
        L.equal("invariant flag", row["invariant"], d < eps)
        if first is None and d < eps:
            first = row["n"]
    L.equal("first invariant window", doc["first_invariant_n"], first)
    return SUCCESS if first is not None else FAILURE


def replay_product(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    A = ctx.set("A")
    B = InverseOracle(A) if ctx.flag("difference") else ctx.set("B")
    out = ctx.window("window")
    WA, WB = ctx.window("factor_A", out), ctx.window("factor_B", out)
    for row in doc["elements"]:
        g, a, b = _el(G, row["g"]), _el(G, row["a"]), _el(G, row["b"])
        L.check("factor a in A ∩ W_A", a in A and a in WA)
        L.check("factor b in B ∩ W_B", b in B and b in WB)
        L.check("g = ab inside the window", G.mul(a, b) == g and g in out)
    L.equal("size", doc["size"], len(doc["elements"]))
    return SUCCESS


def replay_delta(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    A = ctx.set("set")
    eps = q(doc["eps"])
    family = ctx.density_params(default=default_estimate_params(G)).family
    for row in doc["rows"]:
        g = _el(G, row["g"])
        W = folner_window(G, row["window_index"], family).translate(_el(G, row["shift"]), "right")
        v = relative_density(IntersectionOracle((A, TranslateOracle(A, g, "left"))), W)
        L.equal("d(A ∩ gA) at the recorded window", q(row["value"]), v)
        L.equal("membership is value > ε", row["member"], v > eps)
    return SUCCESS


def replay_syndetic(L: Ledger, ctx: RunContext, doc: dict) -> str:
    if "certificate" not in doc:
        return INCONCLUSIVE if doc["method"] == "budget" else FAILURE
    G = ctx.model
    A = ctx.set("set")
    region = ctx.window("region")
    F = _els(G, doc["certificate"]["F"])
    within_k = len(F) <= ctx.integer("k")
    covered = not covers_region(A, F, region)
    L.check("|F| <= k", within_k)
    L.check("region inside FA", covered)
    f = _el(G, doc["consequence"]["f"])
    d = Fraction(A.count(region.translate(G.inv(f), "left")), region.size)
    L.equal("consequence density", q(doc["consequence"]["density"]), d)
    L.check("consequence >= 1/|F|", d * len(F) >= 1)
    return SUCCESS if within_k and covered else FAILURE


def replay_thick(L: Ledger, ctx: RunContext, doc: dict) -> str:
    probes = ctx.probes()
    A = ctx.set("set")
    _witness_rows(L, "thickness", A, doc.get("witnesses", []), probes)
    return _probe_verdict(L, "thickness", A, doc, probes, ctx.window("pool"))


def replay_pws(L: Ledger, ctx: RunContext, doc: dict) -> str:
    if doc["F"] is None:
        return INCONCLUSIVE if doc["method"] == "budget" else FAILURE
    G = ctx.model
    A = ctx.set("set")
    F = _els(G, doc["F"])
    if len(F) > ctx.integer("k"):
        return FAILURE
    probes = ctx.probes()
    target = translate_union(A, F)
    thickness = doc["thickness"]
    _witness_rows(L, "piecewise", target, thickness.get("witnesses", []), probes)
    return _probe_verdict(L, "piecewise", target, thickness, probes, ctx.window("pool"))


def replay_embed(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    B = ctx.set("B")
    probes = ctx.probes()
    if ctx.has("A"):
        A = ctx.set("A")
        L.check("probes inside A", all(h in A for H in probes for h in H))
    _witness_rows(L, "embedding", B, doc.get("witnesses", []), probes)
    for row in doc.get("differences", []):
        b, b2 = _el(G, row["b"]), _el(G, row["b2"])
        L.check("difference factors through B", b in B and b2 in B
                and G.mul(b, G.inv(b2)) == _el(G, row["difference"]))
    return _probe_verdict(L, "embedding", B, doc, probes, ctx.window("pool"))


def _strip(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k not in RESERVED}


def replay_lemma_overlap(L: Ledger, ctx: RunContext, doc: dict) -> str:
    E = ctx.window("E")
    report = overlap_pair_bound(E, family_members(ctx, E), ctx.fraction("gamma"), ctx.fraction("eps"))
    L.equal("overlap report", _strip(doc), report.to_record())
    return overlap_verdict(report)


def replay_lemma_delta_cover(L: Ledger, ctx: RunContext, doc: dict) -> str:
    E = ctx.window("E")
    P = ctx.window("P").elements
    g0 = ctx.element("g0", P[0])
    _, covered, bound = replay_cover(L, ctx.set("C").members(E), E, ctx.fraction("eps", 0), P, g0, doc)
    return cover_verdict(covered, bound)


def replay_lemma_shift(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    U, V = ctx.window("U"), ctx.window("V")
    C = frozenset(ctx.set("C").members(U))
    D = frozenset(ctx.set("D").members(V))
    side = doc["side"]
    z = _el(G, doc["shift"])
    L.check("shift lies in U", z in U)
    if side == "right":
        count = sum(1 for d in D if G.mul(d, z) in C)
    else:
        count = sum(1 for d in D if G.mul(z, d) in C)
    L.equal("count", doc["count"], count)
    defect = max_defect_over(U, D, "left" if side == "right" else "right")
    floor = Fraction(len(C), U.size) * Fraction(len(D), V.size) - defect
    L.equal("floor", q(doc["floor"]), floor)
    holds = Fraction(count, V.size) >= floor
    L.check("achieved >= floor", holds)
    return SUCCESS if holds else FAILURE


def replay_lemma_chain(L: Ledger, ctx: RunContext, doc: dict) -> str:
    chain = replay_chain(L, ctx.sets("sets"), ctx.plan().E, doc, doc["side"])
    return SUCCESS if chain.complete and chain.holds else FAILURE


def _replay_delta_cover_record(L: Ledger, ctx: RunContext, rec: dict, P: Sequence[GroupElement],
                               g0: GroupElement) -> Tuple[DeltaMembership, str]:
    G = ctx.model
    sets = ctx.sets("sets")
    E = ctx.plan().E
    eps = ctx.fraction("eps", 0)
    chain = replay_chain(L, [WholeOracle(G)] + sets, E, rec["chain"], "right")
    r = pigeonhole_threshold(Fraction(len(chain.final), E.size), eps)
    L.equal("r from the achieved density", rec["r"], r)
    cover = rec["cover"]
    F, covered, _ = replay_cover(L, chain.final, E, eps, P, g0, cover)
    L.equal("cover: |L| <= r", rec["within_r"], None if r is None else len(F) <= r)
    gs = list(dict.fromkeys(G.mul(G.inv(_el(G, f)), _el(G, p)) for p, f in cover["assignment"]))
    shadow_ok = True
    if chain.complete:
        rows = shadow_rows(sets, chain.xis, E, gs, eps)
        L.equal("shadow overlaps", rec["shadow"], rows)
        shadow_ok = all(row["ok"] for row in rows)
    params = DensityParams.from_record(rec["delta_params"])
    delta = DeltaMembership(sets, eps, params)
    delta_ok = all(g in delta for g in gs)
    L.equal("delta estimates", rec["delta_checks"], delta.rows())
    if rec["consequence"]:
        counts = Counter(_el(G, f) for _, f in cover["assignment"])
        f = _el(G, rec["consequence"]["f"])
        share = Fraction(counts[f], len(set(P)))
        L.equal("consequence share", q(rec["consequence"]["density"]), share)
        L.check("consequence >= 1/|L|", share * len(F) >= 1)
    checks_ok = chain.complete and covered and shadow_ok and delta_ok
    return delta, delta_cover_verdict(checks_ok, len(F), r)


def replay_thm_delta_cover(L: Ledger, ctx: RunContext, doc: dict) -> str:
    P, g0 = delta_cover_region(ctx)
    _, verdict = _replay_delta_cover_record(L, ctx, doc, P, g0)
    return verdict


def replay_thm_roots(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    k = doc["k"]
    region = roots_region(ctx)
    roots: Dict[GroupElement, GroupElement] = {}
    for g in region:
        roots.setdefault(G.power(g, k), g)
    P = sorted(roots)
    g0 = G.power(region.least(), k) if G.identity() not in region else G.identity()
    delta, base_verdict = _replay_delta_cover_record(L, ctx, doc["base"], P, g0)
    L.equal("base verdict", doc["base"]["verdict"], base_verdict)
    cover_L = _els(G, doc["base"]["L"])
    missing = [l for l in cover_L if l not in roots]
    H = [roots[l] for l in cover_L if l in roots]
    L.equal("missing roots", doc["missing_roots"], [list(l) for l in missing])
    L.equal("least root per cover element", doc["H"], [list(h) for h in H])
    seen = set()
    for g_raw, h_raw in doc["witnesses"]:
        g, h = _el(G, g_raw), _el(G, h_raw)
        L.check("witness root is in H", h in H)
        L.check("(h⁻¹g)^k in every Δ_ε(A_i)", G.power(G.mul(G.inv(h), g), k) in delta)
        seen.add(g)
    residual = _els(G, doc["residual"])
    for g in residual:
        L.check("residual element has no root in H",
                not any(G.power(G.mul(G.inv(h), g), k) in delta for h in H))
    L.check("witnesses and residual partition the region", seen | set(residual) == set(region.elements))
    return roots_verdict(base_verdict, missing, residual)


def _replay_jin(L: Ledger, ctx: RunContext, doc: dict, window: Window, X: SetOracle, w,
                embed_probes: Optional[ProbeFamily], pws_probes: Optional[ProbeFamily] = None) -> str:
    G = ctx.model
    A, B = ctx.set("A"), ctx.set("B")
    alpha = _estimate(L, "alpha", A, doc["alpha"])
    beta = _estimate(L, "beta", B, doc["beta"])
    L.equal("k_bound", doc["k_bound"], inverse_product_bound(alpha, beta))
    E = ctx.plan().E
    chain = replay_chain(L, [A, B], E, doc["chain"], "left")
    if doc["cover"] is None:
        L.check("no cover only when the chain leaves X̃ empty", not chain.complete or not chain.final)
        return INCONCLUSIVE
    X_tilde = chain.final
    eta = _el(G, doc["eta"])
    L.equal("eta is the chain shift", chain.xis[0] if chain.xis else None, eta)
    P = X.members(window)
    F, covered, _ = replay_cover(L, X_tilde, E, 0, P, w, doc["cover"])
    Fs = set(F)
    a_size = len(A.restrict(E))
    L.equal("alpha_eff", q(doc["alpha_eff"]), Fraction(a_size, E.size))
    k_eff = inverse_product_bound(Fraction(len(X_tilde), E.size))
    L.equal("k_eff", doc["k_eff"], k_eff)
    L.equal("|F| <= k_eff", doc["within_k_eff"], None if k_eff is None else len(F) <= k_eff)
    rows_g = set()
    factored = True
    for row in doc["factorizations"]:
        g, f = _el(G, row["g"]), _el(G, row["f"])
        rows_g.add(g)
        ok = row["a"] is not None and row["b"] is not None
        if ok:
            a, b = _el(G, row["a"]), _el(G, row["b"])
            ok = f in Fs and a in A and b in B and G.mul(g, eta) == G.mul(G.mul(f, a), b)
        L.equal("gη = f·a·b flag", row["ok"], ok)
        factored = factored and ok
    L.check("every covered g factored", rows_g == set(_el(G, p) for p, _ in doc["cover"]["assignment"]))
    fw = window_from_spec(G, doc["factor_window"])
    FAB = ProductOracle(translate_union(A, F), B, fw)
    probes = embed_probes or ProbeFamily.explicit(G, [P])
    _witness_rows(L, "X into FAB", FAB, doc["embed"].get("witnesses", []), probes)
    embed_verdict = _probe_verdict(L, "X into FAB", FAB, doc["embed"], probes)
    verdict = jin_verdict(covered and factored, embed_verdict, len(F), k_eff)
    pws = doc.get("pws")
    if pws is None:
        return verdict
    k = doc["k_bound"] if doc["k_bound"] is not None else len(F)
    L.equal("pws k", pws["k"], k)
    pws_F = _els(G, pws["F"])
    if pws["thickness"] is None:
        pws_verdict = FAILURE
        L.check("pws without a thickness search has |F| > k", len(pws_F) > k)
    else:
        AB = ProductOracle(A, B, window_from_spec(G, pws["factor_window"]))
        L.check("pws |F| <= k", len(pws_F) <= k)
        target = translate_union(AB, pws_F)
        _witness_rows(L, "F·AB thick", target, pws["thickness"].get("witnesses", []), pws_probes)
        pws_verdict = _probe_verdict(L, "F·AB thick", target, pws["thickness"], pws_probes)
    L.equal("pws verdict", pws["verdict"], pws_verdict)
    return combine_verdicts(verdict, pws_verdict)


def replay_thm_jin(L: Ledger, ctx: RunContext, doc: dict) -> str:
    E = ctx.plan().E
    return _replay_jin(L, ctx, doc, ctx.window("window", E), ctx.set("X", "whole"),
                       ctx.element("w", ctx.model.identity()), ctx.probes() if ctx.has("probes") else None)


def replay_thm_jin_pws(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    window = ctx.window("window", ctx.plan().E)
    w = G.identity() if G.identity() in window else window.least()
    pws_probes = ctx.probes() if ctx.has("probes") else ProbeFamily.boxes_up_to(G, 8)
    return _replay_jin(L, ctx, doc, window, WholeOracle(G), w, None, pws_probes)


def replay_thm_pullback(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    E = ctx.window("E", ctx.default_E())
    C = ctx.set("C").members(E)
    B = pulled_back(G, C, _el(G, doc["xi"]))
    L.equal("pulled-back set", [list(b) for b in sorted(B.points)], doc["B"])
    _estimate(L, "pullback estimate", B, doc["estimate"])
    L.equal("density of C on E", q(doc["C_density"]), Fraction(len(C), E.size))
    return SUCCESS


def replay_thm_embed(L: Ledger, ctx: RunContext, doc: dict) -> str:
    G = ctx.model
    sets = ctx.sets("sets")
    E = ctx.plan().E
    chain = replay_chain(L, sets, E, doc["chain"], "right")
    if not chain.complete or not chain.final:
        L.check("no pullback when the chain leaves C empty", doc["pullback"] is None)
        return INCONCLUSIVE
    eta = _el(G, doc["pullback"]["xi"])
    L.check("eta lies in the pool", True if not ctx.has("pool") else eta in ctx.window("pool"))
    B = pulled_back(G, chain.final, eta)
    L.equal("B = Cη⁻¹", [list(b) for b in sorted(B.points)], doc["B"])
    _estimate(L, "density of B", B, doc["pullback"]["estimate"])
    witnesses = [eta] + [G.mul(eta, G.inv(xi)) for xi in chain.xis]
    L.equal("embedding witnesses", [list(x) for x in witnesses], doc["witnesses"])
    direct = [all(G.mul(b, x) in A for b in B.points) for A, x in zip(sets, witnesses)]
    L.equal("Bx inside A_i flags", doc["direct"], direct)
    probes = ProbeFamily.explicit(G, [_els(G, doc["probe"])])
    embedded = []
    for A, rec in zip(sets, doc["embeds"]):
        _witness_rows(L, "probe into A_i", A, rec.get("witnesses", []), probes)
        embedded.append(_probe_verdict(L, "probe into A_i", A, rec, probes))
    differences_ok = True
    for A, rows in zip(sets, doc["differences"]):
        for row in rows:
            b, b2 = _el(G, row["b"]), _el(G, row["b2"])
            ok = b in A and b2 in A and G.mul(b, G.inv(b2)) == _el(G, row["difference"])
            L.equal("h·h′⁻¹ in A_iA_i⁻¹ flag", row["ok"], ok)
            differences_ok = differences_ok and ok
    ok = all(direct) and all(v == SUCCESS for v in embedded) and differences_ok
    return SUCCESS if ok else FAILURE


def replay_thm_inverse_probe(L: Ledger, ctx: RunContext, doc: dict) -> str:
    B = ctx.set("set")
    values = []
    for oracle, key in ((B, "B"), (InverseOracle(B), "B_inverse")):
        for direction in ("lower", "upper"):
            values.append(_estimate(L, f"{key} {direction}", oracle, doc[key][direction]))
    equal = values[:2] == values[2:]
    abelian = ctx.model.is_abelian
    L.equal("equality flag", doc["equal"], equal)
    L.equal("abelian flag", doc["abelian"], abelian)
    witness = None if abelian else ctx.model.noncommuting_pair()
    L.equal("noncommuting witness", doc["noncommuting"], noncommuting_record(witness))
    if not abelian:
        return INCONCLUSIVE
    return SUCCESS if equal else FAILURE


def replay_counterexample(L: Ledger, ctx: RunContext, doc: dict) -> str:
    report = counterexample_report(*counterexample_args(ctx))
    L.equal("counterexample report", _strip(doc), report.to_record())
    L.check("sumset is the expected union of blocks", report.matches_expected)
    return counterexample_verdict(report)


REPLAYS: Dict[str, Callable[[Ledger, RunContext, dict], str]] = {
    "density": replay_density,
    "folner-check": replay_folner_check,
    "product": replay_product,
    "delta": replay_delta,
    "syndetic": replay_syndetic,
    "thick": replay_thick,
    "pws": replay_pws,
    "embed": replay_embed,
    "lemma overlap": replay_lemma_overlap,
    "lemma delta-cover": replay_lemma_delta_cover,
    "lemma shift": replay_lemma_shift,
    "lemma chain": replay_lemma_chain,
    "thm delta-cover": replay_thm_delta_cover,
    "thm roots": replay_thm_roots,
    "thm jin": replay_thm_jin,
    "thm jin-pws": replay_thm_jin_pws,
    "thm pullback": replay_thm_pullback,
    "thm embed": replay_thm_embed,
    "thm inverse-probe": replay_thm_inverse_probe,
    "counterexample": replay_counterexample,
}


def verify_document(doc: dict) -> VerifyReport:
    """Replay one document; malformed or failing certificates are rejected, never raised.

    The recorded verdict must equal the one the replayed checks support.
    """
    if not isinstance(doc, dict):
        return VerifyReport(None, False, reason="document must be a JSON object")
    op = doc.get("operation")
    if doc.get("verdict") == "error":
        return VerifyReport(op, False, reason="error documents carry no certificate")
    if op not in REPLAYS:
        return VerifyReport(op, False, reason=f"unknown operation {op!r}")
    if doc.get("verdict") not in ("success", "failure", INCONCLUSIVE):
        return VerifyReport(op, False, reason=f"bad verdict {doc.get('verdict')!r}")
    L = Ledger()
    try:
        ctx = RunContext.from_inputs(op, doc.get("inputs"))
        if "reason" in doc and doc["verdict"] == INCONCLUSIVE:
            return VerifyReport(op, True, reason="inconclusive run: nothing to replay")
        expected = REPLAYS[op](L, ctx, doc)
        L.equal("verdict matches checks", doc["verdict"], expected)
    except (KeyError, TypeError, ValueError, IndexError, FolnerError) as e:
        log.warning("verify %s: malformed certificate: %s", op, e)
        return VerifyReport(op, False, tuple(L.rows()), f"malformed certificate: {type(e).__name__}: {e}")
    reason = None if L.ok else f"check failed: {L.first_failure}"
    return VerifyReport(op, L.ok, tuple(L.rows()), reason)


def verify_all(docs) -> List[VerifyReport]:
    return [verify_document(d) for d in (docs if isinstance(docs, list) else [docs])]


def require_valid(doc: dict) -> VerifyReport:
    """verify_document, raising CertificateError on rejection."""
    report = verify_document(doc)
    if not report.accepted:
        raise CertificateError(f"{report.operation}: {report.reason}")
    return report
