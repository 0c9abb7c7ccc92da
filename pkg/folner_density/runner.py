"""
Run configurations and the operation registry.

A RunConfig names one operation, the group, a dictionary of named sets and
the operation's parameters. run() executes it and returns a self-contained
document:

    {"operation": ..., "inputs": {"group", "sets", "params"}, "verdict": ..., <result fields>}

The inputs block is exactly what the run was built from, so certificates can
be replayed from the document alone.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from folner_density.config import Budgets, budgets, budgets_scope
from folner_density.density import (
    DensityParams,
    InverseOracle,
    SetOracle,
    both_estimates,
    density_estimate,
    oracle_from_spec,
)
from folner_density.errors import (
    ConfigError,
    FolnerError,
    OracleUndefined,
    ParameterError,
    SearchBudgetExceeded,
    WindowCapExceeded,
)
from folner_density.group_core import (
    GroupElement,
    GroupModel,
    Window,
    folner_scan,
    folner_window,
    group_from_spec,
    window_from_spec,
)
from folner_density.intsets import CounterexampleReport, counterexample_parameters, counterexample_report
from folner_density.lemmas import (
    ChainPlan,
    OverlapReport,
    concentration_chain,
    concentration_shift,
    cover_verdict,
    greedy_delta_cover,
    overlap_pair_bound,
)
from folner_density.rationals import fmt, q
from folner_density.setops import (
    FAILURE,
    INCONCLUSIVE,
    SUCCESS,
    ProbeFamily,
    delta_set_estimates,
    describe_result,
    density_record,
    embed_difference_check,
    finite_embed_check,
    piecewise_density_consequence,
    piecewise_syndetic_check,
    probes_from_spec,
    product_witnesses,
    syndetic_cover_search,
    syndetic_density_consequence,
    thickness_check,
)
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
    root_delta_cover,
)

log = logging.getLogger(__name__)

DEFAULT_GROUP = {"kind": "Zd", "d": 1}
VERDICTS = (SUCCESS, FAILURE, INCONCLUSIVE)
RESERVED = ("operation", "inputs", "verdict")


# -----------------------
# Configuration
# -----------------------
@dataclass(frozen=True)
class RunConfig:
    operation: str
    group: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULT_GROUP))
    sets: Dict[str, Any] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    budgets: Dict[str, Any] = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "json"

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"run config must be an object, got {type(raw).__name__}")
        unknown = set(raw) - {"operation", "group", "sets", "params", "budgets", "output", "format"}
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        op = raw.get("operation")
        if op not in OPERATIONS:
            raise ConfigError(f"unknown operation {op!r}")
        for key in ("group", "sets", "params", "budgets"):
            if key in raw and not isinstance(raw[key], dict):
                raise ConfigError(f"run config {key!r} must be an object")
        return cls(op, dict(raw.get("group") or DEFAULT_GROUP), dict(raw.get("sets") or {}),
                   dict(raw.get("params") or {}), dict(raw.get("budgets") or {}),
                   raw.get("output"), raw.get("format", "json"))

    def effective_budgets(self) -> Budgets:
        b = self.budgets
        try:
            return budgets().override(
                window_cap=_opt_int(b.get("window_cap")),
                search_budget=_opt_int(b.get("search_budget")),
                workers=_opt_int(b.get("workers")),
                chain_delta=None if b.get("chain_delta") is None else q(b["chain_delta"]),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad budgets {b!r}: {e}") from e

    def inputs(self) -> dict:
        return {"group": self.group, "sets": self.sets, "params": self.params}


def _opt_int(value) -> Optional[int]:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}")
    return value


class RunContext:
    """Typed access to a config's parameters; raises ConfigError on schema violations."""

    def __init__(self, operation: str, group: dict, sets: dict, params: dict):
        self.operation = operation
        self.model: GroupModel = group_from_spec(group)
        self.params = params
        self.named: Dict[str, SetOracle] = {}
        for name, spec in sets.items():
            self.named[name] = oracle_from_spec(self.model, spec, self.named)

    @classmethod
    def from_inputs(cls, operation: str, inputs: dict) -> "RunContext":
        if not isinstance(inputs, dict):
            raise ConfigError("document has no inputs block")
        return cls(operation, inputs.get("group") or DEFAULT_GROUP, inputs.get("sets") or {},
                   inputs.get("params") or {})

    def has(self, key: str) -> bool:
        return self.params.get(key) is not None

    def _require(self, key: str, default):
        value = self.params.get(key)
        if value is None:
            if default is None:
                raise ConfigError(f"{self.operation}: missing parameter {key!r}")
            return default
        return value

    def set(self, key: str, default=None) -> SetOracle:
        return oracle_from_spec(self.model, self._require(key, default), self.named)

    def sets(self, key: str) -> List[SetOracle]:
        specs = self._require(key, None)
        if not isinstance(specs, list) or not specs:
            raise ConfigError(f"{self.operation}: {key!r} must be a nonempty list of sets")
        return [oracle_from_spec(self.model, s, self.named) for s in specs]

    def window(self, key: str, default: Optional[Window] = None) -> Window:
        value = self.params.get(key)
        if value is None:
            if default is None:
                raise ConfigError(f"{self.operation}: missing window {key!r}")
            return default
        if isinstance(value, list) and len(value) == 2 and self.model.arity == 1:
            value = {"shape": "interval", "lo": value[0], "hi": value[1]}
        return window_from_spec(self.model, value)

    def integer(self, key: str, default: Optional[int] = None) -> int:
        value = self._require(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{self.operation}: {key!r} must be an integer, got {value!r}")
        return value

    def fraction(self, key: str, default=None) -> Optional[Fraction]:
        value = self.params.get(key)
        if value is None:
            return None if default is None else Fraction(default)
        return q(value)

    def flag(self, key: str) -> bool:
        return bool(self.params.get(key, False))

    def text(self, key: str, default: str) -> str:
        value = self.params.get(key, default)
        if not isinstance(value, str):
            raise ConfigError(f"{self.operation}: {key!r} must be a string")
        return value

    def element(self, key: str, default: Optional[GroupElement] = None) -> GroupElement:
        return self.model.canonical(self._require(key, default))

    def elements(self, key: str, default=None) -> List[GroupElement]:
        value = self._require(key, default)
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{self.operation}: {key!r} must be a list of elements")
        return [self.model.canonical(g) for g in value]

    def density_params(self, prefix: str = "", default: Optional[DensityParams] = None) -> DensityParams:
        keys = {k: self.params.get(prefix + k) for k in ("n_values", "shifts", "family")}
        if all(v is None for v in keys.values()):
            return default or DensityParams()
        base = default or DensityParams()
        rec = base.to_record()
        rec.update({k: v for k, v in keys.items() if v is not None})
        if isinstance(rec["n_values"], int):
            rec["n_values"] = [rec["n_values"]]
        return DensityParams.from_record(rec)

    def probes(self, key: str = "probes", default=8) -> ProbeFamily:
        return probes_from_spec(self.model, self.params.get(key, default))

    def default_E(self) -> Window:
        return folner_window(self.model, 360 if self.model.arity == 1 else 4, "anchored")

    def plan(self) -> ChainPlan:
        return ChainPlan(self.window("E", self.default_E()), self.fraction("delta"),
                         self.integer("max_aux", 1 << 16), self.text("aux_family", "centered"))


# -----------------------
# Operations
# -----------------------
Result = Tuple[str, Dict[str, Any]]


def estimate_window(model: GroupModel, rec: dict) -> Window:
    family = rec["params"]["family"]
    return folner_window(model, rec["window_index"], family).translate(tuple(rec["shift"]), "right")


def op_density(ctx: RunContext) -> Result:
    A = ctx.set("set")
    params = ctx.density_params(default=default_estimate_params(ctx.model))
    direction = ctx.text("direction", "upper")
    if direction == "both":
        ests = list(both_estimates(A, ctx.model, params))
    else:
        ests = [density_estimate(A, ctx.model, params, direction)]
    return SUCCESS, {"value": fmt(ests[-1].value), "estimates": [e.to_record() for e in ests]}


def op_folner_check(ctx: RunContext) -> Result:
    H = ctx.elements("H", ctx.model.generators())
    eps = ctx.fraction("eps", Fraction(1, 10))
    scan = folner_scan(ctx.model, H, eps, ctx.params.get("n_values") or [4, 8, 16, 32],
                       ctx.text("shape", "centered"), ctx.text("side", "left"))
    rows = [{"n": n, "size": size, "defect": fmt(d), "invariant": d < eps} for n, size, d in scan.rows]
    defects = [d for _, _, d in scan.rows]
    return (SUCCESS if scan.first_invariant_n is not None else FAILURE), {
        "H": [list(h) for h in scan.H],
        "eps": fmt(eps),
        "rows": rows,
        "first_invariant_n": scan.first_invariant_n,
        "non_increasing": all(a >= b for a, b in zip(defects, defects[1:])),
    }


def op_product(ctx: RunContext) -> Result:
    A = ctx.set("A")
    B = InverseOracle(A) if ctx.flag("difference") else ctx.set("B")
    out = ctx.window("window")
    WA, WB = ctx.window("factor_A", out), ctx.window("factor_B", out)
    wit = product_witnesses(A, B, out, (WA, WB))
    rows = [{"g": list(g), "a": list(a), "b": list(b)} for g, (a, b) in wit.items()]
    return SUCCESS, {"size": len(rows), "elements": rows}


def op_delta(ctx: RunContext) -> Result:
    A = ctx.set("set")
    eps = ctx.fraction("eps", 0)
    if eps < 0:
        raise ParameterError(f"ε must be >= 0, got {eps}")
    candidates = ctx.window("candidates")
    ests = delta_set_estimates(A, candidates, ctx.density_params(default=default_estimate_params(ctx.model)))
    rows = []
    for g in candidates:
        e = ests[g]
        rows.append({"g": list(g), "value": fmt(e.value), "window_index": e.window_index,
                     "shift": list(e.shift), "member": e.value > eps})
    return SUCCESS, {"eps": fmt(eps), "rows": rows,
                     "members": [r["g"] for r in rows if r["member"]]}


def op_syndetic(ctx: RunContext) -> Result:
    A = ctx.set("set")
    k = ctx.integer("k")
    region = ctx.window("region")
    res = syndetic_cover_search(A, k, region, ctx.window("pool", region), ctx.flag("strict"))
    out = describe_result(res)
    out.pop("verdict")
    if res.success:
        f, d = syndetic_density_consequence(A, res.certificate.F, region)
        out["consequence"] = {**density_record(f, d), "holds": d * len(res.certificate.F) >= 1}
    return res.verdict, out


def op_thick(ctx: RunContext) -> Result:
    probes = ctx.probes()
    res = thickness_check(ctx.set("set"), probes, ctx.window("pool"))
    out = describe_result(res, probes)
    out.pop("verdict")
    return res.verdict, out


def op_pws(ctx: RunContext) -> Result:
    A = ctx.set("set")
    k = ctx.integer("k")
    probes = ctx.probes()
    pool = ctx.window("pool")
    F = ctx.elements("F") if ctx.has("F") else None
    res = piecewise_syndetic_check(A, k, probes, ctx.window("F_pool", pool), pool, F, ctx.flag("strict"))
    out: Dict[str, Any] = {"k": k, "F": None if res.F is None else [list(f) for f in res.F],
                           "method": res.method, "checks": res.checks}
    if res.thickness is not None:
        out["thickness"] = describe_result(res.thickness, probes)
    if res.success:
        H, x = probes.probes[-1], res.thickness.witnesses[len(probes) - 1]
        f, d = piecewise_density_consequence(A, res.F, H, x)
        out["consequence"] = {**density_record(f, d), "holds": d * len(res.F) >= 1}
    return res.verdict, out


def op_embed(ctx: RunContext) -> Result:
    B = ctx.set("B")
    A = ctx.set("A") if ctx.has("A") else None
    probes = ctx.probes()
    res = finite_embed_check(probes, B, ctx.window("pool"), A)
    out = describe_result(res, probes)
    out.pop("verdict")
    out["differences"] = embed_difference_check(B, probes, res.witnesses)
    return res.verdict, out


def family_members(ctx: RunContext, E: Window) -> List[List[GroupElement]]:
    raw = ctx._require("family", None)
    if not isinstance(raw, list):
        raise ConfigError("family must be a list of element lists or set specs")
    out = []
    for item in raw:
        if isinstance(item, list):
            out.append([ctx.model.canonical(g) for g in item])
        else:
            out.append(oracle_from_spec(ctx.model, item, ctx.named).members(E))
    return out


def overlap_verdict(report: OverlapReport) -> str:
    ok = report.cauchy_schwarz_holds and report.lemma_holds is not False
    return SUCCESS if ok else FAILURE


def op_lemma_overlap(ctx: RunContext) -> Result:
    E = ctx.window("E")
    report = overlap_pair_bound(E, family_members(ctx, E), ctx.fraction("gamma"), ctx.fraction("eps"))
    return overlap_verdict(report), report.to_record()


def op_lemma_delta_cover(ctx: RunContext) -> Result:
    E = ctx.window("E")
    P = ctx.window("P").elements
    g0 = ctx.element("g0", P[0])
    cover = greedy_delta_cover(ctx.set("C").members(E), E, ctx.fraction("eps", 0), P, g0)
    return cover_verdict(cover.covered, cover.replay), cover.to_record()


def op_lemma_shift(ctx: RunContext) -> Result:
    U, V = ctx.window("U"), ctx.window("V")
    res = concentration_shift(U, V, ctx.set("C").members(U), ctx.set("D").members(V),
                              ctx.text("side", "right"))
    return (SUCCESS if res.holds else FAILURE), res.to_record()


def op_lemma_chain(ctx: RunContext) -> Result:
    plan = ctx.plan()
    report = concentration_chain(ctx.sets("sets"), plan, ctx.text("side", "right"))
    ok = report.complete and report.holds
    return (SUCCESS if ok else FAILURE), {**report.to_record(), "plan": plan.to_record(len(report.steps))}


def delta_cover_region(ctx: RunContext) -> Tuple[List[GroupElement], GroupElement]:
    """P (default: anchored [0,60) on ℤ) and its seed g0 (default: the identity when in P)."""
    P = list(ctx.window("P", folner_window(ctx.model, 60 if ctx.model.arity == 1 else 2, "anchored")).elements)
    return P, ctx.element("g0", ctx.model.identity() if ctx.model.identity() in P else P[0])


def roots_region(ctx: RunContext) -> Window:
    return ctx.window("window", folner_window(ctx.model, 30 if ctx.model.arity == 1 else 2, "anchored"))


def op_thm_delta_cover(ctx: RunContext) -> Result:
    plan = ctx.plan()
    P, g0 = delta_cover_region(ctx)
    res = delta_intersection_cover(ctx.sets("sets"), ctx.fraction("eps", 0), P, g0, plan,
                                   ctx.density_params("delta_", default_delta_params(ctx.model)))
    rec = res.to_record()
    return rec.pop("verdict"), rec


def op_thm_roots(ctx: RunContext) -> Result:
    plan = ctx.plan()
    base = roots_region(ctx)
    res = root_delta_cover(ctx.sets("sets"), ctx.fraction("eps", 0), ctx.integer("k", 1), base, plan,
                           ctx.density_params("delta_", default_delta_params(ctx.model)))
    rec = res.to_record()
    return rec.pop("verdict"), rec


def op_thm_jin(ctx: RunContext) -> Result:
    plan = ctx.plan()
    params = ctx.density_params(default=default_estimate_params(ctx.model))
    probes = ctx.probes() if ctx.has("probes") else None
    pool = ctx.window("pool") if ctx.has("pool") else None
    cert = jin_witness(ctx.set("A"), ctx.set("B"), ctx.set("X", "whole"),
                       ctx.element("w", ctx.model.identity()), plan, params,
                       ctx.window("window", plan.E), probes, pool)
    rec = cert.to_record()
    return rec.pop("verdict"), rec


def op_thm_jin_pws(ctx: RunContext) -> Result:
    plan = ctx.plan()
    params = ctx.density_params(default=default_estimate_params(ctx.model))
    probes = ctx.probes() if ctx.has("probes") else None
    pool = ctx.window("pool") if ctx.has("pool") else None
    cert = jin_piecewise_check(ctx.set("A"), ctx.set("B"), plan, params,
                               ctx.window("window", plan.E), probes, pool)
    rec = cert.to_record()
    return rec.pop("verdict"), rec


def op_thm_pullback(ctx: RunContext) -> Result:
    E = ctx.window("E", ctx.default_E())
    C = ctx.set("C").members(E)
    res = pullback_search(C, E, ctx.density_params(default=default_pullback_params(ctx.model)),
                          ctx.window("pool", E))
    return SUCCESS, {**res.to_record(), "B": [list(b) for b in sorted(res.B.points)]}


def op_thm_embed(ctx: RunContext) -> Result:
    res = dense_embed_search(ctx.sets("sets"), ctx.plan(),
                             ctx.density_params(default=default_pullback_params(ctx.model)),
                             ctx.window("pool") if ctx.has("pool") else None,
                             ctx.window("shift_pool") if ctx.has("shift_pool") else None)
    rec = res.to_record()
    return rec.pop("verdict"), rec


def op_thm_inverse_probe(ctx: RunContext) -> Result:
    params = ctx.density_params(default=DensityParams((8,), "window", "centered"))
    res = inverse_density_probe(ctx.set("set"), ctx.model, params)
    rec = res.to_record()
    return rec.pop("verdict"), rec


def counterexample_args(ctx: RunContext) -> Tuple[int, int, int, int]:
    if ctx.has("alpha") or ctx.has("beta"):
        M, N, L = counterexample_parameters(ctx.fraction("alpha"), ctx.fraction("beta"))
    else:
        M, N, L = ctx.integer("M"), ctx.integer("N"), ctx.integer("L")
    return M, N, L, ctx.integer("k", 1)


def counterexample_verdict(report: CounterexampleReport) -> str:
    return SUCCESS if report.matches_expected and not report.thickness.thick else FAILURE


def op_counterexample(ctx: RunContext) -> Result:
    report = counterexample_report(*counterexample_args(ctx))
    return counterexample_verdict(report), report.to_record()


OPERATIONS: Dict[str, Callable[[RunContext], Result]] = {
    "density": op_density,
    "folner-check": op_folner_check,
    "product": op_product,
    "delta": op_delta,
    "syndetic": op_syndetic,
    "thick": op_thick,
    "pws": op_pws,
    "embed": op_embed,
    "lemma overlap": op_lemma_overlap,
    "lemma delta-cover": op_lemma_delta_cover,
    "lemma shift": op_lemma_shift,
    "lemma chain": op_lemma_chain,
    "thm delta-cover": op_thm_delta_cover,
    "thm roots": op_thm_roots,
    "thm jin": op_thm_jin,
    "thm jin-pws": op_thm_jin_pws,
    "thm pullback": op_thm_pullback,
    "thm embed": op_thm_embed,
    "thm inverse-probe": op_thm_inverse_probe,
    "counterexample": op_counterexample,
}


# -----------------------
# Running
# -----------------------
def run(config: RunConfig) -> dict:
    """Execute one operation under the config's budgets.

    Budget exhaustion becomes verdict "inconclusive"; schema and precondition
    errors propagate as ConfigError / ParameterError for the CLI to report.
    """
    doc: Dict[str, Any] = {"operation": config.operation, "inputs": config.inputs()}
    with budgets_scope(config.effective_budgets()):
        ctx = RunContext(config.operation, config.group, config.sets, config.params)
        try:
            verdict, result = OPERATIONS[config.operation](ctx)
        except (SearchBudgetExceeded, WindowCapExceeded) as e:
            log.warning("%s: %s", config.operation, e)
            verdict, result = INCONCLUSIVE, {"reason": str(e)}
    clash = set(result) & set(RESERVED)
    if clash:
        raise FolnerError(f"result fields collide with document fields: {sorted(clash)}")
    doc["verdict"] = verdict
    doc.update(result)
    return doc


def run_batch(configs: List[dict]) -> List[dict]:
    """Run every config in order; a failing run is recorded as an error document."""
    docs = []
    for i, raw in enumerate(configs):
        try:
            docs.append(run(RunConfig.from_dict(raw)))
        except (ConfigError, ParameterError, OracleUndefined) as e:
            log.warning("batch run %d: %s", i, e)
            docs.append(error_document(e, raw.get("operation") if isinstance(raw, dict) else None))
    return docs


def error_document(exc: BaseException, operation: Optional[str] = None) -> dict:
    doc = {"verdict": "error", "error": {"type": type(exc).__name__, "message": str(exc)}}
    if operation is not None:
        doc["operation"] = operation
    return doc
