"""
Set oracles and window-scale Banach density estimation.

An estimate scans a grid of translated standard windows F_n·g (n from a
list, g from a shift grid) and keeps the largest (upper) or smallest (lower)
relative density. Ties keep the first grid point in (n, shift) order, so the
reported arg-max is the lexicographically least optimum whatever the number
of workers.
"""
from __future__ import annotations

import itertools
import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

from tqdm import tqdm

from folner_density.config import budgets
from folner_density.errors import ConfigError, OracleUndefined, ParameterError, SearchBudgetExceeded
from folner_density.group_core import (
    SHAPES,
    GroupElement,
    GroupModel,
    IntegerLattice,
    Window,
    folner_window,
    window_from_spec,
)
from folner_density.intsets import PeriodicSet, periodic_from_spec
from folner_density.rationals import fmt

log = logging.getLogger(__name__)

DIRECTIONS = ("upper", "lower")


# -----------------------
# Oracles
# -----------------------
class SetOracle(ABC):
    """Deterministic membership test for a subset of a group."""

    group: GroupModel

    @abstractmethod
    def __contains__(self, g) -> bool: ...

    @abstractmethod
    def spec(self) -> dict: ...

    def count(self, window: Window) -> int:
        """|A ∩ W|."""
        return sum(1 for g in window if g in self)

    def restrict(self, window: Window) -> FrozenSet[GroupElement]:
        """A ∩ W as an explicit set."""
        return frozenset(g for g in window if g in self)

    def members(self, window: Window) -> List[GroupElement]:
        """A ∩ W in window order."""
        return [g for g in window if g in self]

    def __repr__(self) -> str:
        try:
            return f"{type(self).__name__}({self.spec()})"
        except ConfigError:
            return f"{type(self).__name__}(<unnamed>)"


def _periodic_count(P: PeriodicSet, lo: int, hi: int) -> int:
    """#(P ∩ [lo, hi)) by residue arithmetic on each side of 0."""
    if hi <= lo:
        return 0
    p = P.period
    total = 0
    if hi > 0:
        total += _residue_count(max(lo, 0), hi, p, P.residues)
    if lo < 0:
        total += _residue_count(lo, min(hi, 0), p, P.negative_residues)
    for i, v in P.exceptions:
        if lo <= i < hi:
            total += 1 if v else -1
    return total


def _residue_count(lo: int, hi: int, modulus: int, residues: FrozenSet[int]) -> int:
    return sum((hi - 1 - r) // modulus - (lo - 1 - r) // modulus for r in residues)


@dataclass(frozen=True, repr=False)
class PeriodicOracle(SetOracle):
    """An eventually periodic subset of ℤ (as ℤ^1)."""

    pset: PeriodicSet
    group: GroupModel = field(default_factory=lambda: IntegerLattice(1))

    def __post_init__(self):
        if self.group != IntegerLattice(1):
            raise ParameterError(f"periodic sets live in Z^1, not {self.group.name()}")

    def __contains__(self, g) -> bool:
        return g[0] in self.pset

    def count(self, window: Window) -> int:
        if window.is_box:
            return _periodic_count(self.pset, window.lows[0], window.highs[0])
        return super().count(window)

    def spec(self) -> dict:
        return self.pset.spec()


@dataclass(frozen=True, repr=False)
class ResidueOracle(SetOracle):
    """{g : g[coordinate] mod modulus ∈ residues} in any model."""

    group: GroupModel
    modulus: int
    residues: FrozenSet[int]
    coordinate: int = 0

    def __post_init__(self):
        if self.modulus < 1:
            raise ParameterError(f"modulus must be positive, got {self.modulus}")
        if not 0 <= self.coordinate < self.group.arity:
            raise ParameterError(f"coordinate {self.coordinate} out of range for {self.group.name()}")
        object.__setattr__(self, "residues", frozenset(r % self.modulus for r in self.residues))

    def __contains__(self, g) -> bool:
        return g[self.coordinate] % self.modulus in self.residues

    def count(self, window: Window) -> int:
        if not window.is_box:
            return super().count(window)
        c = self.coordinate
        out = _residue_count(window.lows[c], window.highs[c], self.modulus, self.residues)
        for i, (lo, hi) in enumerate(zip(window.lows, window.highs)):
            if i != c:
                out *= hi - lo
        return out

    def spec(self) -> dict:
        return {"kind": "residue", "modulus": self.modulus, "residues": sorted(self.residues),
                "coordinate": self.coordinate}


@dataclass(frozen=True, repr=False)
class FiniteOracle(SetOracle):
    """An explicit finite point set, optionally only defined inside a bounding window."""

    group: GroupModel
    points: FrozenSet[GroupElement]
    bound: Optional[Window] = None

    def __post_init__(self):
        pts = frozenset(self.group.canonical(p) for p in self.points)
        if self.bound is not None and any(p not in self.bound for p in pts):
            raise ParameterError("finite oracle points must lie inside the bounding window")
        object.__setattr__(self, "points", pts)

    def __contains__(self, g) -> bool:
        g = tuple(g)
        if self.bound is not None and g not in self.bound:
            raise OracleUndefined(f"{g} lies outside the oracle's bounding window")
        return g in self.points

    def count(self, window: Window) -> int:
        if self.bound is not None:
            return super().count(window)
        if len(self.points) < window.size:
            return sum(1 for p in self.points if p in window)
        return super().count(window)

    def spec(self) -> dict:
        out = {"kind": "points", "elements": [list(p) for p in sorted(self.points)]}
        if self.bound is not None:
            out["bound"] = self.bound.descriptor()
        return out


@dataclass(frozen=True, repr=False)
class WindowOracle(SetOracle):
    """Membership in a window (a finite set defined everywhere)."""

    window: Window

    @property
    def group(self) -> GroupModel:
        return self.window.group

    def __contains__(self, g) -> bool:
        return tuple(g) in self.window

    def spec(self) -> dict:
        return {"kind": "window", "window": self.window.descriptor()}


def _is_square(x: int) -> bool:
    return x >= 0 and math.isqrt(x) ** 2 == x


def _is_power_of_two(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


NAMED_PREDICATES: Dict[str, Callable[[GroupElement], bool]] = {
    "squares": lambda g: _is_square(g[0]),
    "powers_of_two": lambda g: _is_power_of_two(g[0]),
}


@dataclass(frozen=True, repr=False)
class PredicateOracle(SetOracle):
    """Programmatic membership; only named predicates serialize."""

    group: GroupModel
    predicate: Callable[[GroupElement], bool]
    name: Optional[str] = None

    def __contains__(self, g) -> bool:
        return bool(self.predicate(tuple(g)))

    def spec(self) -> dict:
        if self.name is None:
            raise ConfigError("anonymous predicate oracles cannot be serialized")
        return {"kind": "predicate", "name": self.name}


@dataclass(frozen=True, repr=False)
class RunsOracle(SetOracle):
    """⋃_{j≥1} [b^j, b^j + j) ⊆ ℤ: runs of growing length separated by growing gaps."""

    base: int = 2
    group: GroupModel = field(default_factory=lambda: IntegerLattice(1))

    def __post_init__(self):
        if self.base < 2:
            raise ParameterError(f"runs base must be >= 2, got {self.base}")
        if self.group != IntegerLattice(1):
            raise ParameterError("runs oracle lives in Z^1")

    def __contains__(self, g) -> bool:
        x = g[0]
        j, start = 1, self.base
        while start <= x:
            if x < start + j:
                return True
            j += 1
            start *= self.base
        return False

    def spec(self) -> dict:
        return {"kind": "runs", "base": self.base}


@dataclass(frozen=True, repr=False)
class WholeOracle(SetOracle):
    group: GroupModel

    def __contains__(self, g) -> bool:
        return True

    def count(self, window: Window) -> int:
        return window.size

    def spec(self) -> dict:
        return {"kind": "whole"}


@dataclass(frozen=True, repr=False)
class EmptyOracle(SetOracle):
    group: GroupModel

    def __contains__(self, g) -> bool:
        return False

    def count(self, window: Window) -> int:
        return 0

    def spec(self) -> dict:
        return {"kind": "empty"}


@dataclass(frozen=True, repr=False)
class IntersectionOracle(SetOracle):
    parts: Tuple[SetOracle, ...]

    @property
    def group(self) -> GroupModel:
        return self.parts[0].group

    def __contains__(self, g) -> bool:
        return all(g in p for p in self.parts)

    def spec(self) -> dict:
        return {"kind": "intersection", "of": [p.spec() for p in self.parts]}


@dataclass(frozen=True, repr=False)
class UnionOracle(SetOracle):
    parts: Tuple[SetOracle, ...]

    @property
    def group(self) -> GroupModel:
        return self.parts[0].group

    def __contains__(self, g) -> bool:
        return any(g in p for p in self.parts)

    def spec(self) -> dict:
        return {"kind": "union", "of": [p.spec() for p in self.parts]}


@dataclass(frozen=True, repr=False)
class TranslateOracle(SetOracle):
    """xA (side="left") or Ax (side="right")."""

    base: SetOracle
    by: GroupElement
    side: str = "left"

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ParameterError(f"side must be left or right, got {self.side!r}")
        object.__setattr__(self, "by", self.base.group.canonical(self.by))

    @property
    def group(self) -> GroupModel:
        return self.base.group

    def __contains__(self, g) -> bool:
        G = self.group
        x_inv = G.inv(self.by)
        h = G.mul(x_inv, tuple(g)) if self.side == "left" else G.mul(tuple(g), x_inv)
        return h in self.base

    def count(self, window: Window) -> int:
        if window.is_box and isinstance(self.group, IntegerLattice):
            return self.base.count(window.translate(self.group.inv(self.by)))
        return super().count(window)

    def spec(self) -> dict:
        return {"kind": "translate", "of": self.base.spec(), "by": list(self.by), "side": self.side}


@dataclass(frozen=True, repr=False)
class InverseOracle(SetOracle):
    """A⁻¹."""

    base: SetOracle

    @property
    def group(self) -> GroupModel:
        return self.base.group

    def __contains__(self, g) -> bool:
        return self.group.inv(tuple(g)) in self.base

    def spec(self) -> dict:
        return {"kind": "inverse", "of": self.base.spec()}


@dataclass(frozen=True, repr=False)
class ProductOracle(SetOracle):
    """LR restricted to factorizations g = lr with l drawn from a factor window."""

    left: SetOracle
    right: SetOracle
    factor_window: Window

    @property
    def group(self) -> GroupModel:
        return self.left.group

    @cached_property
    def _left_members(self) -> Tuple[GroupElement, ...]:
        return tuple(self.left.members(self.factor_window))

    def factor(self, g) -> Optional[Tuple[GroupElement, GroupElement]]:
        """Least l (window order) with l⁻¹g in the right factor."""
        G = self.group
        g = tuple(g)
        for l in self._left_members:
            r = G.mul(G.inv(l), g)
            if r in self.right:
                return l, r
        return None

    def __contains__(self, g) -> bool:
        return self.factor(g) is not None

    def spec(self) -> dict:
        return {"kind": "product", "left": self.left.spec(), "right": self.right.spec(),
                "factor_window": self.factor_window.descriptor()}


_PRESETS = ("evens", "odds", "all", "Z", "whole", "N", "naturals", "empty", "multiples", "coset")


def oracle_from_spec(model: GroupModel, spec, named: Optional[Dict[str, SetOracle]] = None) -> SetOracle:
    """Build an oracle from a preset name, a set literal, or {"ref": name}."""
    named = named or {}
    if isinstance(spec, SetOracle):
        return spec
    if isinstance(spec, str):
        if spec in named:
            return named[spec]
        head = spec.split(":")[0]
        if head not in _PRESETS:
            raise ConfigError(f"unknown set {spec!r}")
        if head in ("all", "Z", "whole"):
            return WholeOracle(model)
        if head == "empty":
            return EmptyOracle(model)
        pset = periodic_from_spec(spec)
        if model == IntegerLattice(1):
            return PeriodicOracle(pset)
        if pset.exceptions or pset.support == "N" or pset.negative is not None:
            raise ConfigError(f"preset {spec!r} is only defined on Z^1")
        return ResidueOracle(model, pset.period, frozenset(pset.residues))
    if not isinstance(spec, dict):
        raise ConfigError(f"set spec must be a string or an object: {spec!r}")
    kind = spec.get("kind")
    try:
        if "ref" in spec:
            return named[spec["ref"]]
        if kind in ("periodic", "intervals", "finite", "counterexample"):
            if model != IntegerLattice(1):
                raise ConfigError(f"{kind} sets are only defined on Z^1")
            return PeriodicOracle(periodic_from_spec(spec))
        if kind == "residue":
            return ResidueOracle(model, int(spec["modulus"]), frozenset(spec["residues"]),
                                 int(spec.get("coordinate", 0)))
        if kind == "points":
            bound = window_from_spec(model, spec["bound"]) if "bound" in spec else None
            return FiniteOracle(model, frozenset(tuple(p) if isinstance(p, list) else p
                                                 for p in spec["elements"]), bound)
        if kind == "window":
            return WindowOracle(window_from_spec(model, spec["window"]))
        if kind == "runs":
            return RunsOracle(int(spec.get("base", 2)))
        if kind == "whole":
            return WholeOracle(model)
        if kind == "empty":
            return EmptyOracle(model)
        if kind == "predicate":
            name = spec["name"]
            if name not in NAMED_PREDICATES:
                raise ConfigError(f"unknown predicate {name!r}")
            return PredicateOracle(model, NAMED_PREDICATES[name], name)
        if kind in ("intersection", "union"):
            parts = tuple(oracle_from_spec(model, p, named) for p in spec["of"])
            if not parts:
                raise ConfigError(f"{kind} needs at least one part")
            return IntersectionOracle(parts) if kind == "intersection" else UnionOracle(parts)
        if kind == "translate":
            return TranslateOracle(oracle_from_spec(model, spec["of"], named), tuple(spec["by"]),
                                   spec.get("side", "left"))
        if kind == "inverse":
            return InverseOracle(oracle_from_spec(model, spec["of"], named))
        if kind == "product":
            return ProductOracle(oracle_from_spec(model, spec["left"], named),
                                 oracle_from_spec(model, spec["right"], named),
                                 window_from_spec(model, spec["factor_window"]))
    except KeyError as e:
        raise ConfigError(f"bad set spec {spec!r}: missing {e}") from e
    raise ConfigError(f"unknown set kind {kind!r}")


# -----------------------
# Estimates
# -----------------------
def relative_density(A: SetOracle, W: Window) -> Fraction:
    """|A ∩ W| / |W| exactly."""
    return Fraction(A.count(W), W.size)


@dataclass(frozen=True)
class DensityParams:
    """Grid of windows F_n·g: n values, a shift grid and the window family."""

    n_values: Tuple[int, ...] = (8,)
    shifts: Union[str, Tuple[GroupElement, ...]] = "window"
    family: str = "centered"

    def __post_init__(self):
        if not self.n_values:
            raise ParameterError("n_values must be nonempty")
        if any(n < 1 for n in self.n_values):
            raise ParameterError(f"window indices must be >= 1: {self.n_values}")
        if self.family not in SHAPES:
            raise ParameterError(f"unknown window family {self.family!r}")
        object.__setattr__(self, "n_values", tuple(sorted(set(self.n_values))))
        if isinstance(self.shifts, str):
            if self.shifts not in ("window", "wide"):
                raise ParameterError(f"shift grid must be 'window', 'wide' or a list, got {self.shifts!r}")
        else:
            if not self.shifts:
                raise ParameterError("explicit shift list must be nonempty")
            object.__setattr__(self, "shifts", tuple(sorted(set(
                tuple(s) if isinstance(s, (list, tuple)) else (s,) for s in self.shifts))))

    def shift_grid(self, model: GroupModel, n: int, window: Window) -> Sequence[GroupElement]:
        if self.shifts == "window":
            return window.elements
        if self.shifts == "wide":
            if not isinstance(model, IntegerLattice):
                raise ParameterError("the wide shift grid is only defined on Z^d")
            return list(itertools.product(range(-n * n, n * n + 1), repeat=model.d))
        return [model.canonical(s) for s in self.shifts]

    def grid_size(self, model: GroupModel) -> int:
        total = 0
        for n in self.n_values:
            w = folner_window(model, n, self.family)
            if self.shifts == "window":
                total += w.size
            elif self.shifts == "wide":
                total += (2 * n * n + 1) ** model.arity
            else:
                total += len(self.shifts)
        return total

    def to_record(self) -> dict:
        shifts = self.shifts if isinstance(self.shifts, str) else [list(s) for s in self.shifts]
        return {"n_values": list(self.n_values), "shifts": shifts, "family": self.family}

    @classmethod
    def from_record(cls, rec: dict) -> "DensityParams":
        shifts = rec.get("shifts", "window")
        if not isinstance(shifts, str):
            shifts = tuple(tuple(s) if isinstance(s, list) else (s,) for s in shifts)
        return cls(tuple(int(n) for n in rec.get("n_values", (8,))), shifts, rec.get("family", "centered"))


@dataclass(frozen=True)
class DensityEstimate:
    value: Fraction
    window_index: int
    shift: GroupElement
    direction: str
    params: DensityParams
    evaluated: int = 0

    def to_record(self) -> dict:
        return {
            "value": fmt(self.value),
            "window_index": self.window_index,
            "shift": list(self.shift),
            "direction": self.direction,
            "params": self.params.to_record(),
            "evaluated": self.evaluated,
        }


@dataclass(frozen=True)
class GridPoint:
    n: int
    shift: GroupElement
    value: Fraction


def _evaluate(A: SetOracle, base: Window, g: GroupElement) -> Fraction:
    return relative_density(A, base.translate(g, "right"))


def density_grid(A: SetOracle, model: GroupModel, params: DensityParams) -> List[GridPoint]:
    """Relative density of A on every window F_n·g of the grid, in grid order."""
    cfg = budgets()
    size = params.grid_size(model)
    if size > cfg.search_budget:
        raise SearchBudgetExceeded("density grid", cfg.search_budget)
    rows: List[GridPoint] = []
    bar = tqdm(total=size, desc="density grid", disable=not cfg.progress, leave=False)
    try:
        for n in params.n_values:
            base = folner_window(model, n, params.family)
            shifts = list(params.shift_grid(model, n, base))
            if cfg.workers > 1:
                with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                    values = list(pool.map(lambda g: _evaluate(A, base, g), shifts))
            else:
                values = [_evaluate(A, base, g) for g in shifts]
            rows.extend(GridPoint(n, g, v) for g, v in zip(shifts, values))
            bar.update(len(shifts))
    finally:
        bar.close()
    log.debug("density grid: %d windows evaluated", len(rows))
    return rows


def _reduce(rows: Sequence[GridPoint], direction: str, params: DensityParams) -> DensityEstimate:
    better = (lambda a, b: a > b) if direction == "upper" else (lambda a, b: a < b)
    best = rows[0]
    for row in rows[1:]:
        if better(row.value, best.value):
            best = row
    return DensityEstimate(best.value, best.n, best.shift, direction, params, len(rows))


def density_estimate(A: SetOracle, model: GroupModel, params: DensityParams,
                     direction: str = "upper") -> DensityEstimate:
    if direction not in DIRECTIONS:
        raise ParameterError(f"direction must be upper or lower, got {direction!r}")
    return _reduce(density_grid(A, model, params), direction, params)


def upper_density_estimate(A: SetOracle, model: GroupModel, params: DensityParams) -> DensityEstimate:
    """max over the grid of |A ∩ F_n·g| / |F_n|; a lower bound for the upper Banach density."""
    return density_estimate(A, model, params, "upper")


def lower_density_estimate(A: SetOracle, model: GroupModel, params: DensityParams) -> DensityEstimate:
    """min over the grid; an upper bound for the lower Banach density."""
    return density_estimate(A, model, params, "lower")


def both_estimates(A: SetOracle, model: GroupModel,
                   params: DensityParams) -> Tuple[DensityEstimate, DensityEstimate]:
    """(lower, upper) from a single grid scan."""
    rows = density_grid(A, model, params)
    return _reduce(rows, "lower", params), _reduce(rows, "upper", params)
