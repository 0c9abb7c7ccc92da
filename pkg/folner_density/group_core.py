"""
Concrete amenable group models, Følner windows and invariance defects.

Elements are plain integer tuples in the model's canonical coordinates:
- IntegerLattice(d): vectors of ℤ^d, componentwise addition
- Heisenberg3: triples (a, b, c) with (a,b,c)(a',b',c') = (a+a', b+b', c+c'+a·b')
- FiniteCyclic(n): 1-tuples of residues mod n
- DirectProduct(factors): concatenated factor coordinates

Standard windows are coordinate boxes [lows, highs), stored by their bounds so
that size and membership are O(1); elements are produced lazily in
lexicographic coordinate order.
"""
from __future__ import annotations

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from folner_density.config import budgets
from folner_density.errors import ArityError, ConfigError, ParameterError, WindowCapExceeded

log = logging.getLogger(__name__)

GroupElement = Tuple[int, ...]

SHAPES = ("centered", "anchored")


# -----------------------
# Group models
# -----------------------
class GroupModel(ABC):
    """A finitely generated amenable group with total operations on canonical coordinates."""

    kind: str = ""

    @property
    @abstractmethod
    def arity(self) -> int: ...

    @abstractmethod
    def moduli(self) -> Tuple[Optional[int], ...]:
        """Per-coordinate modulus (None for an integer coordinate)."""

    @abstractmethod
    def mul(self, g: GroupElement, h: GroupElement) -> GroupElement: ...

    @abstractmethod
    def inv(self, g: GroupElement) -> GroupElement: ...

    @abstractmethod
    def standard_bounds(self, n: int, shape: str) -> Tuple[GroupElement, GroupElement]:
        """Box bounds [lows, highs) of the n-th window of the given family."""

    @abstractmethod
    def spec(self) -> dict: ...

    @property
    def is_abelian(self) -> bool:
        return True

    @property
    def is_finite(self) -> bool:
        return all(m is not None for m in self.moduli())

    def identity(self) -> GroupElement:
        return (0,) * self.arity

    def order(self) -> Optional[int]:
        if not self.is_finite:
            return None
        return reduce(lambda a, b: a * b, self.moduli(), 1)

    def canonical(self, coords) -> GroupElement:
        """Validate arity and reduce finite coordinates; accepts a bare int for arity 1."""
        if isinstance(coords, bool):
            raise ArityError(f"{self.name()}: not a group element: {coords!r}")
        if isinstance(coords, int):
            coords = (coords,)
        try:
            coords = tuple(coords)
        except TypeError as e:
            raise ArityError(f"{self.name()}: not a group element: {coords!r}") from e
        if len(coords) != self.arity:
            raise ArityError(
                f"{self.name()}: expected {self.arity} coordinates, got {len(coords)} in {coords!r}"
            )
        out = []
        for c, m in zip(coords, self.moduli()):
            if isinstance(c, bool) or not isinstance(c, int):
                raise ArityError(f"{self.name()}: non-integer coordinate {c!r}")
            out.append(c % m if m is not None else c)
        return tuple(out)

    def check(self, g: GroupElement) -> GroupElement:
        """Raise unless g is already canonical for this model."""
        c = self.canonical(g)
        if c != tuple(g):
            raise ArityError(f"{self.name()}: {g!r} is not in canonical form")
        return c

    def power(self, g: GroupElement, k: int) -> GroupElement:
        if k < 0:
            return self.power(self.inv(g), -k)
        result, base = self.identity(), g
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def commutator(self, g: GroupElement, h: GroupElement) -> GroupElement:
        """[g, h] = g h g⁻¹ h⁻¹ (identity for abelian models)."""
        return self.mul(self.mul(g, h), self.mul(self.inv(g), self.inv(h)))

    def noncommuting_pair(self) -> Optional[Tuple[GroupElement, GroupElement, GroupElement]]:
        """First two standard generators with a nontrivial commutator, and that commutator."""
        gens = self.generators()
        for i, g in enumerate(gens):
            for h in gens[i + 1:]:
                c = self.commutator(g, h)
                if c != self.identity():
                    return g, h, c
        return None

    def generators(self) -> List[GroupElement]:
        """Standard generating set (unit vectors / residue 1 per factor)."""
        gens = []
        for i, m in enumerate(self.moduli()):
            if self.kind == "Heisenberg3" and i == 2:
                continue
            if m == 1:
                continue
            e = [0] * self.arity
            e[i] = 1
            gens.append(tuple(e))
        return gens or [self.identity()]

    def name(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        return self.name()


@dataclass(frozen=True, repr=False)
class IntegerLattice(GroupModel):
    d: int = 1
    kind = "Zd"

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"IntegerLattice needs d >= 1, got {self.d}")

    @property
    def arity(self) -> int:
        return self.d

    def moduli(self):
        return (None,) * self.d

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def power(self, g, k):
        return tuple(a * k for a in g)

    def standard_bounds(self, n, shape):
        if shape == "anchored":
            return (0,) * self.d, (n,) * self.d
        return (-n,) * self.d, (n + 1,) * self.d

    def spec(self):
        return {"kind": "Zd", "d": self.d}

    def name(self):
        return f"Z^{self.d}"


@dataclass(frozen=True, repr=False)
class Heisenberg3(GroupModel):
    kind = "Heisenberg3"

    @property
    def arity(self) -> int:
        return 3

    def moduli(self):
        return (None, None, None)

    @property
    def is_abelian(self) -> bool:
        return False

    def mul(self, g, h):
        a, b, c = g
        a2, b2, c2 = h
        return (a + a2, b + b2, c + c2 + a * b2)

    def inv(self, g):
        a, b, c = g
        return (-a, -b, a * b - c)

    def standard_bounds(self, n, shape):
        if shape == "anchored":
            return (0, 0, 0), (n, n, n * n)
        return (-n, -n, -n * n), (n + 1, n + 1, n * n + 1)

    def spec(self):
        return {"kind": "Heisenberg3"}


@dataclass(frozen=True, repr=False)
class FiniteCyclic(GroupModel):
    n: int = 1
    kind = "FiniteCyclic"

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"FiniteCyclic needs n >= 1, got {self.n}")

    @property
    def arity(self) -> int:
        return 1

    def moduli(self):
        return (self.n,)

    def mul(self, g, h):
        return ((g[0] + h[0]) % self.n,)

    def inv(self, g):
        return ((-g[0]) % self.n,)

    def standard_bounds(self, n, shape):
        return (0,), (self.n,)

    def spec(self):
        return {"kind": "FiniteCyclic", "n": self.n}

    def name(self):
        return f"Z/{self.n}"


@dataclass(frozen=True, repr=False)
class DirectProduct(GroupModel):
    factors: Tuple[GroupModel, ...] = ()
    kind = "Product"

    def __post_init__(self):
        if len(self.factors) < 1:
            raise ParameterError("DirectProduct needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @cached_property
    def _slices(self) -> List[slice]:
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + f.arity))
            start += f.arity
        return out

    @property
    def arity(self) -> int:
        return sum(f.arity for f in self.factors)

    def moduli(self):
        return tuple(itertools.chain.from_iterable(f.moduli() for f in self.factors))

    @property
    def is_abelian(self) -> bool:
        return all(f.is_abelian for f in self.factors)

    def _split(self, g):
        return [g[s] for s in self._slices]

    def mul(self, g, h):
        return tuple(itertools.chain.from_iterable(
            f.mul(a, b) for f, a, b in zip(self.factors, self._split(g), self._split(h))
        ))

    def inv(self, g):
        return tuple(itertools.chain.from_iterable(
            f.inv(a) for f, a in zip(self.factors, self._split(g))
        ))

    def standard_bounds(self, n, shape):
        lows, highs = [], []
        for f in self.factors:
            lo, hi = f.standard_bounds(n, shape)
            lows.extend(lo)
            highs.extend(hi)
        return tuple(lows), tuple(highs)

    def generators(self):
        gens = []
        for f, s in zip(self.factors, self._slices):
            for g in f.generators():
                if g == f.identity():
                    continue
                e = [0] * self.arity
                e[s] = list(g)
                gens.append(tuple(e))
        return gens or [self.identity()]

    def spec(self):
        return {"kind": "Product", "factors": [f.spec() for f in self.factors]}

    def name(self):
        return " x ".join(f.name() for f in self.factors)


def group_from_spec(spec) -> GroupModel:
    """Parse {"kind":"Zd","d":2}, {"kind":"Heisenberg3"}, {"kind":"FiniteCyclic","n":6}, {"kind":"Product","factors":[…]}."""
    if isinstance(spec, dict) and "group" in spec and "kind" not in spec:
        spec = spec["group"]
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"group spec must be an object with a 'kind': {spec!r}")
    kind = spec["kind"]
    try:
        if kind in ("Zd", "Z", "IntegerLattice"):
            return IntegerLattice(int(spec.get("d", 1)))
        if kind in ("Heisenberg3", "Heisenberg"):
            return Heisenberg3()
        if kind in ("FiniteCyclic", "Zn"):
            return FiniteCyclic(int(spec["n"]))
        if kind in ("Product", "DirectProduct"):
            factors = spec.get("factors")
            if not isinstance(factors, list):
                raise ConfigError("Product group needs a 'factors' list")
            return DirectProduct(tuple(group_from_spec(f) for f in factors))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad group spec {spec!r}: {e}") from e
    raise ConfigError(f"unknown group kind {kind!r}")


def element_ops(model: GroupModel, op: str, g=None, h=None) -> GroupElement:
    """Checked group law: op in {"mul", "inv", "id"}; operands must be canonical."""
    if op == "id":
        return model.identity()
    if op == "inv":
        return model.inv(model.check(g))
    if op == "mul":
        return model.mul(model.check(g), model.check(h))
    raise ParameterError(f"unknown group operation {op!r}")


# -----------------------
# Windows
# -----------------------
@dataclass(frozen=True, eq=False)
class Window:
    """A finite nonempty subset of a group, ordered lexicographically by coordinates."""

    group: GroupModel
    lows: Optional[GroupElement] = None
    highs: Optional[GroupElement] = None
    explicit: Optional[Tuple[GroupElement, ...]] = None
    params: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def box(cls, group: GroupModel, lows, highs, params: Optional[dict] = None,
            cap: Optional[int] = None) -> "Window":
        lows, highs = tuple(lows), tuple(highs)
        if len(lows) != group.arity or len(highs) != group.arity:
            raise ArityError(f"{group.name()}: box bounds need {group.arity} coordinates")
        for lo, hi, m in zip(lows, highs, group.moduli()):
            if hi <= lo:
                raise ParameterError(f"empty box [{lows}, {highs})")
            if m is not None and (lo < 0 or hi > m):
                raise ParameterError(f"box side [{lo},{hi}) leaves residues mod {m}")
        w = cls(group, lows, highs, None, dict(params or {"shape": "box"}))
        _check_cap(w.size, cap)
        return w

    @classmethod
    def from_elements(cls, group: GroupModel, elements: Iterable, params: Optional[dict] = None,
                      cap: Optional[int] = None) -> "Window":
        elems = sorted({group.canonical(e) for e in elements})
        if not elems:
            raise ParameterError("a window must be nonempty")
        _check_cap(len(elems), cap)
        return cls(group, None, None, tuple(elems), dict(params or {"shape": "explicit"}))

    @property
    def is_box(self) -> bool:
        return self.explicit is None

    @cached_property
    def size(self) -> int:
        if self.explicit is not None:
            return len(self.explicit)
        return reduce(lambda a, b: a * b, (h - l for l, h in zip(self.lows, self.highs)), 1)

    def __len__(self) -> int:
        return self.size

    @cached_property
    def _members(self) -> frozenset:
        return frozenset(self.explicit or ())

    def __contains__(self, g) -> bool:
        if self.explicit is not None:
            return tuple(g) in self._members
        return all(l <= c < h for c, l, h in zip(g, self.lows, self.highs))

    def __iter__(self) -> Iterator[GroupElement]:
        if self.explicit is not None:
            return iter(self.explicit)
        return itertools.product(*(range(l, h) for l, h in zip(self.lows, self.highs)))

    @cached_property
    def elements(self) -> Tuple[GroupElement, ...]:
        return tuple(iter(self))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Window):
            return NotImplemented
        if self.group != other.group or self.size != other.size:
            return False
        if self.is_box and other.is_box:
            return (self.lows, self.highs) == (other.lows, other.highs)
        return self.elements == other.elements

    __hash__ = object.__hash__

    def least(self) -> GroupElement:
        return self.lows if self.is_box else self.explicit[0]

    def translate(self, g: GroupElement, side: str = "right") -> "Window":
        """Wg (side="right") or gW (side="left")."""
        g = self.group.canonical(g)
        params = {"shape": "translate", "of": self.descriptor(), "by": list(g), "side": side}
        if self.is_box and isinstance(self.group, IntegerLattice):
            return Window(self.group, self.group.mul(self.lows, g), self.group.mul(self.highs, g),
                          None, params)
        mul = self.group.mul
        if side == "right":
            elems = (mul(w, g) for w in self)
        else:
            elems = (mul(g, w) for w in self)
        return Window.from_elements(self.group, elems, params)

    def inverse(self) -> "Window":
        params = {"shape": "inverse", "of": self.descriptor()}
        if self.is_box and isinstance(self.group, IntegerLattice):
            return Window(self.group, tuple(1 - h for h in self.highs),
                          tuple(1 - l for l in self.lows), None, params)
        return Window.from_elements(self.group, (self.group.inv(w) for w in self), params)

    def descriptor(self) -> dict:
        out = dict(self.params)
        if self.is_box:
            out.setdefault("lows", list(self.lows))
            out.setdefault("highs", list(self.highs))
        elif out.get("shape") == "explicit":
            out["elements"] = [list(e) for e in self.explicit]
        return out

    def __repr__(self) -> str:
        return f"Window({self.group.name()}, {self.params.get('shape')}, size={self.size})"


def _check_cap(size: int, cap: Optional[int]) -> None:
    cap = budgets().window_cap if cap is None else cap
    if size > cap:
        raise WindowCapExceeded(size, cap)


def folner_window(model: GroupModel, n: int, shape: str = "centered",
                  cap: Optional[int] = None) -> Window:
    """The n-th standard Følner window.

    centered: [−n,n]^d for ℤ^d, [−n,n]²×[−n²,n²] for Heisenberg₃;
    anchored: [0,n)^d, [0,n)²×[0,n²); finite models always give the whole group,
    products take products of factor windows.
    """
    if n < 1:
        raise ParameterError(f"window index must be >= 1, got {n}")
    if shape not in SHAPES:
        raise ParameterError(f"unknown window family {shape!r}; expected one of {SHAPES}")
    lows, highs = model.standard_bounds(n, shape)
    return Window.box(model, lows, highs, {"shape": shape, "n": n}, cap=cap)


def box_window(model: GroupModel, lows, highs, cap: Optional[int] = None) -> Window:
    """Explicit coordinate box [lows, highs), e.g. K = [0,10) in ℤ."""
    lows = model.canonical(lows) if model.is_finite else tuple(lows if not isinstance(lows, int) else (lows,))
    highs = tuple(highs if not isinstance(highs, int) else (highs,))
    return Window.box(model, lows, highs, {"shape": "box"}, cap=cap)


def window_from_spec(model: GroupModel, spec) -> Window:
    """Parse a window descriptor produced by Window.descriptor() (or a bare Følner index)."""
    if isinstance(spec, int) and not isinstance(spec, bool):
        return folner_window(model, spec)
    if not isinstance(spec, dict):
        raise ConfigError(f"window spec must be an object or an integer: {spec!r}")
    shape = spec.get("shape", "centered")
    try:
        if shape in SHAPES:
            return folner_window(model, int(spec["n"]), shape)
        if shape == "box":
            return box_window(model, spec["lows"], spec["highs"])
        if shape == "interval":
            return box_window(model, (int(spec["lo"]),), (int(spec["hi"]),))
        if shape == "explicit":
            return Window.from_elements(model, spec["elements"])
        if shape == "translate":
            return window_from_spec(model, spec["of"]).translate(spec["by"], spec.get("side", "right"))
        if shape == "inverse":
            return window_from_spec(model, spec["of"]).inverse()
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad window spec {spec!r}: {e}") from e
    raise ConfigError(f"unknown window shape {shape!r}")


# -----------------------
# Invariance defects
# -----------------------
def _axis_overlap(lo: int, hi: int, h: int, m: Optional[int]) -> int:
    """#{c ∈ [lo,hi) : c+h ∈ [lo,hi)} on one coordinate (ℤ or ℤ/m)."""
    length = hi - lo
    if m is None:
        return max(0, length - abs(h))
    if length == m:
        return length
    return sum(1 for c in range(lo, hi) if lo <= (c + h) % m < hi)


def _box_abelian_overlap(window: Window, h: GroupElement) -> Optional[int]:
    """|hK ∩ K| for a box in an abelian coordinate group, or None when not applicable."""
    if not window.is_box or not window.group.is_abelian:
        return None
    out = 1
    for lo, hi, hc, m in zip(window.lows, window.highs, h, window.group.moduli()):
        out *= _axis_overlap(lo, hi, hc, m)
        if out == 0:
            return 0
    return out


def translate_overlap(window: Window, h: GroupElement, side: str = "left") -> int:
    """|hK ∩ K| (side="left") or |Kh ∩ K| (side="right")."""
    fast = _box_abelian_overlap(window, h)
    if fast is not None:
        return fast
    mul = window.group.mul
    if side == "left":
        return sum(1 for k in window if mul(h, k) in window)
    return sum(1 for k in window if mul(k, h) in window)


def element_defect(window: Window, h: GroupElement, side: str = "left") -> Fraction:
    """|hK △ K| / |K| (left) or |Kh △ K| / |K| (right), exactly."""
    size = window.size
    return Fraction(2 * (size - translate_overlap(window, h, side)), size)


def invariance_defect(window: Window, H: Sequence[GroupElement], side: str = "left") -> Fraction:
    """max over h ∈ H of |hK △ K| / |K| (left translation by default)."""
    H = [window.group.canonical(h) for h in H]
    if not H:
        raise ParameterError("invariance_defect needs a nonempty H")
    return max(element_defect(window, h, side) for h in H)


def is_invariant(window: Window, H: Sequence[GroupElement], eps: Fraction, side: str = "left") -> bool:
    """Følner's (H, ε)-invariance: |hK △ K|/|K| < ε for every h ∈ H."""
    return invariance_defect(window, H, side) < Fraction(eps)


@dataclass(frozen=True)
class FolnerScan:
    group: GroupModel
    H: Tuple[GroupElement, ...]
    eps: Fraction
    shape: str
    rows: Tuple[Tuple[int, int, Fraction], ...]
    first_invariant_n: Optional[int]


def folner_scan(model: GroupModel, H: Sequence[GroupElement], eps: Fraction,
                n_values: Sequence[int], shape: str = "centered", side: str = "left",
                cap: Optional[int] = None) -> FolnerScan:
    """Defect of each standard window and the first n whose window is (H, ε)-invariant."""
    H = tuple(model.canonical(h) for h in H)
    eps = Fraction(eps)
    rows, first = [], None
    for n in sorted(set(n_values)):
        w = folner_window(model, n, shape, cap=cap)
        d = invariance_defect(w, H, side)
        rows.append((n, w.size, d))
        log.debug("window n=%d size=%d defect=%s", n, w.size, d)
        if first is None and d < eps:
            first = n
    return FolnerScan(model, H, eps, shape, tuple(rows), first)


def max_defect_over(window: Window, carrier: Iterable[GroupElement], side: str = "left") -> Fraction:
    """max over d in a carrier set of the d-translation defect (0 for an empty carrier)."""
    best = Fraction(0)
    seen = set()
    for d in carrier:
        if d in seen:
            continue
        seen.add(d)
        v = element_defect(window, d, side)
        if v > best:
            best = v
    return best
