"""
Exact arithmetic on eventually periodic subsets of ℤ.

A PeriodicSet is a residue rule x mod p ∈ R for x >= 0, a second rule
x mod p ∈ R⁻ for x < 0, and finitely many overrides. Sets with support "N"
have no negative elements (the ℕ-indexed unions of the counterexample
family); sets with support "Z" follow R⁻ on the negative axis, which is R
unless stated otherwise.

Instances are always canonical: minimal period shared by both rules,
overrides that agree with the rule dropped, R⁻ stored only when it differs
from R, and sets with no negative members stored with support "N".
Structural equality of two instances is therefore set equality.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from folner_density.errors import ConfigError, ParameterError
from folner_density.rationals import fmt, q

log = logging.getLogger(__name__)

SUPPORTS = ("N", "Z")


def _minimal_period(period: int, rules: Sequence[frozenset]) -> Tuple[int, Tuple[frozenset, ...]]:
    for d in range(1, period + 1):
        if period % d:
            continue
        if all(((r + d) % period in rs) for rs in rules for r in rs):
            return d, tuple(frozenset(r % d for r in rs) for rs in rules)
    return period, tuple(rules)


@dataclass(frozen=True)
class PeriodicSet:
    period: int = 1
    residues: Tuple[int, ...] = ()
    exceptions: Tuple[Tuple[int, bool], ...] = ()
    support: str = "N"
    negative: Optional[Tuple[int, ...]] = None  # rule below 0 on ℤ-sets; None: same as residues

    def __post_init__(self):
        if not isinstance(self.period, int) or self.period < 1:
            raise ParameterError(f"period must be a positive integer, got {self.period!r}")
        if self.support not in SUPPORTS:
            raise ParameterError(f"support must be one of {SUPPORTS}, got {self.support!r}")
        res = frozenset(self.residues)
        neg = res if self.negative is None else frozenset(self.negative)
        if any(not 0 <= r < self.period for r in res | neg):
            raise ParameterError(f"residues must lie in [0,{self.period}): {sorted(res | neg)}")
        overrides: Dict[int, bool] = {}
        for i, flag in self.exceptions:
            overrides[int(i)] = bool(flag)
        if self.support == "N":
            if self.negative is not None and neg:
                raise ParameterError("ℕ-sets have no negative rule")
            if any(i < 0 for i in overrides):
                raise ParameterError(f"exception index must be >= 0 on an ℕ-set, got {min(overrides)}")
            neg = frozenset()
        period, (res, neg) = _minimal_period(self.period, (res, neg))

        def rule(i: int) -> bool:
            return (i % period) in (neg if i < 0 else res)

        kept = tuple(sorted((i, v) for i, v in overrides.items() if v != rule(i)))
        support = self.support
        if not neg and not any(i < 0 for i, _ in kept):
            support = "N"
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "residues", tuple(sorted(res)))
        object.__setattr__(self, "exceptions", kept)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "negative", None if support == "N" or neg == res else tuple(sorted(neg)))

    # --- construction helpers ---
    @classmethod
    def from_rule(cls, period: int, residues: Iterable[int], support: str, prefix_len: int,
                  member: Callable[[int], bool], negative: Optional[Iterable[int]] = None,
                  lo: int = 0) -> "PeriodicSet":
        """Side rules plus explicit membership on [lo, prefix_len)."""
        return cls(period, tuple(residues), tuple((i, member(i)) for i in range(lo, prefix_len)), support,
                   None if negative is None else tuple(negative))

    @classmethod
    def finite(cls, elements: Iterable[int]) -> "PeriodicSet":
        elems = sorted(set(int(e) for e in elements))
        if elems and elems[0] < 0:
            raise ParameterError(f"finite PeriodicSets hold non-negative integers only, got {elems[0]}")
        return cls(1, (), tuple((e, True) for e in elems), "N")

    @classmethod
    def interval(cls, lo: int, hi: int) -> "PeriodicSet":
        """The finite interval [lo, hi) ⊆ ℕ."""
        return cls.finite(range(lo, hi))

    @classmethod
    def empty(cls) -> "PeriodicSet":
        return cls(1, (), (), "N")

    @classmethod
    def everything(cls, support: str = "Z") -> "PeriodicSet":
        return cls(1, (0,), (), support)

    @classmethod
    def coset(cls, modulus: int, residue: int = 0, support: str = "Z") -> "PeriodicSet":
        return cls(modulus, (residue % modulus,), (), support)

    @classmethod
    def repeated_intervals(cls, items: Sequence[Sequence[int]], repeat: Optional[int]) -> "PeriodicSet":
        """⋃_{n≥0} [a+n·repeat, b+n·repeat) over the items [a, b); finite when repeat is None."""
        items = [(int(a), int(b)) for a, b in items]
        for a, b in items:
            if a < 0 or b < a:
                raise ParameterError(f"interval [{a},{b}) must satisfy 0 <= a <= b")
        if repeat is None:
            return cls.finite(x for a, b in items for x in range(a, b))
        if repeat < 1:
            raise ParameterError(f"repeat must be positive, got {repeat}")
        residues = {x % repeat for a, b in items for x in range(a, min(b, a + repeat))}
        prefix = max((b for _, b in items), default=0)

        def member(i: int) -> bool:
            # the latest block starting at or before i reaches furthest
            return any(a <= i < b + (i - a) // repeat * repeat for a, b in items)

        return cls.from_rule(repeat, residues, "N", prefix, member)

    # --- queries ---
    @cached_property
    def _overrides(self) -> Dict[int, bool]:
        return dict(self.exceptions)

    @property
    def negative_residues(self) -> Tuple[int, ...]:
        """R⁻, the rule followed below 0; empty on ℕ-sets."""
        if self.support == "N":
            return ()
        return self.residues if self.negative is None else self.negative

    @property
    def is_empty(self) -> bool:
        return not self.residues and not self.negative_residues and not self.added()

    @property
    def span(self) -> Tuple[int, int]:
        """[lo, hi) around 0 outside which membership follows the side rules."""
        if not self.exceptions:
            return 0, 0
        return min(0, self.exceptions[0][0]), max(0, self.exceptions[-1][0] + 1)

    @property
    def prefix_len(self) -> int:
        return self.span[1]

    @property
    def is_finite(self) -> bool:
        return not self.residues and not self.negative_residues

    def rule(self, x: int) -> bool:
        if x < 0:
            return (x % self.period) in self.negative_residues
        return (x % self.period) in self.residues

    def __contains__(self, x) -> bool:
        if isinstance(x, tuple):
            (x,) = x
        if x in self._overrides:
            return self._overrides[x]
        return self.rule(x)

    def added(self) -> List[int]:
        """Members not predicted by the residue rules."""
        return [i for i, v in self.exceptions if v]

    def members(self, lo: int, hi: int) -> List[int]:
        return [x for x in range(lo, hi) if x in self]

    def mask(self, length: int) -> int:
        """Bitmask of the members in [0, length)."""
        out = 0
        for x in range(length):
            if x in self:
                out |= 1 << x
        return out

    def exact_density(self) -> Fraction:
        """|R|/p: natural density of the positive side, equal to its Banach density."""
        return Fraction(len(self.residues), self.period)

    # --- algebra ---
    def _combine(self, other: "PeriodicSet", op: Callable[[bool, bool], bool]) -> "PeriodicSet":
        period = math.lcm(self.period, other.period)

        def side(a: Sequence[int], b: Sequence[int]) -> set:
            return {r for r in range(period) if op(r % self.period in a, r % other.period in b)}

        pos = side(self.residues, other.residues)
        neg = side(self.negative_residues, other.negative_residues)
        lo = min(self.span[0], other.span[0])
        hi = max(self.span[1], other.span[1])
        return PeriodicSet.from_rule(period, pos, "Z", hi, lambda i: op(i in self, i in other),
                                     negative=neg, lo=lo)

    def union(self, other: "PeriodicSet") -> "PeriodicSet":
        return self._combine(other, lambda a, b: a or b)

    def intersection(self, other: "PeriodicSet") -> "PeriodicSet":
        return self._combine(other, lambda a, b: a and b)

    __or__ = union
    __and__ = intersection

    def complement(self) -> "PeriodicSet":
        """Complement within the support (ℕ or ℤ)."""
        every = set(range(self.period))
        res = every - set(self.residues)
        neg = every - set(self.negative_residues) if self.support == "Z" else set()
        lo, hi = self.span
        return PeriodicSet.from_rule(self.period, res, self.support, hi, lambda i: i not in self,
                                     negative=neg, lo=lo)

    def translate(self, t: int) -> "PeriodicSet":
        """P + t; an ℕ-set moved left becomes a ℤ-set with finitely many negative members."""
        if t == 0:
            return self
        p = self.period
        res = {(r + t) % p for r in self.residues}
        neg = {(r + t) % p for r in self.negative_residues}
        lo, hi = self.span
        support = "Z" if self.support == "Z" or t < 0 else "N"
        return PeriodicSet.from_rule(p, res, support, max(hi + t, t, 0), lambda i: (i - t) in self,
                                     negative=neg, lo=min(lo + t, t, 0))

    def truncate(self, lo: int, hi: int) -> "PeriodicSet":
        """Finite set P ∩ [lo, hi) with lo >= 0."""
        if lo < 0:
            raise ParameterError("truncate needs lo >= 0")
        return PeriodicSet.finite(self.members(lo, hi))

    # --- serialization ---
    def spec(self) -> dict:
        out = {
            "kind": "periodic",
            "period": self.period,
            "residues": list(self.residues),
            "exceptions": [[i, v] for i, v in self.exceptions],
            "support": self.support,
        }
        if self.negative is not None:
            out["negative"] = list(self.negative)
        return out

    def describe(self) -> str:
        body = f"{{x ≡ {list(self.residues)} mod {self.period}}}"
        if self.negative is not None:
            body += f" ∪ {{x < 0, x ≡ {list(self.negative)} mod {self.period}}}"
        if self.exceptions:
            lo, hi = self.span
            body += f" with {len(self.exceptions)} overrides in [{lo},{hi})"
        return f"{body} ⊆ {'ℕ' if self.support == 'N' else 'ℤ'}"


# -----------------------
# Sumsets
# -----------------------
def _nonneg_sumset(P: PeriodicSet, Q: PeriodicSet) -> PeriodicSet:
    period = math.lcm(P.period, Q.period)
    threshold = P.prefix_len + Q.prefix_len + 2 * period
    length = threshold + period
    top = (1 << length) - 1
    qmask = Q.mask(length)
    acc = 0
    for a in range(length):
        if a in P:
            acc |= (qmask << a) & top
    residues = {x % period for x in range(threshold, length) if (acc >> x) & 1}
    support = "N"
    log.debug("sumset over [0,%d) with period %d", length, period)
    return PeriodicSet.from_rule(period, residues, support, threshold, lambda i: bool((acc >> i) & 1))


def _two_sided_sumset(P: PeriodicSet, Q: PeriodicSet) -> PeriodicSet:
    period = math.lcm(P.period, Q.period)
    (lp, hp), (lq, hq) = P.span, Q.span
    # the sum follows the positive rules from `top` up and the negative rules below `bottom`
    top = hp + hq + 2 * period
    bottom = lp + lq - 2 * period - 2
    xa, xb = bottom - period, top + period
    # one full period of witnesses p beyond both irregular windows
    pa = min(lp, xa - hq) - period
    pb = max(hp, xb - lq) + period
    qa, qb = xa - pb, xb - 1 - pa
    qmask = 0
    for y in range(qa, qb + 1):
        if y in Q:
            qmask |= 1 << (y - qa)
    window = (1 << (xb - xa)) - 1
    acc = 0
    for p in range(pa, pb + 1):
        if p in P:
            s = p + qa - xa
            acc |= (qmask << s if s >= 0 else qmask >> -s) & window

    def member(x: int) -> bool:
        return bool((acc >> (x - xa)) & 1)

    pos = {x % period for x in range(top, xb) if member(x)}
    neg = {x % period for x in range(xa, bottom) if member(x)}
    log.debug("two-sided sumset over [%d,%d) with period %d", xa, xb, period)
    return PeriodicSet.from_rule(period, pos, "Z", top, member, negative=neg, lo=bottom)


def periodic_sumset(P: PeriodicSet, Q: PeriodicSet) -> PeriodicSet:
    """Exact sumset {p + q}.

    ℕ-sets are summed by bitmask convolution over a prefix long enough for the
    tail to be periodic. When a two-sided set is involved the convolution runs
    over a window reaching one period past both regions where the sum may be
    irregular, and each side's rule is read off the far ends.
    """
    if P.is_empty or Q.is_empty:
        return PeriodicSet.empty()
    if P.support == "N" and Q.support == "N":
        return _nonneg_sumset(P, Q)
    return _two_sided_sumset(P, Q)


def sumset_many(sets: Sequence[PeriodicSet]) -> PeriodicSet:
    if not sets:
        return PeriodicSet.finite([0])
    return reduce(periodic_sumset, sets)


# -----------------------
# Thickness
# -----------------------
@dataclass(frozen=True)
class RunLengths:
    max_run: Optional[int]  # None: unbounded
    max_gap: Optional[int]  # None: unbounded (finite set)


def run_lengths(P: PeriodicSet) -> RunLengths:
    """Longest run of members and longest gap in the periodic tail above 0 (below 0 when bounded above)."""
    p, res = P.period, set(P.residues) or set(P.negative_residues)
    if not res:
        best = cur = 0
        last = None
        for x in P.added():
            cur = cur + 1 if last is not None and x == last + 1 else 1
            best = max(best, cur)
            last = x
        return RunLengths(best, None)
    if len(res) == p:
        return RunLengths(None, 0)
    runs, gaps = 0, 0
    cur_in = cur_out = 0
    for x in range(2 * p):
        if (x % p) in res:
            cur_in += 1
            cur_out = 0
        else:
            cur_out += 1
            cur_in = 0
        runs, gaps = max(runs, cur_in), max(gaps, cur_out)
    return RunLengths(runs, gaps)


@dataclass(frozen=True)
class ThicknessVerdict:
    thick: bool
    max_run: Optional[int]
    gap: Optional[int]

    def to_record(self) -> dict:
        return {"thick": self.thick, "max_run": self.max_run, "recurring_gap": self.gap}


def is_thick_periodic(P: PeriodicSet) -> ThicknessVerdict:
    """Thick iff one side's rule is every residue; otherwise the recurring gaps refute it."""
    runs = run_lengths(P)
    thick = runs.max_run is None or len(P.negative_residues) == P.period
    return ThicknessVerdict(thick, runs.max_run, runs.max_gap)


# -----------------------
# Counterexample family
# -----------------------
def _check_counterexample_args(M: int, N: int, L: int, k: int) -> None:
    for name, v in (("M", M), ("N", N), ("L", L), ("k", k)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ParameterError(f"{name} must be a positive integer, got {v!r}")
    if not M + N + 1 < L:
        raise ParameterError(
            f"need M/L + N/L + 1/L < 1, got ({M}+{N}+1)/{L} = {fmt(Fraction(M + N + 1, L))}"
        )


def counterexample_pair(M: int, N: int, L: int, k: int) -> Tuple[PeriodicSet, PeriodicSet]:
    """A_k = ⋃[Lnk, Lnk+Mk) and B_k = ⋃[Lnk, Lnk+Nk), n >= 0."""
    _check_counterexample_args(M, N, L, k)
    A = PeriodicSet.repeated_intervals([[0, M * k]], L * k)
    B = PeriodicSet.repeated_intervals([[0, N * k]], L * k)
    return A, B


def counterexample_parameters(alpha, beta) -> Tuple[int, int, int]:
    """Least L with M = ⌊αL⌋+1, N = ⌊βL⌋+1 and M+N+1 < L (so M/L > α, N/L > β)."""
    alpha, beta = q(alpha), q(beta)
    if alpha < 0 or beta < 0 or alpha + beta >= 1:
        raise ParameterError(f"need α, β >= 0 with α + β < 1, got {fmt(alpha)}, {fmt(beta)}")
    L = 1
    while True:
        M = math.floor(alpha * L) + 1
        N = math.floor(beta * L) + 1
        if M + N + 1 < L:
            return M, N, L
        L += 1


@dataclass(frozen=True)
class CounterexampleReport:
    M: int
    N: int
    L: int
    k: int
    A: PeriodicSet
    B: PeriodicSet
    sumset: PeriodicSet
    expected: PeriodicSet
    thickness: ThicknessVerdict

    @property
    def density_A(self) -> Fraction:
        return self.A.exact_density()

    @property
    def density_B(self) -> Fraction:
        return self.B.exact_density()

    @property
    def block_length(self) -> int:
        return (self.M + self.N + 1) * self.k - 2

    @property
    def matches_expected(self) -> bool:
        return self.sumset == self.expected

    def to_record(self) -> dict:
        return {
            "M": self.M, "N": self.N, "L": self.L, "k": self.k,
            "A": self.A.spec(),
            "B": self.B.spec(),
            "density_A": fmt(self.density_A),
            "density_B": fmt(self.density_B),
            "sumset": self.sumset.spec(),
            "sumset_density": fmt(self.sumset.exact_density()),
            "block_length": self.block_length,
            "matches_expected": self.matches_expected,
            **self.thickness.to_record(),
        }


def counterexample_report(M: int, N: int, L: int, k: int) -> CounterexampleReport:
    """Densities, exact A_k + B_k + [0,k), and its non-thickness."""
    A, B = counterexample_pair(M, N, L, k)
    S = sumset_many([A, B, PeriodicSet.interval(0, k)])
    # [0,a) + [0,b) = [0, a+b-1) over the integers
    expected = PeriodicSet.repeated_intervals([[0, (M + N + 1) * k - 2]], L * k)
    verdict = is_thick_periodic(S)
    log.info("counterexample M=%d N=%d L=%d k=%d: gap %s", M, N, L, k, verdict.gap)
    return CounterexampleReport(M, N, L, k, A, B, S, expected, verdict)


# -----------------------
# JSON literals
# -----------------------
def _preset(name: str) -> PeriodicSet:
    parts = name.split(":")
    head = parts[0]
    try:
        if head == "evens":
            return PeriodicSet.coset(2, 0)
        if head == "odds":
            return PeriodicSet.coset(2, 1)
        if head in ("all", "Z", "whole"):
            return PeriodicSet.everything("Z")
        if head in ("N", "naturals"):
            return PeriodicSet.everything("N")
        if head == "empty":
            return PeriodicSet.empty()
        if head == "multiples":
            return PeriodicSet.coset(int(parts[1]), 0)
        if head == "coset":
            return PeriodicSet.coset(int(parts[1]), int(parts[2]))
    except (IndexError, ValueError) as e:
        raise ConfigError(f"bad set preset {name!r}") from e
    raise ConfigError(f"unknown set preset {name!r}")


def periodic_from_spec(spec) -> PeriodicSet:
    """Parse a preset name or a {"kind": "periodic" | "intervals" | "finite"} literal."""
    if isinstance(spec, str):
        return _preset(spec)
    if not isinstance(spec, dict):
        raise ConfigError(f"set literal must be an object or a preset name: {spec!r}")
    kind = spec.get("kind")
    try:
        if kind == "periodic":
            return PeriodicSet(
                int(spec["period"]),
                tuple(int(r) for r in spec.get("residues", [])),
                tuple((int(i), bool(v)) for i, v in spec.get("exceptions", [])),
                spec.get("support", "Z"),
                None if spec.get("negative") is None else tuple(int(r) for r in spec["negative"]),
            )
        if kind == "intervals":
            repeat = spec.get("repeat")
            return PeriodicSet.repeated_intervals(spec["items"], None if repeat is None else int(repeat))
        if kind == "finite":
            return PeriodicSet.finite(int(x) for x in spec["elements"])
        if kind == "counterexample":
            A, B = counterexample_pair(int(spec["M"]), int(spec["N"]), int(spec["L"]), int(spec["k"]))
            return A if spec.get("which", "A") == "A" else B
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ParameterError):
            raise
        raise ConfigError(f"bad set literal {spec!r}: {e}") from e
    raise ConfigError(f"unknown set literal kind {kind!r}")
