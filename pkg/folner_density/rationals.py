"""Exact rational helpers: "num/den" serialization and floor-of-ratio bounds."""
from __future__ import annotations

from fractions import Fraction
from typing import Optional

from folner_density.errors import ConfigError

Rational = Fraction


def q(value) -> Fraction:
    """Coerce ints, Fractions and "a/b" / decimal strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"not a rational: {value!r}") from e
    raise ConfigError(f"not a rational: {value!r}")


def fmt(value: Fraction) -> str:
    """Serialize as "num/den" (the denominator is always written)."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def fmt_opt(value: Optional[Fraction]) -> Optional[str]:
    return None if value is None else fmt(value)


def floor_q(value: Fraction) -> int:
    return value.numerator // value.denominator


def pigeonhole_threshold(gamma: Fraction, eps: Fraction) -> Optional[int]:
    """⌊(γ−ε)/(γ²−ε)⌋, or None when γ² ≤ ε (no bound available)."""
    gamma, eps = Fraction(gamma), Fraction(eps)
    den = gamma * gamma - eps
    if den <= 0:
        return None
    return floor_q((gamma - eps) / den)


def inverse_product_bound(*densities: Fraction) -> Optional[int]:
    """⌊1/(α·β·…)⌋, or None when some density is zero."""
    prod = Fraction(1)
    for d in densities:
        prod *= Fraction(d)
    if prod <= 0:
        return None
    return floor_q(1 / prod)
