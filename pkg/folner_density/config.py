#!/usr/bin/env python3
"""
Budgets and environment configuration.

Values come from (lowest to highest precedence):
1. the defaults below
2. a .env file in the project root (for local experiments)
3. the process environment
4. explicit overrides from the CLI or a run config

Environment Variables:
- FOLNER_WINDOW_CAP: maximum number of elements in any window
- FOLNER_SEARCH_BUDGET: maximum candidate checks a single search may spend
- FOLNER_WORKERS: thread workers used by grid scans
- FOLNER_CHAIN_DELTA: per-step defect tolerance for concentration chains
- FOLNER_PROGRESS: show tqdm progress bars on stderr
- FOLNER_LOG_LEVEL: log level used by the CLI
"""
from __future__ import annotations

import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterator, Optional

from folner_density.errors import ConfigError, SearchBudgetExceeded
from folner_density.rationals import fmt_opt

log = logging.getLogger(__name__)

# Try to load from .env file if it exists (for local development)
try:
    from dotenv import load_dotenv
    _env_path = os.path.join(os.path.dirname(__file__), "..", ".env")
    if os.path.exists(_env_path):
        load_dotenv(_env_path)
        log.info("Loaded environment variables from .env file")
except ImportError:
    pass

DEFAULT_WINDOW_CAP = 10_000_000
DEFAULT_SEARCH_BUDGET = 5_000_000
DEFAULT_WORKERS = 1


# --- Safe env helpers ---
def _get_int_env(name: str, default: int) -> int:
    val = os.environ.get(name)
    try:
        return int(str(val).strip()) if val not in (None, "") else default
    except (ValueError, TypeError):
        return default


def _get_fraction_env(name: str, default: Optional[Fraction]) -> Optional[Fraction]:
    val = os.environ.get(name)
    try:
        return Fraction(str(val).strip()) if val not in (None, "") else default
    except (ValueError, TypeError, ZeroDivisionError):
        return default


def _get_bool_env(name: str, default: bool) -> bool:
    val = os.environ.get(name)
    if val in (None, ""):
        return default
    return str(val).strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class Budgets:
    window_cap: int = DEFAULT_WINDOW_CAP
    search_budget: int = DEFAULT_SEARCH_BUDGET
    workers: int = DEFAULT_WORKERS
    chain_delta: Optional[Fraction] = None
    progress: bool = False

    def __post_init__(self):
        for name in ("window_cap", "search_budget", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"budget {name} must be positive, got {getattr(self, name)}")
        if self.chain_delta is not None and self.chain_delta <= 0:
            raise ConfigError(f"chain_delta must be positive, got {self.chain_delta}")

    @classmethod
    def from_env(cls) -> "Budgets":
        return cls(
            window_cap=_get_int_env("FOLNER_WINDOW_CAP", DEFAULT_WINDOW_CAP),
            search_budget=_get_int_env("FOLNER_SEARCH_BUDGET", DEFAULT_SEARCH_BUDGET),
            workers=_get_int_env("FOLNER_WORKERS", DEFAULT_WORKERS),
            chain_delta=_get_fraction_env("FOLNER_CHAIN_DELTA", None),
            progress=_get_bool_env("FOLNER_PROGRESS", False),
        )

    def override(self, **kw) -> "Budgets":
        """Apply non-None overrides (from CLI flags or a run config)."""
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_record(self) -> dict:
        return {
            "window_cap": self.window_cap,
            "search_budget": self.search_budget,
            "workers": self.workers,
            "chain_delta": fmt_opt(self.chain_delta),
        }


_ACTIVE: Optional[Budgets] = None


def budgets() -> Budgets:
    """Budgets in force: an active scope, else the environment (read on every call)."""
    return _ACTIVE if _ACTIVE is not None else Budgets.from_env()


@contextmanager
def budgets_scope(active: Budgets) -> Iterator[Budgets]:
    """Run a block under explicit budgets (CLI flags, run configs)."""
    global _ACTIVE
    previous, _ACTIVE = _ACTIVE, active
    try:
        yield active
    finally:
        _ACTIVE = previous


def setup_logging(level: Optional[str] = None) -> None:
    """Tagged stderr logging ([INFO] ..., [WARNING] ...); stdout stays clean for output."""
    level = (level or os.environ.get("FOLNER_LOG_LEVEL") or "WARNING").upper()
    root = logging.getLogger("folner_density")
    for h in list(root.handlers):
        root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
    root.addHandler(handler)
    root.setLevel(getattr(logging, level, logging.WARNING))


class SearchMeter:
    """Counts candidate checks against the search budget."""

    def __init__(self, what: str, budget: Optional[int] = None):
        self.what = what
        self.budget = budgets().search_budget if budget is None else budget
        self.spent = 0

    def spend(self, n: int = 1) -> None:
        self.spent += n
        if self.spent > self.budget:
            raise SearchBudgetExceeded(self.what, self.budget)
