"""Exception hierarchy shared by every module.

Library code raises these; only the CLI turns them into verdicts and exit codes.
"""
from __future__ import annotations


class FolnerError(Exception):
    """Base class for all errors raised by folner_density."""


class ParameterError(FolnerError, ValueError):
    """A documented precondition was violated."""


class ArityError(ParameterError):
    """Coordinates do not match the arity of the group model."""


class WindowCapExceeded(FolnerError):
    """A window would exceed the configured size cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(f"window of {size} elements exceeds cap {cap}")
        self.size = size
        self.cap = cap


class SearchBudgetExceeded(FolnerError):
    """A search ran out of its candidate budget before reaching a conclusion."""

    def __init__(self, what: str, budget: int):
        super().__init__(f"{what}: search budget of {budget} checks exhausted")
        self.what = what
        self.budget = budget


class OracleUndefined(FolnerError):
    """Membership was queried outside the domain an oracle is defined on."""


class ConfigError(FolnerError):
    """Run configuration or JSON literal does not match the documented schema."""


class CertificateError(FolnerError):
    """A certificate failed replay."""
