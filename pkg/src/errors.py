"""Exception hierarchy shared by all FairTrade modules.

The CLI maps these onto process exit codes (see ``src.cli.main``).
"""

from typing import Any


class FairTradeError(Exception):
    """Base class for every error raised by this package."""


class ContractError(FairTradeError, ValueError):
    """A precondition of an operation was violated (shapes, names, selections)."""


class GraphValidationError(ContractError):
    def __init__(self, message: str, cycle: tuple[str, ...] = ()):
        super().__init__(message)
        self.cycle = cycle


class IdentifiabilityError(ContractError):
    def __init__(self, message: str, witness: str):
        super().__init__(message)
        self.witness = witness


class StateError(FairTradeError, RuntimeError):
    """An operation was called in the wrong order (e.g. backward before forward)."""


class NumericalAbort(FairTradeError, ArithmeticError):
    def __init__(self, message: str, index: int | None = None, checkpoint: Any = None):
        super().__init__(message)
        self.index = index
        self.checkpoint = checkpoint


class AdapterError(FairTradeError, RuntimeError):
    def __init__(self, message: str, partial_log: list[Any] | None = None):
        super().__init__(message)
        self.partial_log = partial_log or []
