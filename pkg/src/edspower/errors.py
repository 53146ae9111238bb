"""Exception hierarchy.

Every error carries a machine-readable ``code`` and an ``exit_status`` so the
CLI can tell math failures (1) from bad input (2) and exhausted budgets (3).
"""

from __future__ import annotations


class EDSPowerError(Exception):
    code = "error"
    exit_status = 2


class InputError(EDSPowerError):
    code = "input_error"
    exit_status = 2


class NotOnCurveError(InputError):
    code = "not_on_curve"


class SingularModelError(InputError):
    code = "singular_model"


class TorsionError(InputError):
    """nP is the point at infinity, so no decomposition exists."""

    code = "torsion"


class PreconditionError(InputError):
    code = "precondition"


class ParseError(InputError):
    code = "parse_error"


class ConfigurationError(InputError):
    code = "configuration"


class CacheCorruptError(InputError):
    code = "cache_corrupt"


class DataError(InputError):
    """External data (eigenform tables) is inconsistent."""

    code = "bad_data"


class UnsafePrimeError(InputError):
    """The prime divides the equation-order discriminant."""

    code = "unsafe_prime"


class VerificationError(EDSPowerError):
    code = "verification_failed"
    exit_status = 1


class BudgetExceededError(EDSPowerError):
    code = "budget_exceeded"
    exit_status = 3


class UndecidedError(BudgetExceededError):
    """A square-root search neither produced a root nor a disproof."""

    code = "undecided"


class IncompleteReportError(EDSPowerError):
    code = "incomplete_report"
    exit_status = 1

    def __init__(self, message: str, gaps=()):
        super().__init__(message)
        self.gaps = list(gaps)
