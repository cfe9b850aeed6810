"""
Exception hierarchy for panelspec

Every pipeline failure derives from PanelSpecError so the CLI can report it
as a structured error and exit non-zero.
"""

from typing import Optional


class PanelSpecError(Exception):
    """Base class for all panelspec errors"""


class ConfigError(PanelSpecError):
    """Inconsistent or invalid run configuration"""


class MissingColumn(PanelSpecError):
    def __init__(self, column: str):
        super().__init__(f"Column '{column}' not found in data")
        self.column = column


class UnbalancedPanel(PanelSpecError):
    pass


class DuplicateCell(PanelSpecError):
    pass


class MissingValue(PanelSpecError):
    pass


class KnotOutOfRange(PanelSpecError):
    pass


class DegreeTooSmall(PanelSpecError):
    pass


class NestednessViolation(PanelSpecError):
    pass


class EmptyTestSet(PanelSpecError):
    pass


class RankDeficientW(PanelSpecError):
    pass


class InsufficientRows(PanelSpecError):
    pass


class SingularOmega(PanelSpecError):
    """Inner matrix of the quadratic form is not positive definite"""

    def __init__(self, message: str, candidate: Optional[str] = None):
        hint = "reduce a_n (fewer test directions) or check for collinear regressors"
        prefix = f"candidate {candidate}: " if candidate else ""
        super().__init__(f"{prefix}{message}; {hint}")
        self.detail = message
        self.candidate = candidate


class DomainError(PanelSpecError, ValueError):
    pass


class ReplicateFailureError(PanelSpecError):
    def __init__(self, failures: int, total: int, what: str = "replicates"):
        super().__init__(
            f"{failures} of {total} {what} failed, above the allowed share"
        )
        self.failures = failures
        self.total = total


class ChecksumMismatch(PanelSpecError):
    pass
