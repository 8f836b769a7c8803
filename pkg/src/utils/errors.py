"""Exception hierarchy shared across the package."""


class NrmError(Exception):
    """Base class for all package errors."""


class InstanceFormatError(NrmError, ValueError):
    """Raised when an instance file cannot be parsed or fails the schema."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        context = []
        if field:
            context.append(f"field '{field}'")
        if line is not None:
            context.append(f"line {line}")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(f"{message}{suffix}")


class InvalidInstanceError(NrmError, ValueError):
    """Raised when an operation requires a valid instance and validation fails."""


class LatticeTooLargeError(NrmError):
    """Raised when the exact DP lattice exceeds the configured cell cap."""


class FamilyTooLargeError(NrmError):
    """Raised when an assortment family is too large to enumerate."""


class SolverError(NrmError):
    """Raised when an LP solution is required to be optimal but is not."""


class PolicyError(NrmError):
    """Raised when a policy is misused or attempts an infeasible action."""
