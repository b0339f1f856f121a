"""Exception types shared across the package."""


class AuditReconError(Exception):
    """Base class for all errors raised by this package."""


class AuditLogError(AuditReconError):
    """Malformed or inconsistent audit log input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CanonError(AuditReconError):
    """A value flagged as a document failed to canonicalize."""


class CarvedFormatError(AuditReconError):
    """Malformed carved-artifact interchange input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CompareModeError(AuditReconError):
    """Comparative analysis was requested on inputs that cannot support it."""


class PolicyError(AuditReconError):
    """Malformed file-write event input."""


class StoreError(AuditReconError):
    """Invalid operation against, or corruption detected in, a storage engine file."""


class WorkloadError(AuditReconError):
    """A workload script step is invalid for the selected engine."""
