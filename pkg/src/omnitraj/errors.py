"""Exception types shared across the toolkit.

The CLI maps these onto distinct exit codes, and the file-format readers
attach machine-readable ``code`` strings so callers can tell corruption
modes apart without parsing messages.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ToolkitError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DegeneratePathError(DomainError):
    """Antipodal endpoint pair: the interpolation rule divides by sin(omega) = 0."""

    def __init__(self, message, pair_index=None):
        super().__init__(message)
        self.pair_index = pair_index


class EmptySelectionError(DomainError):
    """No trajectories survived filtering; advise lowering the threshold."""


class TrackerError(ToolkitError):
    """A tracker implementation failed on one seed."""

    def __init__(self, message, seed_index):
        super().__init__(message)
        self.seed_index = seed_index


class FormatError(ToolkitError, ValueError):
    """Malformed or inconsistent interchange file.

    ``code`` is a stable slug identifying the corruption mode, e.g.
    ``bad-magic``, ``bad-header``, ``length-mismatch``, ``geometry-mismatch``,
    ``truncated-payload``.
    """

    def __init__(self, code, message):
        super().__init__(f"[{code}] {message}")
        self.code = code
