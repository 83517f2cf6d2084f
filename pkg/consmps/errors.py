# consmps/errors.py
"""Exception hierarchy shared by the library and the command line.

Every error carries the process exit code the CLI reports for it.
"""


class ConsMPSError(Exception):
    """Base class for all consmps errors."""
    exit_code = 1


class InstanceError(ConsMPSError):
    """Malformed instance file or generator parameters."""
    exit_code = 2


class ConfigError(ConsMPSError):
    """Invalid optimizer or run settings."""
    exit_code = 2


class DimensionMismatch(ConsMPSError, ValueError):
    """Operands live in lattices of different dimension."""
    exit_code = 2


class InfeasibleSystem(ConsMPSError):
    """No bitstring satisfies the constraint system."""
    exit_code = 3

    def __init__(self, message="constraint system is infeasible"):
        if "infeasible" not in message:
            message = f"infeasible: {message}"
        super().__init__(message)


class ResourceLimitExceeded(ConsMPSError):
    """An enumeration or coordinate bound was exceeded."""
    exit_code = 4


class FactorizationError(ConsMPSError):
    """Joint-block SVD received nothing but zero blocks."""


class CenterOutOfRange(ConsMPSError, IndexError):
    """Canonical centre cannot move past the end of the chain."""


class TrainingError(ConsMPSError):
    """The centre tensor underflowed during a gradient step."""


class VerificationFailed(ConsMPSError):
    """Contraction result disagrees with the enumeration oracle."""
