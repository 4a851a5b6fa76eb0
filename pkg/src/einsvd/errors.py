"""Exception hierarchy shared by every module.

Each class maps to one CLI exit code (see :mod:`einsvd.cli`).
"""


class EinsvdError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ShapeError(EinsvdError, ValueError):
    """Operands have incompatible extents, orders or mode splits."""

    exit_code = 4


class ModeError(ShapeError):
    """A mode index lies outside ``1..order``."""


class PreconditionError(EinsvdError, ValueError):
    """An input violates a documented precondition (unit start, k < m, ...)."""

    exit_code = 4


class NumericalError(EinsvdError, ArithmeticError):
    """Non-finite values or an iteration that failed to converge."""

    exit_code = 5


class CapacityError(EinsvdError, MemoryError):
    """A dense oracle computation would exceed the configured size cap."""

    exit_code = 6


class FormatError(EinsvdError, OSError):
    """A file is malformed (bad magic, version, length or header)."""

    exit_code = 3
