"""Exception hierarchy shared by every module of the workbench."""


class WorkbenchError(Exception):
    """Base class for all errors raised by :mod:`mathphys`."""


class InvalidInputError(WorkbenchError, ValueError):
    pass


class DomainEscapeError(WorkbenchError):
    """A Picard iterate left the ball on which the field is controlled."""


class BlowUpError(WorkbenchError, ArithmeticError):
    """A non-finite state appeared during time integration."""

    def __init__(self, message, last_time):
        super().__init__(f"{message} (last finite state at t={last_time!r})")
        self.last_time = last_time


class NotAFixedPointError(WorkbenchError, ValueError):
    pass


class AliasingError(InvalidInputError):
    pass


class UndefinedFitError(WorkbenchError, ValueError):
    pass


class InsufficientResolutionError(WorkbenchError, ValueError):
    pass


class InvalidModeError(InvalidInputError):
    pass


class InvalidFieldError(InvalidInputError):
    pass


class DegeneratePointError(WorkbenchError, ArithmeticError):
    """Band touching: eigenvalues are returned but projections are undefined."""

    def __init__(self, message, varpi, e_plus, e_minus):
        super().__init__(message)
        self.varpi = varpi
        self.e_plus = e_plus
        self.e_minus = e_minus


class TruncationError(WorkbenchError):
    pass


class PreconditionError(WorkbenchError, ValueError):
    def __init__(self, hypothesis, message):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis


class BracketError(WorkbenchError, ArithmeticError):
    pass


class SingularityError(WorkbenchError, ValueError):
    pass


class SolverError(WorkbenchError, ArithmeticError):
    pass


class GradientMismatchError(WorkbenchError, AssertionError):
    pass


class UsageError(WorkbenchError):
    pass


class FlagParseError(UsageError, ValueError):
    def __init__(self, flag, message):
        super().__init__(f"--{flag}: {message}")
        self.flag = flag
