"""Exception hierarchy shared by all piecekit modules."""


class PiecekitError(Exception):
    """Base class for every error raised by piecekit."""


class EmptyFunction(PiecekitError, ValueError):
    """Operation needs at least one piece."""


class MixedParity(PiecekitError, ValueError):
    """Binary operation on piecewise functions with different parities."""


class ParseError(PiecekitError, ValueError):
    """Malformed serialized input.

    Attributes:
        position: character offset or JSON path of the offending token.
    """

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)


class ConstraintViolation(PiecekitError, ValueError):
    """Formula parameters inadmissible on the given interval."""


class UnknownFormula(PiecekitError, KeyError):
    def __str__(self):
        return f"unknown formula {self.args[0]!r}"


class ArityMismatch(PiecekitError, ValueError):
    pass


class UnsupportedKernel(PiecekitError, ValueError):
    """The formula has no closed-form primitive for this kernel and parameters."""


class MissingPrimitive(PiecekitError, LookupError):
    def __init__(self, formula, kernel):
        self.formula = formula
        self.kernel = kernel
        super().__init__(f"no primitive registered for formula {formula!r} "
                         f"and kernel {kernel!r}")


class RegistryFrozen(PiecekitError, RuntimeError):
    pass


class SingularPoint(PiecekitError, ValueError):
    """Real-axis transform requested at a singular point of the function."""

    def __init__(self, value, reason=""):
        self.value = value
        msg = f"singular point y = {value!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class RankDeficient(PiecekitError, ValueError):
    """Least-squares design lost column rank.

    Attributes:
        column: index of the offending design column.
        label: human-readable description of that column.
    """

    def __init__(self, column, label=""):
        self.column = column
        self.label = label
        super().__init__(f"rank-deficient design at column {column}"
                         + (f" ({label})" if label else ""))


class TargetNotFinite(PiecekitError, ValueError):
    def __init__(self, x, value):
        self.x = x
        self.value = value
        super().__init__(f"target returned {value!r} at x = {x!r}")


class FitDidNotConverge(PiecekitError, RuntimeError):
    """Subdivision limits reached with the residual still above tolerance.

    Attributes:
        interval: the worst failing subinterval.
        error: its observed maximum deviation.
        partial: best-effort PiecewiseFunction covering the whole interval.
        report: the FitReport for ``partial``.
    """

    def __init__(self, interval, error, partial=None, report=None):
        self.interval = interval
        self.error = error
        self.partial = partial
        self.report = report
        super().__init__(f"fit did not converge on {interval}: "
                         f"max error {error:.3e}")


class NoConvergence(PiecekitError, RuntimeError):
    def __init__(self, value, error, subdivisions):
        self.value = value
        self.error = error
        self.subdivisions = subdivisions
        super().__init__(f"quadrature did not converge after {subdivisions} "
                         f"subdivisions (estimate {error:.3e})")
