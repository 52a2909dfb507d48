"""Exception types raised by the solvers."""


class PathRelaxError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParam(PathRelaxError, ValueError):
    pass


class NonAdmissibleState(PathRelaxError):
    """A state left the admissible set of its model (e.g. a non-positive height).

    ``cell`` and ``time`` are filled in by the time loops when known.
    """

    def __init__(self, message, cell=None, time=None):
        self.cell = cell
        self.time = time
        context = []
        if cell is not None:
            context.append(f"cell={cell}")
        if time is not None:
            context.append(f"t={time:.17g}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class CFLViolation(PathRelaxError):
    pass


class NoConvergence(PathRelaxError):
    """Newton failed on the interface conditions; ``time`` and ``traces`` when known."""

    def __init__(self, iterations, residual_norm, time=None, traces=None):
        self.iterations = iterations
        self.residual_norm = residual_norm
        self.time = time
        self.traces = traces
        message = (
            f"Newton iteration did not converge after {iterations} iterations "
            f"(residual norm {residual_norm:.3e})"
        )
        if time is not None:
            message += f" at t={time:.17g}"
        if traces is not None:
            message += " for traces U0-=" + repr([float(v) for v in traces[0]])
            message += ", U0+=" + repr([float(v) for v in traces[1]])
        super().__init__(message)


class GridMismatch(PathRelaxError, ValueError):
    pass
