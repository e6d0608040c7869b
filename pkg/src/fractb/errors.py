"""Exception hierarchy shared by the solver, model and CLI layers."""


class FracTBError(Exception):
    """Base class for all package errors."""


class NumericalError(FracTBError):
    """A computation produced an unusable numerical result."""


class NonFiniteState(NumericalError):
    def __init__(self, step, t):
        super().__init__(f"non-finite state at step {step} (t={t:g})")
        self.step = step
        self.t = t


class NoConvergence(NumericalError):
    """A truncated series did not converge within its term budget."""


class DegenerateDenominator(NumericalError):
    """The reproduction-number denominator is not positive."""


class NoEndemicEquilibrium(NumericalError):
    """Only the disease-free steady state exists (R0 <= 1)."""


class ZeroInitialInfectious(NumericalError):
    """Efficacy measures need I(0) > 0."""


class GridMismatch(FracTBError, ValueError):
    """Two grid functions that must share a time grid do not."""


class NotConverged(FracTBError):
    """The forward-backward sweep hit its iteration cap.

    The last iterate is attached as ``solution`` so callers can still
    inspect or report it.
    """

    def __init__(self, solution, change):
        super().__init__(
            f"sweep did not converge after {solution.iterations} iterations "
            f"(last control change {change:.3e})"
        )
        self.solution = solution
        self.change = change


class ConfigError(FracTBError):
    """Base class for scenario loading problems."""


class ParseError(ConfigError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class UnknownKey(ConfigError):
    pass


class InvariantViolation(ConfigError, ValueError):
    """A parameter set breaks one of its documented invariants."""
