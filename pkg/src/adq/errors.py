"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the set on which an operation is defined."""


class ConfigError(ValueError):
    """A configuration violates one of its invariants."""


class RangeError(IndexError):
    """A requested bit budget or window exceeds the data available."""


class DegeneratePairError(ValueError):
    """The two bitstreams of a pair sum to zero everywhere."""


class SingularStepError(ArithmeticError):
    """Newton's method hit a zero derivative."""

    def __init__(self, iterate, point):
        super().__init__(f"zero derivative at Newton iterate {iterate} (t={point!r})")
        self.iterate = iterate
        self.point = point


class DivergenceError(RuntimeError):
    """A recursion left the divergence guard box."""

    def __init__(self, step, state, partial=None):
        super().__init__(f"state {state!r} exceeded the divergence guard at step {step}")
        self.step = step
        self.state = state
        self.partial = partial


class WindowError(RangeError):
    """The coefficient window does not cover the filter support around t."""
