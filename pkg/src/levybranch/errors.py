"""Semantic exceptions shared across modules."""


class NumericalError(RuntimeError):
    """A numeric routine failed its own accuracy or convergence contract."""


class InputError(ValueError):
    """Caller-supplied data does not satisfy an operation's precondition."""
