"""Exception types raised across the package."""


class TreeInvError(Exception):
    """Base class for all package errors."""


class TruncationExceeded(TreeInvError, ValueError):
    """A ball or image leaves the explicit truncation."""


class DepthMismatch(TreeInvError, ValueError):
    pass


class BadParams(TreeInvError, ValueError):
    pass


class InvalidPortrait(TreeInvError, ValueError):
    """A vertex map violates a portrait invariant (bijectivity, levels, parents)."""


class NotAnInversion(TreeInvError, ValueError):
    pass


class HypothesisViolated(TreeInvError, ValueError):
    """The input automorphism does not have the required sphere orders.

    ``level`` and ``order`` record the first sphere where the check failed.
    """

    def __init__(self, level: int, order: int, expected: int):
        self.level = level
        self.order = order
        self.expected = expected
        super().__init__(
            f"order on sphere {level} is {order}, expected {expected}"
        )


class BudgetExceeded(TreeInvError, RuntimeError):
    """Node-expansion cap reached before a search finished."""


class NoWitness(TreeInvError, RuntimeError):
    pass
