"""Exception types shared across the library."""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition or invariant."""


class CapabilityError(RuntimeError):
    """Raised when an exact computation would exceed its enumeration budget.

    The message names the offending size so callers can fall back to a
    sampled mode or shrink the instance.
    """
