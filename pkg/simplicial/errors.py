class SimplicialError(Exception):
    """Base class for errors raised by the simplicial package."""


class ValidationError(SimplicialError, ValueError):
    """Invalid or malformed input. `witness` holds the offending object when one exists."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class CapExceededError(SimplicialError):
    """An exact computation would exceed its configured cap."""

    def __init__(self, message, size=None, cap=None):
        super().__init__(message)
        self.size = size
        self.cap = cap


class CoalescenceError(SimplicialError, RuntimeError):
    pass


class CouplingError(SimplicialError, AssertionError):
    pass
