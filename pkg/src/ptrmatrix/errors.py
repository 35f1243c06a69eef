class LengthMismatch(ValueError):
    pass


class OutOfRange(IndexError):
    pass


class NotAOneInput(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class RoundLimitExceeded(RuntimeError):
    pass


class AccountingViolation(AssertionError):
    """A milestone trace spent more reads than its discards pay for."""
