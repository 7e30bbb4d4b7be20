"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """An input violates an operation's precondition."""


class DegenerateAlignmentError(DomainError):
    """The adapting or non-adapting sum phasor has zero magnitude."""


class TargetUnreachableError(DomainError):
    """A requested efficiency cannot be guaranteed for the given gains."""


class ProtocolError(RuntimeError):
    """Feedback does not match what the running algorithm expects."""


class InvariantViolation(ArithmeticError):
    """A quantity left its mathematically admissible range."""
