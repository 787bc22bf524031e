"""Exception types shared across clonekit."""


class ClonekitError(Exception):
    """Base class for all clonekit errors."""


class InvalidRankError(ClonekitError, ValueError):
    pass


class EvenArityError(ClonekitError, ValueError):
    pass


class ArityError(ClonekitError, ValueError):
    """A symbol was applied to the wrong number of children."""


class DomainError(ClonekitError, ValueError):
    """Values or tables do not live on the expected chain."""


class SubstitutionError(ClonekitError, KeyError):
    pass


class MissingBindingError(ClonekitError, KeyError):
    pass


class NotApplicableError(ClonekitError, ValueError):
    """A construction's precondition does not hold.

    The message names the clause that failed.
    """


class BudgetExceededError(ClonekitError):
    """A node, evaluation or width budget would be exceeded.

    ``stage`` optionally carries a descriptor of the work that was refused,
    so callers can report it instead of a materialized object.
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class DivergenceError(ClonekitError):
    pass


class ParseError(ClonekitError, ValueError):
    pass
