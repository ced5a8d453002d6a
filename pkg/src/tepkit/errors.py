"""Exception hierarchy shared by the modules and mapped to CLI exit codes."""


class TepkitError(Exception):
    exit_code = 1


class PreconditionError(TepkitError, ValueError):
    """Input violates a stated precondition (CLI exit 3)."""

    exit_code = 3


class NotFlatError(PreconditionError):
    pass


class InconsistentSystem(PreconditionError):
    """An order-by-order solve met an equation it cannot satisfy."""


class Refusal(TepkitError):
    """A mathematical 'no' carrying its reason (CLI exit 1)."""

    exit_code = 1
