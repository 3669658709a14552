"""Exception hierarchy shared by all modules."""


class InputError(Exception):
    """Malformed user input (files, flags, vertex names)."""


class PreconditionError(Exception):
    """An operation was called outside its documented precondition."""


class InternalInvariantError(Exception):
    """A guaranteed structural invariant failed; signals a solver bug."""
