"""Exception types. The CLI prints the class name verbatim.

Subclasses of :class:`InvariantViolation` signal that a checked mathematical
property failed (exit status 2 from the CLI); everything else is a plain
domain error.
"""


class BTwistError(Exception):
    pass


class InvariantViolation(BTwistError):
    pass


class NonPositiveRadius(InvariantViolation):
    pass


class OutOfStrip(BTwistError):
    pass


class DiscriminantNonPositive(BTwistError):
    pass


class TwistViolation(InvariantViolation):
    pass


class NoRootInStrip(BTwistError):
    def __init__(self, message, k_interval=None):
        super().__init__(message)
        self.k_interval = k_interval


class ExtensionFailed(InvariantViolation):
    pass


class NoImpact(BTwistError):
    pass


class GrazingImpact(BTwistError):
    pass


class NoConvergence(BTwistError):
    pass


class StripEscape(BTwistError):
    pass


class OutOfRange(BTwistError):
    pass


class NotInClass(BTwistError):
    pass


class DegenerateDiscriminant(InvariantViolation):
    pass
