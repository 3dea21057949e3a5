"""Exception hierarchy shared by every module."""


class FKdVError(Exception):
    """Base class for package errors."""


class ConfigurationError(FKdVError, ValueError):
    """A parameter violates a documented precondition.

    ``rules`` carries the names of every violated constraint so callers
    can report all of them at once.
    """

    def __init__(self, message, rules=()):
        super().__init__(message)
        self.rules = tuple(rules)


class IncompatibleGridError(FKdVError, ValueError):
    pass


class InvalidFieldError(FKdVError, ValueError):
    pass


class ResolutionError(FKdVError, ValueError):
    pass


class ConstructionError(FKdVError, RuntimeError):
    pass


class UnsupportedExponentError(FKdVError, ValueError):
    pass


class UnsupportedParameterError(FKdVError, ValueError):
    pass


class BlowUpError(FKdVError, RuntimeError):
    """Non-finite values appeared during time stepping.

    ``state`` is the last finite state; ``t`` is the time of the failed step.
    """

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class SequencingError(FKdVError, ValueError):
    pass


class ExperimentFailedError(FKdVError, RuntimeError):
    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = records


class SnapshotFormatError(FKdVError, ValueError):
    pass


class SnapshotLengthError(SnapshotFormatError):
    pass
