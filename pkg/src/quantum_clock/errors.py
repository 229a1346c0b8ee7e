"""Exception hierarchy shared by every module."""


class ClockError(Exception):
    """Base class; ``category`` is the machine-readable tag used by the CLI."""

    category = "ClockError"


class LeakageExceeded(ClockError):
    category = "LeakageExceeded"


class InsufficientData(ClockError):
    category = "InsufficientData"


class NotInterior(ClockError):
    category = "NotInterior"


class ZeroState(ClockError):
    category = "ZeroState"


class QuadratureUnconverged(ClockError):
    category = "QuadratureUnconverged"


class DimensionMismatch(ClockError):
    category = "DimensionMismatch"


class IncompatibleSystem(ClockError):
    category = "IncompatibleSystem"


class StrongInteraction(ClockError):
    """The overlap with the clock span is not admissible; the clock cannot work."""

    category = "StrongInteraction"


class ConfigInvalid(ClockError):
    category = "ConfigInvalid"


class ExperimentFailed(ClockError):
    category = "ExperimentFailed"
