"""Exception hierarchy shared by all solver modules."""


class CarbonDMSError(Exception):
    """Base class for package errors."""


class ParameterError(CarbonDMSError, ValueError):
    """An input parameter is outside its admissible range.

    ``field`` names the offending parameter when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InfeasibleTargetError(CarbonDMSError):
    """The emission cap is below the least achievable emission rate."""


class NotConvergedError(CarbonDMSError):
    """Column generation hit its iteration cap."""
