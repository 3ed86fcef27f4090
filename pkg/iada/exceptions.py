"""
Exception hierarchy for the iada package

Each exception carries the exit code the command line utility returns for it
"""


class IADAError(Exception):
    exit_code = 1


class InvalidArgumentError(IADAError, ValueError):
    exit_code = 2


class ResourceError(IADAError):
    exit_code = 3


class MissingPrerequisiteError(IADAError):
    exit_code = 3


class NumericalFailureError(IADAError):
    exit_code = 4

    def __init__(self, message, telemetry=None):
        super().__init__(message)
        self.telemetry = dict(telemetry or {})

    def __str__(self):
        if not self.telemetry:
            return super().__str__()
        return f"{super().__str__()} (telemetry: {self.telemetry})"


class InvariantViolationError(IADAError):
    pass


class BufferStateError(IADAError):
    pass
