# backend/service/errors.py


class ConfigError(ValueError):
    """Invalid scenario or parameter combination."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class NumericError(RuntimeError):
    """Numerical evaluation failed. `point` echoes the offending grid point."""

    def __init__(self, message: str, point: dict | None = None):
        super().__init__(message)
        self.point = point or {}


class MeijerGConvergenceError(NumericError):
    pass


class CancellationError(NumericError):
    pass


class NonFiniteSampleError(NumericError):
    pass
