"""Exception hierarchy shared by every module."""


class BezdistillError(Exception):
    pass


class ShapeError(BezdistillError, ValueError):
    pass


class DomainError(BezdistillError, ValueError):
    pass


class UsageError(BezdistillError, ValueError):
    pass


class ConfigError(BezdistillError, ValueError):
    pass


class UnsupportedDimensionError(BezdistillError, ValueError):
    pass


class IntegrationDiverged(BezdistillError, FloatingPointError):
    def __init__(self, step: int, msg: str = ""):
        self.step = step
        super().__init__(msg or f"non-finite state at integration step {step}")


class TrainingDiverged(BezdistillError, FloatingPointError):
    def __init__(self, step: int, msg: str = ""):
        self.step = step
        super().__init__(msg or f"non-finite loss at training step {step}")


class WeightsError(BezdistillError, IOError):
    pass
