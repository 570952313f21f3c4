from typing import Any

try:
    from builtins import ExceptionGroup
except ImportError:
    from exceptiongroup import ExceptionGroup


class HapsimError(Exception):
    pass


class ZeroInertiaError(HapsimError):
    pass


class NoStiffnessError(HapsimError):
    pass


class NonFiniteStateError(HapsimError):
    pass


class SingularDiscretizationError(HapsimError):
    pass


class DegenerateBetaError(HapsimError):
    pass


class HorizonZeroError(HapsimError):
    pass


class LengthMismatchError(HapsimError):
    pass


class ShapeMismatchError(HapsimError):
    pass


class SingularSystemError(HapsimError):
    pass


class HistoryMissingError(HapsimError):
    pass


class OutOfDomainError(HapsimError):
    pass


class EmptyLogError(HapsimError):
    pass


class TimingMismatchError(HapsimError):
    pass


class ScenarioParseError(HapsimError):
    def __init__(self, location: str, message: str):
        super().__init__(location, message)
        self.location = location
        self.message = message

    def __str__(self):
        return f"{self.location}: {self.message}"


class ScenarioValidationError(HapsimError):
    def __init__(self, invariant: str):
        super().__init__(invariant)
        self.invariant = invariant

    def __str__(self):
        return f"Scenario violates invariant: {self.invariant}"


class MissingColumnError(HapsimError):
    def __init__(self, column: str):
        super().__init__(column)
        self.column = column

    def __str__(self):
        return f"Column {self.column!r} is not present in the log"


class SimulationError(HapsimError):
    def __init__(self, step: int, t: float, cause: Any):
        super().__init__(step, t, cause)
        self.step = step
        self.t = t
        self.cause = cause

    def __str__(self):
        return (
            f"Simulation failed at step {self.step} (t={self.t:g} s): "
            f"{self.cause}"
        )


class SweepError(ExceptionGroup, HapsimError):
    pass
