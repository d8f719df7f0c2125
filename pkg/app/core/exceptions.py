"""Exception hierarchy shared by the solvers and the command line.

Every error carries the process exit code the CLI reports for it, the same
way an HTTP layer maps exceptions onto status codes.
"""

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3


class SolverSuiteError(Exception):
    """Base class for all errors raised by the suite."""

    exit_code: int = EXIT_SOLVER_FAILURE

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(SolverSuiteError, ValueError):
    exit_code = EXIT_CONFIG_ERROR


class InvalidParameterError(SolverSuiteError, ValueError):
    """A physical or architectural parameter outside its admissible range."""


class InvalidMeshError(SolverSuiteError, ValueError):
    pass


class InvalidContinuityError(SolverSuiteError, ValueError):
    pass


class OutOfDomainError(SolverSuiteError, ValueError):
    pass


class InvalidIntervalError(SolverSuiteError, ValueError):
    pass


class InsufficientPointsError(SolverSuiteError, ValueError):
    pass


class DimensionMismatchError(SolverSuiteError, ValueError):
    pass


class EmptyPointSetError(SolverSuiteError, ValueError):
    pass


class UnsupportedDegreeError(SolverSuiteError, ValueError):
    pass


class UnderdeterminedError(SolverSuiteError, ValueError):
    pass


class SolverFailureError(SolverSuiteError):
    def __init__(self, detail: str, condition_number: float = float("nan")):
        super().__init__(detail)
        self.condition_number = condition_number


class NonFiniteGradientError(SolverSuiteError):
    pass


class TrainingDivergedError(SolverSuiteError):
    def __init__(self, detail: str, epoch: int):
        super().__init__(detail)
        self.epoch = epoch
