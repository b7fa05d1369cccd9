"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    pass


class TieError(ValueError):
    """Raised when a mean vector has ties that decide the answer."""


class InfeasibleTask(ValueError):
    """A pair of the task has both arms at zero cost, so no allocation of
    paid samples can separate them."""


class UnsupportedError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class InvalidObservation(ValueError):
    pass


class SolverFailure(RuntimeError):
    """The allocation solver hit its iteration cap.

    ``best`` holds the best iterate found (an OracleResult).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
