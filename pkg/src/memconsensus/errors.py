"""Exception types raised across the toolkit."""


class ParameterError(ValueError):
    """Invalid model or control parameters."""


class GraphFormatError(ValueError):
    """Malformed edge-list input."""


class GenerationError(RuntimeError):
    """A random graph model failed to produce a connected instance."""


class ConnectivityError(ValueError):
    """The network is disconnected (algebraic connectivity is zero)."""


class DomainError(ValueError):
    """Argument outside the domain of a numerical routine."""


class ComputationError(RuntimeError):
    """A numerical kernel (eigensolver, root finder) failed."""


class ConvergenceFloor(ArithmeticError):
    """Error series reached exact zero inside the fitting window."""


class OptimizationError(RuntimeError):
    """Gradient descent produced a non-finite objective.

    The last iterate with a finite objective is kept on ``last_theta`` and
    ``last_value``.
    """

    def __init__(self, message, last_theta=None, last_value=None):
        super().__init__(message)
        self.last_theta = last_theta
        self.last_value = last_value
