"""Exception types raised by porosplit."""


class InvalidMaterialError(ValueError):
    """Material data violates a positivity or symmetry requirement."""


class ConfigError(ValueError):
    """A mesh, boundary-condition or scenario setting is out of range."""


class ContractError(ValueError):
    """Vector sizes do not match the degree-of-freedom layout."""


class SolverError(RuntimeError):
    """A linear solve broke down (singular or indefinite operator)."""

    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


class ConvergenceError(RuntimeError):
    """An iterative coupling run hit its iteration budget."""

    def __init__(self, message, step=None, report=None):
        super().__init__(message)
        self.step = step
        self.report = report
