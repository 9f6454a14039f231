"""Exception hierarchy shared by every module."""


class BetaGeomError(Exception):
    """Base class for all package errors."""


class DomainError(BetaGeomError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class MomentDoesNotExist(BetaGeomError, ArithmeticError):
    """A requested moment of the beta-geometric law is infinite."""


class MissingMomentsError(BetaGeomError):
    """A summary-only sample was given where the raw delays are needed."""


class EstimationError(BetaGeomError):
    """An estimator could not produce a valid estimate."""


class InvalidMomentRegion(EstimationError):
    """Sample moments fall outside the region where moment estimates exist."""


class DegenerateDataError(EstimationError):
    """The sample carries no information about overdispersion (e.g. all zeros)."""


class ConvergenceError(EstimationError):
    """Newton iterations stopped without reaching the score tolerance."""

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class DivergenceError(ConvergenceError):
    """An iterate drifted to the boundary of the parameter space."""


class ConfigError(BetaGeomError):
    """A simulation config failed validation; ``path`` names the bad field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class ParseError(BetaGeomError):
    """Input data could not be parsed."""

    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
