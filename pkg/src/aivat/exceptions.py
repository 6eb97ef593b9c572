"""Exception types raised across the package.

Validation failures subclass :class:`ValueError` so they compose with
scikit-learn style input checking; the CLI maps them to exit code 2.
"""


class AivatError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AivatError, ValueError):
    """Input data violates a documented invariant."""


class InvalidHistoryError(ValidationError):
    pass


class InvalidArgumentError(ValidationError):
    pass


class TooLargeError(AivatError):
    """Exhaustive enumeration would exceed the configured guard."""


class InsufficientDataError(ValidationError):
    pass


class DegenerateVariateError(ValidationError):
    pass


class MissingStrategyError(ValidationError):
    pass


class DegenerateGroupError(ValidationError):
    """An imaginary-observation group has zero total reach probability."""


class MissingHeuristicValueError(ValidationError):
    pass


class FeatureDimensionError(ValidationError):
    pass


class HyperplaneDegeneracyError(ValidationError):
    """The centered second-moment matrix of the psi vectors is singular.

    This happens exactly when every psi vector lies on a common hyperplane,
    e.g. when a feature is constant within every correction group.
    """


class InvalidDataError(ValidationError):
    pass


class InvalidCovarianceError(ValidationError):
    pass


class InfiniteWeightError(ValidationError):
    pass


class DegenerateStatisticError(ValidationError):
    pass


class DivergenceError(AivatError):
    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"objective became non-finite at iteration {iteration}")


class ParseError(ValidationError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class DecompositionError(ValidationError):
    pass


class MissingSeedError(InvalidArgumentError):
    pass


class CommitmentError(AivatError):
    """Evaluation was requested on the data the heuristic was fitted on."""
